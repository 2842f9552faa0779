"""Monte Carlo experiment harness.

Every trial draws its channel, messages, noise and CSI error from its own
random streams keyed by ``(seed, trial, purpose)``, so all schemes see the
same realizations at a given trial index and the results do not depend on
how trials are split across workers. Trials are processed in fixed-size
batches and reduced strictly in trial order.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, rbc, streams
from .channel import DEFAULT_COND_CAP, perturb_csi, realize
from .cip import DEFAULT_FSQP_CAP, Strategy, precode, precode_psqp, predict_signs, assemble, _fsqp_instance, hamming
from .errors import ConfigurationError, NumericalError, SingularChannelError, SizeError

__all__ = [
    "EXPERIMENTS",
    "SchemeSpec",
    "ExperimentConfig",
    "SerRecord",
    "CsiRecord",
    "CcdfRecord",
    "SignPredRecord",
    "PropRecord",
    "RunManifest",
    "Counters",
    "load_config",
    "parse_config",
    "run_ser",
    "run_csi_sweep",
    "sample_alpha2",
    "run_ccdf_alpha",
    "run_sign_pred",
    "sign_pred_summary",
    "run_props",
    "run_experiment",
    "emit",
    "records_to_csv",
    "snr_at_ser",
    "ccdf_quantile_db",
]

EXPERIMENTS = ("ser", "ccdf_alpha", "sign_pred", "csi_sweep", "props")

_DEFAULT_STRATEGY = {
    rbc.Scheme.QAM: Strategy.LCQP,
    rbc.Scheme.PSK: Strategy.LCQP,
}


@dataclass(frozen=True)
class SchemeSpec:
    """One curve of an experiment: constellation, solver and size."""

    scheme: rbc.Scheme
    strategy: str
    M: int

    @classmethod
    def parse(cls, text: str, default_M: int, default_strategy: str) -> "SchemeSpec":
        """Parse ``name[:strategy][@M]``, e.g. ``rmqam:fsqp@16``."""
        body, _, size = text.strip().partition("@")
        name, _, strat = body.partition(":")
        try:
            scheme = rbc.Scheme.parse(name)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        strat = strat.strip().lower() or _DEFAULT_STRATEGY.get(scheme, default_strategy)
        if strat not in Strategy.ALL:
            raise ConfigurationError(f"unknown strategy {strat!r}")
        if strat == Strategy.LCQP and scheme in (rbc.Scheme.MEQAM, rbc.Scheme.RMQAM):
            raise ConfigurationError(f"{scheme.value} has sign-flexible regions; use psqp or fsqp")
        try:
            M = int(size) if size else int(default_M)
        except ValueError as exc:
            raise ConfigurationError(f"bad constellation size in {text!r}") from exc
        return cls(scheme, strat, M)

    @property
    def label(self) -> str:
        return f"{self.scheme.value}:{self.strategy}@{self.M}"

    def constellation(self) -> rbc.RbcConstellation:
        return rbc.build_constellation(self.scheme, self.M)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    K: int
    Nt: int
    M: int
    schemes: tuple
    seed: int
    trials: int
    snr_grid_db: tuple = ()
    sigma_e2_grid_db: tuple = ()
    alpha2_grid_db: tuple = ()
    target_errors: int = 200
    fsqp_cap: int = DEFAULT_FSQP_CAP
    fsqp_fallback: bool = True
    cond_cap: float = DEFAULT_COND_CAP
    batch_size: int = 64
    prop4_trials: int = 500
    ser_bound_symbols: int = 200000
    ser_bound_sigma2: tuple = (0.5, 1.0, 2.0)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        if self.K < 1 or self.Nt < self.K:
            raise ConfigurationError(f"need 1 <= K <= Nt, got K={self.K}, Nt={self.Nt}")
        if self.trials <= 0 or self.batch_size <= 0 or self.target_errors <= 0:
            raise ConfigurationError("trials, batch_size and target_errors must be positive")
        if self.experiment != "props" and not self.schemes:
            raise ConfigurationError("at least one scheme is required")
        need = {"ser": "snr_grid_db", "csi_sweep": "sigma_e2_grid_db", "ccdf_alpha": "alpha2_grid_db"}
        key = need.get(self.experiment)
        if key and not getattr(self, key):
            raise ConfigurationError(f"{key} must be nonempty for {self.experiment}")
        if self.experiment == "csi_sweep" and len(self.snr_grid_db) != 1:
            raise ConfigurationError("csi_sweep needs exactly one SNR value")
        for s in self.schemes:
            try:
                s.constellation()
            except ConfigurationError as exc:
                raise ConfigurationError(f"{s.label}: {exc}") from exc

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d["schemes"] = [s.label for s in self.schemes]
        return d


def _grid(text: str) -> tuple:
    """Comma list of floats; ``a:b:step`` items expand to inclusive ranges."""
    out = []
    for item in text.replace("\n", ",").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if ":" in item:
                a, b, step = (float(v) for v in item.split(":"))
                n = int(math.floor((b - a) / step + 1e-9)) + 1
                out.extend(round(a + i * step, 10) for i in range(n))
            else:
                out.append(float(item))
        except ValueError as exc:
            raise ConfigurationError(f"bad grid entry {item!r}") from exc
    return tuple(out)


_INT_KEYS = ("K", "Nt", "M", "trials", "target_errors", "fsqp_cap", "batch_size", "prop4_trials", "ser_bound_symbols")


def parse_config(text: str, experiment: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Build a config from INI text with a single ``[experiment]`` section."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"unreadable config: {exc}") from exc
    if not cp.has_section("experiment"):
        raise ConfigurationError("config needs an [experiment] section")
    sec = dict(cp["experiment"])
    kind = sec.pop("experiment", None) or experiment
    if experiment and kind != experiment:
        raise ConfigurationError(f"config is for {kind!r}, not {experiment!r}")
    kw = {"experiment": kind}
    try:
        for k in _INT_KEYS:
            if k in sec:
                kw[k] = int(sec.pop(k))
        file_seed = int(sec.pop("seed", 0))
        kw["seed"] = file_seed if seed is None else int(seed)
        if "cond_cap" in sec:
            kw["cond_cap"] = float(sec.pop("cond_cap"))
        if "fsqp_fallback" in sec:
            v = sec.pop("fsqp_fallback").strip().lower()
            if v not in ("true", "false", "yes", "no", "1", "0"):
                raise ConfigurationError(f"fsqp_fallback must be boolean, got {v!r}")
            kw["fsqp_fallback"] = v in ("true", "yes", "1")
    except ValueError as exc:
        raise ConfigurationError(f"bad numeric value: {exc}") from exc
    for k in ("snr_grid_db", "sigma_e2_grid_db", "alpha2_grid_db", "ser_bound_sigma2"):
        if k in sec:
            kw[k] = _grid(sec.pop(k))
    for k in ("K", "Nt", "M", "trials"):
        if k not in kw:
            raise ConfigurationError(f"missing required key {k!r}")
    strategy = sec.pop("strategy", Strategy.PSQP).strip().lower()
    names = [s for s in sec.pop("schemes", "").split(",") if s.strip()]
    kw["schemes"] = tuple(SchemeSpec.parse(s, kw["M"], strategy) for s in names)
    if sec:
        raise ConfigurationError(f"unknown config keys: {', '.join(sorted(sec))}")
    return ExperimentConfig(**kw)


def load_config(path, experiment: str | None = None, seed: int | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, experiment, seed)


@dataclass(frozen=True)
class SerRecord:
    scheme: str
    strategy: str
    M: int
    snr_db: float
    symbol_errors: int
    symbols: int
    ser: float
    stderr: float
    union_bound: float


@dataclass(frozen=True)
class CsiRecord:
    scheme: str
    strategy: str
    M: int
    snr_db: float
    sigma_e2_db: float
    symbol_errors: int
    symbols: int
    ser: float
    stderr: float


@dataclass(frozen=True)
class CcdfRecord:
    scheme: str
    strategy: str
    M: int
    alpha2_db: float
    ccdf: float
    samples: int


@dataclass(frozen=True)
class SignPredRecord:
    scheme: str
    M: int
    trial: int
    n_sf: int
    d_h: int
    alpha2_ps: float
    alpha2_fs: float


@dataclass(frozen=True)
class PropRecord:
    name: str
    bound_value: float
    empirical_value: float
    samples: int
    standard_error: float
    passed: bool
    detail: str


@dataclass
class Counters:
    """Rare events a run survived; reported in the manifest."""

    channel_resamples: int = 0
    fsqp_fallbacks: int = 0
    excluded: int = 0
    notes: list = field(default_factory=list)

    def merge(self, other: "Counters") -> None:
        self.channel_resamples += other.channel_resamples
        self.fsqp_fallbacks += other.fsqp_fallbacks
        self.excluded += other.excluded
        self.notes.extend(other.notes)


@dataclass
class RunManifest:
    config: dict
    seed: int
    version: str
    cond_cap: float
    counters: Counters
    wall_time_s: float = 0.0
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _version() -> str:
    from . import __version__

    return __version__


# -- per-trial machinery ----------------------------------------------------


def _messages(cfg, trial, M):
    # uniform draws shared by all schemes, quantized per constellation size
    u = streams.trial_stream(cfg.seed, trial, streams.MESSAGES).random(cfg.K)
    return np.minimum((u * M).astype(int), M - 1)


def _noise(cfg, trial):
    g = streams.trial_stream(cfg.seed, trial, streams.NOISE).standard_normal((2, cfg.K))
    return (g[0] + 1j * g[1]) * math.sqrt(0.5)


def _precode(spec, const, chan, m, cfg, ctr, trial):
    """Precode one trial for one curve; ``None`` when the trial is excluded."""
    try:
        return precode(const, chan, m, spec.strategy, cfg.fsqp_cap)
    except SizeError:
        if cfg.fsqp_fallback:
            ctr.fsqp_fallbacks += 1
            ctr.notes.append(f"trial {trial} {spec.label}: FS-QP cap exceeded, PS-QP used")
            return precode_psqp(const, chan, m)
        ctr.excluded += 1
        ctr.notes.append(f"trial {trial} {spec.label}: FS-QP cap exceeded, excluded")
    except NumericalError as exc:
        ctr.excluded += 1
        ctr.notes.append(f"trial {trial} {spec.label}: {type(exc).__name__}, excluded")
    return None


def _channel(cfg, trial, ctr):
    chan, n = analysis.draw_realization(cfg.seed, trial, cfg.K, cfg.Nt, cfg.cond_cap)
    ctr.channel_resamples += n
    return chan


def _snr_sigma(snr_db):
    return math.sqrt(10.0 ** (-snr_db / 10.0))


def _ser_batch(cfg, trials, active):
    """Per-trial error counts for the SNR curves.

    Returns ``(errors[t, scheme, snr], alpha2[t, scheme], ok[t, scheme], ctr)``.
    Inactive schemes are skipped and reported as not ok.
    """
    ctr = Counters()
    consts = [s.constellation() for s in cfg.schemes]
    S, P = len(cfg.schemes), len(cfg.snr_grid_db)
    sig = np.array([_snr_sigma(x) for x in cfg.snr_grid_db])
    errors = np.zeros((len(trials), S, P), dtype=np.int64)
    alpha2 = np.zeros((len(trials), S))
    ok = np.zeros((len(trials), S), dtype=bool)
    for i, t in enumerate(trials):
        chan = _channel(cfg, t, ctr)
        v = _noise(cfg, t)
        for j, (spec, c) in enumerate(zip(cfg.schemes, consts)):
            if not active[j]:
                continue
            m = _messages(cfg, t, c.M)
            out = _precode(spec, c, chan, m, cfg, ctr, t)
            if out is None:
                continue
            a = math.sqrt(out.alpha2)
            y = out.s[None, :] + (a * sig)[:, None] * v[None, :]
            errors[i, j] = np.count_nonzero(c.detect(y) != m[None, :], axis=1)
            alpha2[i, j] = out.alpha2
            ok[i, j] = True
    return errors, alpha2, ok, ctr


def _csi_batch(cfg, trials, active):
    """Per-trial error counts over the CSI-error grid at a single SNR."""
    ctr = Counters()
    consts = [s.constellation() for s in cfg.schemes]
    S, P = len(cfg.schemes), len(cfg.sigma_e2_grid_db)
    sigma = _snr_sigma(cfg.snr_grid_db[0])
    errors = np.zeros((len(trials), S, P), dtype=np.int64)
    ok = np.zeros((len(trials), S, P), dtype=bool)
    e2 = [10.0 ** (x / 10.0) for x in cfg.sigma_e2_grid_db]
    for i, t in enumerate(trials):
        chan = _channel(cfg, t, ctr)
        v = _noise(cfg, t)
        for p, sigma_e2 in enumerate(e2):
            if not active[:, p].any():
                continue
            # same error draw at every grid point, only its scale changes
            H_hat = perturb_csi(chan.H, sigma_e2, streams.trial_stream(cfg.seed, t, streams.CSI_ERROR))
            if sigma_e2 == 0:
                est = chan
            else:
                try:
                    est = realize(H_hat, cfg.cond_cap)
                except SingularChannelError:
                    ctr.excluded += 1
                    ctr.notes.append(f"trial {t}: singular channel estimate, excluded")
                    continue
            for j, (spec, c) in enumerate(zip(cfg.schemes, consts)):
                if not active[j, p]:
                    continue
                m = _messages(cfg, t, c.M)
                out = _precode(spec, c, est, m, cfg, ctr, t)
                if out is None:
                    continue
                a = math.sqrt(out.alpha2)
                if sigma_e2 == 0:
                    y = out.s + a * sigma * v
                else:
                    x = est.H.conj().T @ np.linalg.solve(est.H @ est.H.conj().T, out.s)
                    y = chan.H @ x + a * sigma * v
                errors[i, j, p] = np.count_nonzero(c.detect(y) != m)
                ok[i, j, p] = True
    return errors, ok, ctr


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("CIFORGE_WORKERS", "1")))
    except ValueError as exc:
        raise ConfigurationError("CIFORGE_WORKERS must be an integer") from exc


def _batched(cfg, fn, is_active, consume, workers=None):
    """Drive ``fn`` over trial batches in order until ``is_active`` is all
    false or the trial budget is spent; ``consume`` reduces each batch."""
    workers = _workers() if workers is None else workers
    ctr = Counters()
    starts = list(range(0, cfg.trials, cfg.batch_size))

    def trials_of(b):
        return list(range(b, min(b + cfg.batch_size, cfg.trials)))

    if workers == 1:
        for b in starts:
            act = is_active()
            if not act.any():
                break
            *res, c = fn(cfg, trials_of(b), act)
            ctr.merge(c)
            consume(trials_of(b), *res)
        return ctr
    with ProcessPoolExecutor(workers) as pool:
        pending = []
        it = iter(starts)
        while True:
            while len(pending) < workers:
                b = next(it, None)
                act = is_active()
                if b is None or not act.any():
                    break
                pending.append((b, pool.submit(fn, cfg, trials_of(b), act)))
            if not pending:
                break
            b, fut = pending.pop(0)
            *res, c = fut.result()
            ctr.merge(c)
            consume(trials_of(b), *res)
    return ctr


def _stderr(e, n):
    if n == 0:
        return 0.0
    p = e / n
    return math.sqrt(p * (1 - p) / n)


def _run_ser(cfg, workers=None):
    S, P = len(cfg.schemes), len(cfg.snr_grid_db)
    err = np.zeros((S, P), dtype=np.int64)
    sym = np.zeros((S, P), dtype=np.int64)
    ub = np.zeros((S, P))
    done = np.zeros((S, P), dtype=bool)
    sig2 = np.array([10.0 ** (-x / 10.0) for x in cfg.snr_grid_db])
    consts = [s.constellation() for s in cfg.schemes]

    def consume(trials, errors, alpha2, ok):
        for i in range(len(trials)):
            for j in range(S):
                if not ok[i, j]:
                    continue
                live = ~done[j]
                err[j, live] += errors[i, j, live]
                sym[j, live] += cfg.K
                ub[j, live] += cfg.K * analysis.union_bound(consts[j].M, consts[j].d_min, alpha2[i, j], sig2[live])
                done[j] |= err[j] >= cfg.target_errors

    ctr = _batched(cfg, _ser_batch, lambda: ~done.all(axis=1), consume, workers)
    recs = []
    for j, spec in enumerate(cfg.schemes):
        for p, snr in enumerate(cfg.snr_grid_db):
            n = int(sym[j, p])
            e = int(err[j, p])
            recs.append(
                SerRecord(
                    spec.scheme.value, spec.strategy, spec.M, float(snr), e, n,
                    e / n if n else 0.0, _stderr(e, n), float(ub[j, p] / n) if n else 0.0,
                )
            )
    return recs, ctr


def run_ser(cfg: ExperimentConfig, workers: int | None = None) -> list:
    """SER versus transmit SNR, one record per (curve, SNR point).

    Each curve precodes a trial once and reuses it for every SNR point.
    A point stops accumulating once it reaches ``target_errors``.
    ``union_bound`` is the trial average of the per-realization bound.
    """
    return _run_ser(cfg, workers)[0]


def _run_csi(cfg, workers=None):
    S, P = len(cfg.schemes), len(cfg.sigma_e2_grid_db)
    err = np.zeros((S, P), dtype=np.int64)
    sym = np.zeros((S, P), dtype=np.int64)
    done = np.zeros((S, P), dtype=bool)

    def consume(trials, errors, ok):
        for i in range(len(trials)):
            live = ~done & ok[i]
            err[live] += errors[i][live]
            sym[live] += cfg.K
            done[:] |= err >= cfg.target_errors

    ctr = _batched(cfg, _csi_batch, lambda: ~done, consume, workers)
    recs = []
    for j, spec in enumerate(cfg.schemes):
        for p, e2 in enumerate(cfg.sigma_e2_grid_db):
            n, e = int(sym[j, p]), int(err[j, p])
            recs.append(
                CsiRecord(
                    spec.scheme.value, spec.strategy, spec.M, float(cfg.snr_grid_db[0]), float(e2),
                    e, n, e / n if n else 0.0, _stderr(e, n),
                )
            )
    return recs, ctr


def run_csi_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list:
    """SER versus CSI error variance at a fixed SNR.

    Precoding uses the estimate; the signal passes through the true
    channel and the receiver rescales by the transmitter's alpha.
    """
    return _run_csi(cfg, workers)[0]


def _alpha_batch(cfg, trials, active):
    ctr = Counters()
    consts = [s.constellation() for s in cfg.schemes]
    out = np.full((len(trials), len(cfg.schemes)), np.nan)
    for i, t in enumerate(trials):
        chan = _channel(cfg, t, ctr)
        for j, (spec, c) in enumerate(zip(cfg.schemes, consts)):
            o = _precode(spec, c, chan, _messages(cfg, t, c.M), cfg, ctr, t)
            if o is not None:
                out[i, j] = o.alpha2
    return out, ctr


def _sample_alpha2(cfg, workers=None):
    rows = []
    ctr = _batched(cfg, _alpha_batch, lambda: np.ones(1, dtype=bool), lambda t, a: rows.append(a), workers)
    a = np.vstack(rows)
    return {s.label: 10.0 * np.log10(a[~np.isnan(a[:, j]), j]) for j, s in enumerate(cfg.schemes)}, ctr


def sample_alpha2(cfg: ExperimentConfig, workers: int | None = None) -> dict:
    """alpha2 samples in dB for every curve, keyed by ``SchemeSpec.label``."""
    return _sample_alpha2(cfg, workers)[0]


def ccdf_quantile_db(samples_db, level: float) -> float:
    """alpha2 (dB) at which the empirical CCDF equals ``level``."""
    return float(np.quantile(np.asarray(samples_db), 1.0 - level))


def _ccdf_records(cfg, samples):
    grid = np.asarray(cfg.alpha2_grid_db)
    recs = []
    for spec in cfg.schemes:
        x = np.sort(samples[spec.label])
        n = x.size
        tail = (n - np.searchsorted(x, grid, side="right")) / n if n else np.zeros_like(grid)
        recs.extend(
            CcdfRecord(spec.scheme.value, spec.strategy, spec.M, float(g), float(p), int(n)) for g, p in zip(grid, tail)
        )
    return recs


def run_ccdf_alpha(cfg: ExperimentConfig, workers: int | None = None) -> list:
    """Empirical CCDF ``Pr(alpha2 > g)`` on the configured dB grid."""
    return _ccdf_records(cfg, sample_alpha2(cfg, workers))


def _signpred_batch(cfg, trials, active):
    ctr = Counters()
    consts = [s.constellation() for s in cfg.schemes]
    recs = []
    for t in trials:
        chan = _channel(cfg, t, ctr)
        for spec, c in zip(cfg.schemes, consts):
            m = _messages(cfg, t, c.M)
            try:
                inst = assemble(c, chan, m)
                psi_hat = predict_signs(inst, chan.Hd)
                ps = precode_psqp(c, chan, m)
                fs = _fsqp_instance(inst, cfg.fsqp_cap)
            except SizeError:
                ctr.excluded += 1
                ctr.notes.append(f"trial {t} {spec.label}: FS-QP cap exceeded, excluded")
                continue
            except NumericalError as exc:
                ctr.excluded += 1
                ctr.notes.append(f"trial {t} {spec.label}: {type(exc).__name__}, excluded")
                continue
            recs.append(
                SignPredRecord(
                    spec.scheme.value, spec.M, t, int(inst.sf_idx.size),
                    hamming(psi_hat, np.asarray(fs.psi, dtype=int)), ps.alpha2, fs.alpha2,
                )
            )
    return recs, ctr


def run_sign_pred(cfg: ExperimentConfig, workers: int | None = None) -> list:
    """Per-realization sign prediction records: d_H and paired alpha2."""
    return _run_signpred(cfg, workers)[0]


def _run_signpred(cfg, workers=None):
    for s in cfg.schemes:
        if s.scheme not in (rbc.Scheme.MEQAM, rbc.Scheme.RMQAM):
            raise ConfigurationError("sign prediction needs ME-QAM or RM-QAM curves")
    recs = []
    ctr = _batched(cfg, _signpred_batch, lambda: np.ones(1, dtype=bool), lambda t, r: recs.extend(r), workers)
    return recs, ctr


def sign_pred_summary(records, level: float = 1e-2) -> dict:
    """Pr(d_H = 0), Pr(d_H > 3) and the PS/FS alpha2 quantile gap per curve."""
    out = {}
    keys = sorted({(r.scheme, r.M) for r in records})
    for scheme, M in keys:
        rs = [r for r in records if r.scheme == scheme and r.M == M]
        d = np.array([r.d_h for r in rs])
        ps = 10 * np.log10([r.alpha2_ps for r in rs])
        fs = 10 * np.log10([r.alpha2_fs for r in rs])
        out[f"{scheme}@{M}"] = {
            "samples": len(rs),
            "p_dh0": float(np.mean(d == 0)),
            "p_dh_gt3": float(np.mean(d > 3)),
            "gap_db": ccdf_quantile_db(ps, level) - ccdf_quantile_db(fs, level),
        }
    return out


def run_props(cfg: ExperimentConfig) -> list:
    """One record per analytical check, each with its pass verdict."""
    K, Nt, M, n, seed = cfg.K, cfg.Nt, cfg.M, cfg.trials, cfg.seed
    L = int(round(math.sqrt(M)))
    recs = []

    def add(r, passed, detail=""):
        recs.append(PropRecord(r.name, r.bound_value, r.empirical_value, r.samples, r.standard_error, bool(passed), detail))

    r = analysis.prop1_check(n, K, Nt, M, seed)
    add(r, r.empirical_value >= r.bound_value - 3 * r.standard_error)
    r = analysis.prop2_alignment(n, K, Nt, M, seed)
    add(r, abs(r.empirical_value - r.bound_value) <= 0.05)
    r = analysis.prop3_alignment(n, K, Nt, M, seed)
    add(r, abs(r.empirical_value - r.bound_value) <= 0.05 and r.extra["guarantee_ok"], f"guarantee_ok={r.extra['guarantee_ok']}")
    r = analysis.prop4_check(cfg.prop4_trials, K, Nt, M, seed, cfg.fsqp_cap)
    add(r, r.empirical_value == 1.0, f"min_margin={r.extra['min_margin']:.3g} skipped={r.extra['skipped']}")
    for scheme in (rbc.Scheme.MEQAM, rbc.Scheme.RMQAM):
        for k, s2 in enumerate(cfg.ser_bound_sigma2):
            rng = streams.trial_stream(seed, k, streams.NOISE)
            r = analysis.ser_bound_check(scheme, L, s2, cfg.ser_bound_symbols, rng)
            add(r, r.empirical_value <= r.bound_value + 3 * r.standard_error, f"sigma_bar2={s2:g}")
    return recs


def snr_at_ser(records, scheme: str, strategy: str, target: float, M: int | None = None) -> float:
    """SNR (dB) where a curve crosses ``target``, by log-linear interpolation.

    Returns ``nan`` if the curve does not bracket the target.
    """
    pts = sorted(
        (r.snr_db, r.ser)
        for r in records
        if r.scheme == scheme and r.strategy == strategy and (M is None or r.M == M) and r.symbols
    )
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if y0 >= target > y1 or (y0 > target >= y1):
            if y1 <= 0:
                return x1
            f = (math.log10(y0) - math.log10(target)) / (math.log10(y0) - math.log10(y1))
            return x0 + f * (x1 - x0)
    return float("nan")


def run_experiment(cfg: ExperimentConfig, workers: int | None = None):
    """Run the configured experiment. Returns ``(records, manifest)``."""
    t0 = time.perf_counter()
    summary = {}
    if cfg.experiment == "ser":
        recs, ctr = _run_ser(cfg, workers)
    elif cfg.experiment == "csi_sweep":
        recs, ctr = _run_csi(cfg, workers)
    elif cfg.experiment == "ccdf_alpha":
        samples, ctr = _sample_alpha2(cfg, workers)
        recs = _ccdf_records(cfg, samples)
        summary = {k: {"q_1e-2_db": ccdf_quantile_db(v, 1e-2), "median_db": ccdf_quantile_db(v, 0.5)} for k, v in samples.items()}
    elif cfg.experiment == "sign_pred":
        recs, ctr = _run_signpred(cfg, workers)
        summary = sign_pred_summary(recs) if recs else {}
    else:
        recs, ctr = run_props(cfg), Counters()
    man = RunManifest(cfg.echo(), cfg.seed, _version(), cfg.cond_cap, ctr, time.perf_counter() - t0, summary)
    return recs, man


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "{:.12g}".format(float(v))
    return str(v)


def records_to_csv(records) -> str:
    """CSV text with the record fields as columns, in declaration order."""
    if not records:
        raise ValueError("no records to write")
    cols = [f.name for f in dataclasses.fields(records[0])]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([_fmt(getattr(r, c)) for c in cols])
    return buf.getvalue()


def emit(records, out_dir, stem: str, manifest: RunManifest | None = None) -> dict:
    """Write ``<stem>.csv``, its JSON mirror and the manifest.

    Nothing is written when ``records`` is empty. Returns the paths.
    """
    text = records_to_csv(records)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / f"{stem}.csv", "json": out / f"{stem}.json"}
    paths["csv"].write_text(text)
    rows = [dataclasses.asdict(r) for r in records]
    paths["json"].write_text(json.dumps(rows, indent=1) + "\n")
    if manifest is not None:
        paths["manifest"] = out / f"{stem}.manifest.json"
        paths["manifest"].write_text(json.dumps(manifest.to_dict(), indent=1, default=_json_default) + "\n")
    return paths


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")
