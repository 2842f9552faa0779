"""Numerical checks of the analytical results on QAM-based CIP and the
proposed constellations: the relaxed-objective lower bound, sign
(mis)alignment statistics, the free-DoF gain bound, and SER bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erfc

from . import rbc, streams
from .channel import DEFAULT_COND_CAP, realize, sample_channel
from .cip import DEFAULT_FSQP_CAP, CipInstance, _fsqp_instance, _solve, assemble
from .errors import ConfigurationError, SingularChannelError, SingularSubblockError
from .qp import solve_fixed

__all__ = [
    "RelaxedSolve",
    "BoundReport",
    "qfunc",
    "interior_energy",
    "prop1_bound",
    "relaxed_solve",
    "prop1_check",
    "prop2_alignment",
    "prop3_alignment",
    "prop4_delta",
    "prop4_check",
    "union_bound",
    "scheme_ser_bound",
    "ser_bound_check",
    "draw_realization",
    "round_half_up",
]


@dataclass(frozen=True)
class RelaxedSolve:
    s_prime: np.ndarray
    alpha_prime2: float
    end_idx: np.ndarray
    z_prime: np.ndarray
    z: np.ndarray


@dataclass(frozen=True)
class BoundReport:
    name: str
    bound_value: float
    empirical_value: float
    samples: int
    standard_error: float
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.samples <= 0 or self.standard_error < 0:
            raise ValueError("report needs positive samples and nonnegative standard error")


def qfunc(x):
    """Standard normal tail probability."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _check_L(L):
    if int(L) != L or L < 4 or L % 2:
        raise ConfigurationError(f"L must be an even integer >= 4, got {L}")


def interior_energy(L: int) -> float:
    """Mean squared amplitude of the interior PAM levels."""
    _check_L(L)
    return sum((2 * l - L + 1) ** 2 for l in range(1, L - 1)) / (L - 2)


def prop1_bound(L: int, eta: float) -> float:
    """Lower bound on the expected relaxed objective for antenna ratio ``eta``."""
    _check_L(L)
    den = eta * L / (L - 2) - 1.0
    if eta < 1 or den <= 0:
        raise ConfigurationError("bound undefined for this antenna ratio")
    return 2.0 * interior_energy(L) / den


def relaxed_solve(inst: CipInstance) -> RelaxedSolve:
    """Drop the end-symbol constraints of a QAM instance and keep only the
    interior equalities."""
    if inst.scheme != rbc.Scheme.QAM:
        raise ConfigurationError("relaxed_solve expects a QAM instance")
    sol = solve_fixed(inst.Q, inst.fixed_idx, inst.fixed_val)
    minus, plus = inst.partitions["I_minus"], inst.partitions["I_plus"]
    end = np.sort(np.concatenate([minus, plus]))
    z = np.where(np.isin(end, plus), 1, -1)
    zp = np.where(sol.x[end] < 0, -1, 1)
    return RelaxedSolve(sol.x, sol.objective, end, zp, z)


def draw_realization(seed, trial, K, Nt, cond_cap=DEFAULT_COND_CAP):
    """Channel for one trial, resampled from the same stream if singular.

    Returns ``(realization, resample_count)``.
    """
    rng = streams.trial_stream(seed, trial, streams.CHANNEL)
    resamples = 0
    while True:
        H = sample_channel(K, Nt, rng)
        try:
            return realize(H, cond_cap), resamples
        except SingularChannelError:
            resamples += 1


def _messages(seed, trial, K, M):
    return streams.trial_stream(seed, trial, streams.MESSAGES).integers(0, M, K)


def prop1_check(trials: int, K: int, Nt: int, M: int, seed: int) -> BoundReport:
    """Monte Carlo mean of the relaxed QAM objective against its bound."""
    c = rbc.build_qam_ci(M)
    vals = np.empty(trials)
    for t in range(trials):
        chan, _ = draw_realization(seed, t, K, Nt)
        inst = assemble(c, chan, _messages(seed, t, K, M))
        vals[t] = relaxed_solve(inst).alpha_prime2
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return BoundReport("prop1", prop1_bound(c.L, Nt / K), float(vals.mean()), trials, se)


def _fraction_report(name, expected, aligned, total, extra=None):
    if total == 0:
        raise ValueError("no end-symbol coordinates were observed")
    p = aligned / total
    return BoundReport(name, expected, p, total, math.sqrt(p * (1 - p) / total), extra or {})


def prop2_alignment(trials: int, K: int, Nt: int, M: int, seed: int, phase: float = 0.0) -> BoundReport:
    """Fraction of end coordinates whose relaxed sign matches the CI-region sign.

    ``phase`` rotates every channel by a common phase, which must leave the
    statistic unchanged.
    """
    c = rbc.build_qam_ci(M)
    aligned = total = 0
    for t in range(trials):
        chan, _ = draw_realization(seed, t, K, Nt)
        if phase:
            chan = realize(chan.H * np.exp(1j * phase))
        r = relaxed_solve(assemble(c, chan, _messages(seed, t, K, M)))
        aligned += int(np.count_nonzero(r.z_prime == r.z))
        total += r.end_idx.size
    return _fraction_report("prop2", 0.5, aligned, total)


def sign_flexible_variant(inst: CipInstance, rng: np.random.Generator, flexible: bool = True) -> CipInstance:
    """QAM instance with half of each end set pinned at its boundary and the
    other half made sign-flexible with bound L-1.

    The variant is not decodable; it only serves the alignment analysis.
    """
    L = int(round(np.max(np.abs(inst.lower_val), initial=0.0) + 1)) if inst.lower_idx.size else None
    if L is None and inst.upper_idx.size:
        L = int(round(-np.min(inst.upper_val) + 1))
    plus = inst.partitions["I_plus"]
    minus = inst.partitions["I_minus"]
    if plus.size + minus.size == 0:
        return inst

    def split(idx):
        if not flexible:
            return idx, np.zeros(0, dtype=int)
        n1 = round_half_up(idx.size / 2)
        perm = rng.permutation(idx)
        return np.sort(perm[:n1]), np.sort(perm[n1:])

    p1, p2 = split(plus)
    m1, m2 = split(minus)
    fixed_idx = np.concatenate([inst.fixed_idx, p1, m1])
    fixed_val = np.concatenate([inst.fixed_val, np.full(p1.size, L - 1.0), np.full(m1.size, -L + 1.0)])
    order = np.argsort(fixed_idx)
    sf = np.sort(np.concatenate([p2, m2]))
    empty_i, empty_f = np.zeros(0, dtype=int), np.zeros(0)
    parts = dict(inst.partitions, I_end_1=np.sort(np.concatenate([p1, m1])), I_end_2=sf)
    return replace(
        inst,
        fixed_idx=fixed_idx[order],
        fixed_val=fixed_val[order],
        lower_idx=empty_i,
        lower_val=empty_f,
        upper_idx=empty_i,
        upper_val=empty_f,
        sf_idx=sf,
        sf_bound=np.full(sf.size, L - 1.0),
        partitions=parts,
    )


def prop3_alignment(
    trials: int, K: int, Nt: int, M: int, seed: int, flexible: bool = True
) -> BoundReport:
    """Alignment fraction when half of the end entries become sign-flexible
    and copy the relaxed signs.

    The variant problem is solved with those signs and the signs of its
    solution are compared with the relaxed signs. ``extra['guarantee_ok']``
    records whether every trial aligned at least ``|I_end,2|`` entries.
    """
    c = rbc.build_qam_ci(M)
    aligned = total = 0
    guarantee_ok = True
    for t in range(trials):
        chan, _ = draw_realization(seed, t, K, Nt)
        inst = assemble(c, chan, _messages(seed, t, K, M))
        r = relaxed_solve(inst)
        if r.end_idx.size == 0:
            continue
        var = sign_flexible_variant(inst, streams.trial_stream(seed, t, streams.PARTITION), flexible)
        zp_of = dict(zip(r.end_idx.tolist(), r.z_prime.tolist()))
        psi = np.array([zp_of[i] for i in var.sf_idx.tolist()], dtype=int)
        sol = _solve(var, psi)
        signs = np.where(sol.x[r.end_idx] < 0, -1, 1)
        n_al = int(np.count_nonzero(signs == r.z_prime))
        guarantee_ok &= n_al >= var.sf_idx.size
        aligned += n_al
        total += r.end_idx.size
    return _fraction_report("prop3", 0.75 if flexible else 0.5, aligned, total, {"guarantee_ok": guarantee_ok})


def prop4_delta(inst: CipInstance, s_star, I_B=None, rng=None, cap: int = DEFAULT_FSQP_CAP):
    """Objective reduction from freeing part of the sign-flexible set.

    Returns ``(delta, delta_lb)`` where ``delta`` comes from re-solving the
    problem (full search over the remaining signs) with the entries in
    ``I_B`` unconstrained, and ``delta_lb = g_B^T Q_BB^{-1} g_B`` with
    ``g = Q s_star``.
    """
    x = np.asarray(s_star)
    if np.iscomplexobj(x) or x.size == inst.K:
        x = np.concatenate([np.real(x), np.imag(x)])
    x = x.astype(float)
    sf = inst.sf_idx
    if I_B is None:
        I_B = np.sort(rng.choice(sf, round_half_up(sf.size / 2), replace=False)) if sf.size else sf
    I_B = np.asarray(I_B, dtype=int)
    if not np.all(np.isin(I_B, sf)):
        raise ValueError("I_B must be a subset of the sign-flexible indices")
    if I_B.size == 0:
        return 0.0, 0.0
    Q = inst.Q
    g = Q @ x
    QBB = Q[np.ix_(I_B, I_B)]
    try:
        delta_lb = float(g[I_B] @ np.linalg.solve(QBB, g[I_B]))
    except np.linalg.LinAlgError as exc:
        raise SingularSubblockError(str(exc)) from exc
    keep = ~np.isin(sf, I_B)
    relaxed = replace(
        inst,
        sf_idx=sf[keep],
        sf_bound=inst.sf_bound[keep],
        free_idx=np.sort(np.concatenate([inst.free_idx, I_B])),
    )
    alpha2_relaxed = _fsqp_instance(relaxed, cap).alpha2
    return float(x @ Q @ x) - alpha2_relaxed, delta_lb


def prop4_check(trials: int, K: int, Nt: int, M: int, seed: int, cap: int = DEFAULT_FSQP_CAP) -> BoundReport:
    """Check ``delta >= delta_lb`` on solved ME-QAM instances.

    Instances whose sign-flexible set exceeds ``cap`` are skipped.
    ``empirical_value`` is the fraction of instances satisfying the bound.
    """
    c = rbc.build_meqam(M)
    ok = n = skipped = 0
    worst = math.inf
    for t in range(trials):
        chan, _ = draw_realization(seed, t, K, Nt)
        inst = assemble(c, chan, _messages(seed, t, K, M))
        if inst.sf_idx.size > cap:
            skipped += 1
            continue
        star = _fsqp_instance(inst, cap)
        d, lb = prop4_delta(inst, star.s, rng=streams.trial_stream(seed, t, streams.PARTITION), cap=cap)
        worst = min(worst, d - lb)
        ok += d >= lb - 1e-8
        n += 1
    return BoundReport("prop4", 1.0, ok / n, n, 0.0, {"min_margin": worst, "skipped": skipped})


def union_bound(M, d_min, alpha2, sigma2):
    """Union bound ``(M-1) Q(sqrt(d_min^2 / (2 alpha2 sigma2)))``."""
    arg = np.sqrt(np.asarray(d_min, dtype=float) ** 2 / (2.0 * np.asarray(alpha2) * np.asarray(sigma2)))
    return (M - 1) * qfunc(arg)


_SER_COEF = {
    rbc.Scheme.MEQAM: lambda L: (4 * L - 2) / L,
    rbc.Scheme.RMQAM: lambda L: (4 * L * L - 3 * L + 3) / (L * L),
}


def scheme_ser_bound(scheme, L: int, sigma_bar2: float) -> float:
    """Closed-form SER bound of ME-QAM or RM-QAM at effective noise ``sigma_bar2``."""
    scheme = rbc.Scheme.parse(scheme)
    _check_L(L)
    if scheme not in _SER_COEF:
        raise ConfigurationError(f"no closed-form SER bound for {scheme.value}")
    return float(_SER_COEF[scheme](L) * qfunc(math.sqrt(2.0 / sigma_bar2)))


def ser_bound_check(scheme, L: int, sigma_bar2: float, n_symbols: int, rng: np.random.Generator) -> BoundReport:
    """Single-user SER at fixed effective noise, each region transmitting its
    boundary (minimum-energy) point, against the closed-form bound."""
    c = rbc.build_constellation(scheme, L * L)
    m = rng.integers(0, c.M, n_symbols)
    g = rng.standard_normal((2, n_symbols))
    y = c.nominal[m] + (g[0] + 1j * g[1]) * math.sqrt(sigma_bar2 / 2.0)
    err = np.count_nonzero(c.detect(y) != m)
    p = err / n_symbols
    se = math.sqrt(max(p * (1 - p), 1.0 / n_symbols) / n_symbols)
    return BoundReport(f"ser_bound_{c.scheme.value}", scheme_ser_bound(scheme, L, sigma_bar2), p, n_symbols, se)
