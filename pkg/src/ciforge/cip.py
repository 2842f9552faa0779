"""Per-symbol-vector CIP problems and their solvers.

Every product-region constellation reduces coordinatewise to one of five
constraint types on the real stacked symbol vector: pinned (singleton),
one-sided bound (half-line), sign-flexible ``psi*x >= b`` (outside pair)
or free (full line). PSK adds two rotated half-plane rows per user.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import rbc
from .channel import ChannelRealization, complex_unstack, real_stack, subrow_pseudoinverse
from .errors import SizeError
from .qp import QpProblem, solve_fixed, solve_qp

__all__ = [
    "Strategy",
    "CipInstance",
    "PrecodeOutcome",
    "assemble",
    "precode_zf",
    "precode_lcqp",
    "predict_signs",
    "precode_psqp",
    "precode_fsqp",
    "precode",
    "hamming",
    "DEFAULT_FSQP_CAP",
]

DEFAULT_FSQP_CAP = 16


class Strategy:
    ZF = "zf"
    LCQP = "lcqp"
    FSQP = "fsqp"
    PSQP = "psqp"
    ALL = ("zf", "lcqp", "fsqp", "psqp")


def _idx(a) -> np.ndarray:
    return np.asarray(a, dtype=int).reshape(-1)


@dataclass(frozen=True)
class CipInstance:
    """Real-domain CIP problem for one symbol vector.

    Coordinates follow the ``[Re s; Im s]`` stacking. ``lower_*`` are
    ``x >= v`` bounds, ``upper_*`` are ``x <= v`` bounds, ``sf_*`` are
    sign-flexible ``|x| >= v`` entries, and ``free_idx`` are unconstrained.
    ``partitions`` keeps the scheme-specific named index sets.
    """

    scheme: rbc.Scheme
    Q: np.ndarray
    messages: np.ndarray
    fixed_idx: np.ndarray
    fixed_val: np.ndarray
    lower_idx: np.ndarray
    lower_val: np.ndarray
    upper_idx: np.ndarray
    upper_val: np.ndarray
    sf_idx: np.ndarray
    sf_bound: np.ndarray
    free_idx: np.ndarray
    cone_rows: np.ndarray | None = None
    cone_margin: np.ndarray | None = None
    partitions: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.Q.shape[0] // 2

    @property
    def sign_fixed_idx(self) -> np.ndarray:
        """Coordinates with a fixed sign: pinned values and half-lines."""
        return np.sort(np.concatenate([self.fixed_idx, self.lower_idx, self.upper_idx]))

    def sign_fixed_values(self) -> np.ndarray:
        """Pinned values, with half-line entries placed on their boundary."""
        idx = np.concatenate([self.fixed_idx, self.lower_idx, self.upper_idx])
        val = np.concatenate([self.fixed_val, self.lower_val, self.upper_val])
        order = np.argsort(idx)
        return val[order]

    def to_qp(self, psi=None) -> QpProblem:
        """Convex QP obtained by resolving the sign-flexible entries with ``psi``."""
        n = self.Q.shape[0]
        psi = np.ones(self.sf_idx.size) if psi is None else np.asarray(psi, dtype=float)
        if psi.size != self.sf_idx.size:
            raise ValueError("sign pattern length does not match the sign-flexible set")
        m = self.lower_idx.size + self.upper_idx.size + self.sf_idx.size
        A = np.zeros((m, n))
        b = np.empty(m)
        r = 0
        for idx, val, sgn in (
            (self.lower_idx, self.lower_val, np.ones(self.lower_idx.size)),
            (self.upper_idx, -self.upper_val, -np.ones(self.upper_idx.size)),
            (self.sf_idx, self.sf_bound, psi),
        ):
            k = idx.size
            A[np.arange(r, r + k), idx] = sgn
            b[r : r + k] = val
            r += k
        if self.cone_rows is not None:
            A = np.vstack([A, self.cone_rows])
            b = np.concatenate([b, self.cone_margin])
        return QpProblem(self.Q, self.fixed_idx, self.fixed_val, A, b)


@dataclass(frozen=True)
class PrecodeOutcome:
    s: np.ndarray
    alpha2: float
    psi: np.ndarray
    strategy: str
    qp_solves: int = 0
    iterations: int = 0

    @property
    def x_real(self) -> np.ndarray:
        return real_stack(self.s)


def _as_Q(chan) -> np.ndarray:
    return chan.Q if isinstance(chan, ChannelRealization) else np.asarray(chan, dtype=float)


def _partitions(scheme, c, m, K, kinds):
    coord = lambda users, axis: _idx(users) + axis * K  # noqa: E731
    allc = np.arange(2 * K)
    flat = np.concatenate([kinds[:, 0], kinds[:, 1]])
    if scheme == rbc.Scheme.QAM:
        return {
            "I_in": allc[flat == rbc.SINGLETON],
            "I_minus": allc[flat == rbc.HALF_LOWER],
            "I_plus": allc[flat == rbc.HALF_UPPER],
        }
    if scheme == rbc.Scheme.MEQAM:
        return {
            "I_in_me": allc[flat == rbc.SINGLETON],
            "I_end_me": allc[flat == rbc.OUTSIDE_PAIR],
        }
    L = c.L
    users = np.arange(K)
    g4 = (m == 0) | (m == L - 1)
    g3 = (m >= 1) & (m <= L - 2)
    g2 = (m >= L) & (m <= 2 * L - 2)
    g1 = m >= 2 * L - 1
    return {
        "I1": users[g1],
        "I2": users[g2],
        "I3": users[g3],
        "I4": users[g4],
        "I1+K": coord(users[g1], 1),
        "I2+K": coord(users[g2], 1),
        "free": coord(users[g3 | g4], 1),
        "theta": np.where(m[g4] == 0, 1, -1),
    }


def assemble(c: rbc.RbcConstellation, chan, m) -> CipInstance:
    """Build the real-domain CIP instance for messages ``m`` (one per user)."""
    Q = _as_Q(chan)
    m = _idx(m)
    K = m.size
    if Q.shape != (2 * K, 2 * K):
        raise ValueError(f"Q of shape {Q.shape} does not match {K} users")
    empty_i, empty_f = np.zeros(0, dtype=int), np.zeros(0)
    if c.scheme == rbc.Scheme.PSK:
        rows = np.zeros((2 * K, 2 * K))
        margin = np.empty(2 * K)
        for k, mk in enumerate(m):
            cone = c.regions[mk]
            rr = cone.rows()
            rows[2 * k : 2 * k + 2, k] = rr[:, 0]
            rows[2 * k : 2 * k + 2, k + K] = rr[:, 1]
            margin[2 * k : 2 * k + 2] = cone.margin
        return CipInstance(
            c.scheme, Q, m, empty_i, empty_f, empty_i, empty_f, empty_i, empty_f,
            empty_i, empty_f, empty_i, rows, margin, {"cone": np.arange(K)},
        )
    kinds = c.axis_kind[m]
    vals = c.axis_value[m]
    flat_k = np.concatenate([kinds[:, 0], kinds[:, 1]])
    flat_v = np.concatenate([vals[:, 0], vals[:, 1]])
    allc = np.arange(2 * K)

    def pick(kind):
        sel = flat_k == kind
        return allc[sel], flat_v[sel]

    fixed_idx, fixed_val = pick(rbc.SINGLETON)
    upper_idx, upper_val = pick(rbc.HALF_LOWER)
    lower_idx, lower_val = pick(rbc.HALF_UPPER)
    sf_idx, sf_bound = pick(rbc.OUTSIDE_PAIR)
    free_idx, _ = pick(rbc.FULL_LINE)
    return CipInstance(
        c.scheme, Q, m, fixed_idx, fixed_val, lower_idx, lower_val, upper_idx, upper_val,
        sf_idx, sf_bound, free_idx, None, None, _partitions(c.scheme, c, m, K, kinds),
    )


def precode_zf(c: rbc.RbcConstellation, chan, m, psi=None) -> PrecodeOutcome:
    """Plain ZF: every symbol sits at the minimum-energy point of its region.

    A sign-flexible coordinate has two minimum-energy points ``+-b``; the
    positive one is used unless ``psi`` gives the signs (in sign-flexible
    index order).
    """
    Q = _as_Q(chan)
    m = _idx(m)
    s = c.nominal[m]
    x = real_stack(s)
    used = np.zeros(0, dtype=int)
    if psi is not None:
        inst = assemble(c, Q, m)
        used = np.asarray(psi, dtype=int)
        if used.size != inst.sf_idx.size:
            raise ValueError("sign pattern length does not match the sign-flexible set")
        x[inst.sf_idx] = used * inst.sf_bound
        s = complex_unstack(x)
    return PrecodeOutcome(s, float(x @ Q @ x), used, Strategy.ZF)


def _outcome(sol, K, psi, strategy, solves, iters) -> PrecodeOutcome:
    return PrecodeOutcome(
        complex_unstack(sol.x), float(sol.objective), np.asarray(psi, dtype=int), strategy, solves, iters
    )


def _solve(inst: CipInstance, psi):
    if inst.cone_rows is None and inst.lower_idx.size + inst.upper_idx.size + inst.sf_idx.size == 0:
        return solve_fixed(inst.Q, inst.fixed_idx, inst.fixed_val)
    return solve_qp(inst.to_qp(psi))


def precode_lcqp(c: rbc.RbcConstellation, chan, m) -> PrecodeOutcome:
    """Convex CIP for QAM and PSK CI regions (global optimum)."""
    inst = assemble(c, chan, m)
    if inst.sf_idx.size:
        raise ValueError("LCQP precoding needs a constellation without sign-flexible regions")
    sol = _solve(inst, None)
    return _outcome(sol, inst.K, [], Strategy.LCQP, 1, sol.iterations)


def predict_signs(inst: CipInstance, Hd: np.ndarray) -> np.ndarray:
    """Closed-form sign prediction for the sign-flexible entries.

    The sign-fixed entries are zero-forced on their own rows of the real
    channel; the signs the resulting transmit vector induces on the
    sign-flexible rows are the prediction. Exact zeros map to +1.
    """
    sf = inst.sf_idx
    if sf.size == 0:
        return np.zeros(0, dtype=int)
    F = inst.sign_fixed_idx
    if F.size == 0:
        return np.ones(sf.size, dtype=int)
    pinv = subrow_pseudoinverse(inst.Q, Hd, F)
    relaxed = Hd[sf] @ (pinv @ inst.sign_fixed_values())
    return np.where(relaxed < 0, -1, 1)


def precode_psqp(c: rbc.RbcConstellation, chan: ChannelRealization, m) -> PrecodeOutcome:
    """Predicted-sign QP: one convex solve with the predicted sign pattern."""
    inst = assemble(c, chan, m)
    psi = predict_signs(inst, chan.Hd)
    sol = _solve(inst, psi)
    return _outcome(sol, inst.K, psi, Strategy.PSQP, 1, sol.iterations)


def precode_fsqp(c: rbc.RbcConstellation, chan, m, cap: int = DEFAULT_FSQP_CAP) -> PrecodeOutcome:
    """Full-search QP: globally optimal over all sign patterns.

    Raises
    ------
    SizeError
        If the number of sign-flexible entries exceeds ``cap``.
    """
    inst = assemble(c, chan, m)
    return _fsqp_instance(inst, cap)


def _fsqp_instance(inst: CipInstance, cap: int = DEFAULT_FSQP_CAP) -> PrecodeOutcome:
    n_sf = inst.sf_idx.size
    if n_sf > cap:
        raise SizeError(f"{n_sf} sign-flexible entries exceed the full-search cap {cap}")
    best = None
    best_psi = None
    iters = 0
    solves = 0
    for psi in itertools.product((-1, 1), repeat=n_sf):
        sol = _solve(inst, psi)
        solves += 1
        iters += sol.iterations
        if best is None or sol.objective < best.objective - 1e-12 * (1.0 + abs(best.objective)):
            best, best_psi = sol, psi
    return _outcome(best, inst.K, best_psi, Strategy.FSQP, solves, iters)


def precode(c: rbc.RbcConstellation, chan: ChannelRealization, m, strategy: str, fsqp_cap=DEFAULT_FSQP_CAP):
    if strategy == Strategy.ZF:
        return precode_zf(c, chan, m)
    if strategy == Strategy.LCQP:
        return precode_lcqp(c, chan, m)
    if strategy == Strategy.PSQP:
        return precode_psqp(c, chan, m)
    if strategy == Strategy.FSQP:
        return precode_fsqp(c, chan, m, fsqp_cap)
    raise ValueError(f"unknown strategy {strategy!r}")


def hamming(psi_hat, psi_star) -> int:
    a, b = np.asarray(psi_hat), np.asarray(psi_star)
    if a.shape != b.shape:
        raise ValueError("sign patterns differ in length")
    return int(np.count_nonzero(a != b))
