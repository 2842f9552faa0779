"""Rayleigh channels, widely-linear real forms and the small dense kernels
(Gram inverse, ZF, sub-row pseudoinverse) shared by every precoder.

Real stacking convention: a complex K-vector ``s`` maps to
``[Re s; Im s]`` so that the real part of user ``k`` sits at index ``k``
and its imaginary part at ``k + K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConfigurationError, SingularChannelError, SingularSubblockError

__all__ = [
    "DEFAULT_COND_CAP",
    "ChannelRealization",
    "sample_channel",
    "perturb_csi",
    "widely_linear",
    "real_stack",
    "complex_unstack",
    "gram_inverse",
    "realize",
    "zf_precode",
    "subrow_pseudoinverse",
]

DEFAULT_COND_CAP = 1e10


@dataclass(frozen=True)
class ChannelRealization:
    """A complex channel together with its real form and Gram inverse."""

    H: np.ndarray
    Hd: np.ndarray
    Q: np.ndarray

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def Nt(self) -> int:
        return self.H.shape[1]


def _check_dims(K: int, Nt: int) -> None:
    if int(K) != K or int(Nt) != Nt or K < 1 or Nt < K:
        raise ConfigurationError(f"need 1 <= K <= Nt, got K={K}, Nt={Nt}")


def sample_channel(K: int, Nt: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a K x Nt matrix of i.i.d. CN(0, 1) entries."""
    _check_dims(K, Nt)
    g = rng.standard_normal((2, K, Nt))
    return (g[0] + 1j * g[1]) * np.sqrt(0.5)


def perturb_csi(H: np.ndarray, sigma_e2: float, rng: np.random.Generator) -> np.ndarray:
    """Return ``H + E`` with E i.i.d. CN(0, sigma_e2).

    The error draw always consumes the same amount of randomness, so a
    zero variance returns an exact copy of ``H`` without desynchronizing
    the stream.
    """
    if sigma_e2 < 0:
        raise ConfigurationError("sigma_e2 must be nonnegative")
    g = rng.standard_normal((2,) + H.shape)
    if sigma_e2 == 0:
        return H.copy()
    return H + (g[0] + 1j * g[1]) * np.sqrt(sigma_e2 / 2.0)


def widely_linear(H: np.ndarray) -> np.ndarray:
    """Real 2K x 2Nt form ``[[Re H, -Im H], [Im H, Re H]]``."""
    H = np.asarray(H)
    re, im = H.real, H.imag
    return np.block([[re, -im], [im, re]])


def real_stack(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s)
    return np.concatenate([s.real, s.imag], axis=-1)


def complex_unstack(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    K = x.shape[-1] // 2
    return x[..., :K] + 1j * x[..., K:]


def gram_inverse(Hd: np.ndarray, cond_cap: float = DEFAULT_COND_CAP) -> np.ndarray:
    """Compute ``Q = (Hd Hd^T)^{-1}``.

    Raises
    ------
    SingularChannelError
        If the Gram matrix is not positive definite or its condition
        number exceeds ``cond_cap``.
    """
    G = Hd @ Hd.T
    G = 0.5 * (G + G.T)
    w = np.linalg.eigvalsh(G)
    if not np.all(np.isfinite(w)) or w[0] <= 0 or w[-1] / w[0] > cond_cap:
        raise SingularChannelError("channel Gram matrix is singular or ill-conditioned")
    try:
        cf = sla.cho_factor(G, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by eig check
        raise SingularChannelError(str(exc)) from exc
    Q = sla.cho_solve(cf, np.eye(G.shape[0]))
    return 0.5 * (Q + Q.T)


def realize(H: np.ndarray, cond_cap: float = DEFAULT_COND_CAP) -> ChannelRealization:
    Hd = widely_linear(H)
    return ChannelRealization(H=np.asarray(H), Hd=Hd, Q=gram_inverse(Hd, cond_cap))


def zf_precode(H: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, float]:
    """Zero-forcing precoding ``x = H^H (H H^H)^{-1} s``.

    Returns the transmit vector and ``alpha2 = ||x||^2``.
    """
    G = H @ H.conj().T
    try:
        cf = sla.cho_factor(G, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularChannelError(str(exc)) from exc
    x = H.conj().T @ sla.cho_solve(cf, np.asarray(s, dtype=complex))
    return x, float(np.real(np.vdot(x, x)))


def subrow_pseudoinverse(Q: np.ndarray, Hd: np.ndarray, rows) -> np.ndarray:
    """Pseudoinverse of the row subset ``Hd[rows]`` built from ``Q``.

    Uses the block inversion identity
    ``(H_F H_F^T)^{-1} = Q_FF - Q_FC Q_CC^{-1} Q_CF`` so only the
    complement block ``Q_CC`` is factorized.
    """
    rows = np.asarray(rows, dtype=int)
    n = Q.shape[0]
    if rows.size == 0:
        raise ConfigurationError("row subset must be nonempty")
    mask = np.zeros(n, dtype=bool)
    mask[rows] = True
    comp = np.flatnonzero(~mask)
    S = Q[np.ix_(rows, rows)]
    if comp.size:
        try:
            cf = sla.cho_factor(Q[np.ix_(comp, comp)], lower=True)
        except np.linalg.LinAlgError as exc:
            raise SingularSubblockError(str(exc)) from exc
        Qcf = Q[np.ix_(comp, rows)]
        S = S - Qcf.T @ sla.cho_solve(cf, Qcf)
    return Hd[rows].T @ S
