"""Region-based constellations.

A constellation here is a map from messages to feasible regions of the
complex plane rather than to points. Four families are provided: the CI
regions of square QAM, the CI cones of PSK, mirrored-ends QAM (ME-QAM)
and its real-extended variant (RM-QAM). Amplitudes are expressed in
units where the minimum inter-region distance is 2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "Scheme",
    "RealRegion",
    "ProductRegion",
    "PskCone",
    "RbcConstellation",
    "RealMessagePair",
    "split_message",
    "build_qam_ci",
    "build_psk_ci",
    "build_meqam",
    "build_rmqam",
    "build_constellation",
    "min_energy",
    "min_distance",
    "detect",
    "describe",
]

INF = math.inf


class Scheme(str, enum.Enum):
    QAM = "qam"
    PSK = "psk"
    MEQAM = "meqam"
    RMQAM = "rmqam"

    @classmethod
    def parse(cls, name) -> "Scheme":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        aliases = {"qamci": "qam", "pskci": "psk", "me": "meqam", "rm": "rmqam"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigurationError(f"unknown scheme {name!r}") from None


# ---------------------------------------------------------------------------
# Real-line regions
# ---------------------------------------------------------------------------

SINGLETON, HALF_LOWER, HALF_UPPER, OUTSIDE_PAIR, FULL_LINE = range(5)
_KIND_NAMES = ("singleton", "half_line_lower", "half_line_upper", "outside_pair", "full_line")


@dataclass(frozen=True)
class RealRegion:
    """Closed subset of the real line.

    ``kind`` is one of the module constants ``SINGLETON`` ({v}),
    ``HALF_LOWER`` ((-inf, b]), ``HALF_UPPER`` ([b, inf)),
    ``OUTSIDE_PAIR`` ((-inf, -b] U [b, inf), b > 0) or ``FULL_LINE``.
    """

    kind: int
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in range(5):
            raise ConfigurationError(f"bad region kind {self.kind}")
        if self.kind == OUTSIDE_PAIR and not self.value > 0:
            raise ConfigurationError("outside-pair bound must be positive")

    @classmethod
    def singleton(cls, v):
        return cls(SINGLETON, float(v))

    @classmethod
    def half_lower(cls, b):
        return cls(HALF_LOWER, float(b))

    @classmethod
    def half_upper(cls, b):
        return cls(HALF_UPPER, float(b))

    @classmethod
    def outside_pair(cls, b):
        return cls(OUTSIDE_PAIR, float(b))

    @classmethod
    def full_line(cls):
        return cls(FULL_LINE, 0.0)

    @property
    def kind_name(self) -> str:
        return _KIND_NAMES[self.kind]

    def intervals(self) -> list[tuple[float, float]]:
        v = self.value
        return {
            SINGLETON: [(v, v)],
            HALF_LOWER: [(-INF, v)],
            HALF_UPPER: [(v, INF)],
            OUTSIDE_PAIR: [(-INF, -v), (v, INF)],
            FULL_LINE: [(-INF, INF)],
        }[self.kind]

    def contains(self, x, tol: float = 0.0):
        x = np.asarray(x, dtype=float)
        v = self.value
        if self.kind == SINGLETON:
            return np.abs(x - v) <= tol
        if self.kind == HALF_LOWER:
            return x <= v + tol
        if self.kind == HALF_UPPER:
            return x >= v - tol
        if self.kind == OUTSIDE_PAIR:
            return np.abs(x) >= v - tol
        return np.isfinite(x)

    def min_abs_point(self) -> float:
        """Point of the region closest to the origin (positive side on ties)."""
        v = self.value
        if self.kind == SINGLETON:
            return v
        if self.kind == HALF_LOWER:
            return min(v, 0.0)
        if self.kind == HALF_UPPER:
            return max(v, 0.0)
        if self.kind == OUTSIDE_PAIR:
            return v
        return 0.0

    def distance(self, other: "RealRegion") -> float:
        best = INF
        for lo1, hi1 in self.intervals():
            for lo2, hi2 in other.intervals():
                best = min(best, max(0.0, lo2 - hi1, lo1 - hi2))
        return best


# ---------------------------------------------------------------------------
# Complex regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProductRegion:
    """Cartesian product of a real-part region and an imaginary-part region."""

    re: RealRegion
    im: RealRegion

    def contains(self, s, tol: float = 0.0):
        s = np.asarray(s)
        return self.re.contains(s.real, tol) & self.im.contains(s.imag, tol)

    def min_energy_point(self) -> complex:
        return complex(self.re.min_abs_point(), self.im.min_abs_point())

    def distance(self, other) -> float:
        if not isinstance(other, ProductRegion):
            raise TypeError("distance between product and cone regions is not defined")
        return math.hypot(self.re.distance(other.re), self.im.distance(other.im))


@dataclass(frozen=True)
class PskCone:
    """Distance-preserving CI cone of a PSK point.

    Apex at ``radius * exp(j*center_phase)``, opening outward with
    half-angle ``half_angle``. A point belongs to the cone when it lies at
    least ``radius*sin(half_angle)`` from both adjacent decision rays.
    """

    center_phase: float
    half_angle: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0 or not 0 < self.half_angle < math.pi / 2:
            raise ConfigurationError("invalid PSK cone parameters")

    def rows(self) -> np.ndarray:
        """Two rows ``a`` (over ``[Re s, Im s]``) with ``a @ [Re s, Im s] >= margin``."""
        c, s = math.cos(self.center_phase), math.sin(self.center_phase)
        st, ct = math.sin(self.half_angle), math.cos(self.half_angle)
        # rotated coordinates: re' = c*a + s*b, im' = -s*a + c*b
        return np.array(
            [
                [st * c + ct * s, st * s - ct * c],
                [st * c - ct * s, st * s + ct * c],
            ]
        )

    @property
    def margin(self) -> float:
        return self.radius * math.sin(self.half_angle)

    def contains(self, s, tol: float = 0.0):
        s = np.asarray(s, dtype=complex)
        rot = s * np.exp(-1j * self.center_phase)
        st, ct = math.sin(self.half_angle), math.cos(self.half_angle)
        return rot.real * st - np.abs(rot.imag) * ct >= self.margin - tol

    def min_energy_point(self) -> complex:
        return complex(self.radius * np.exp(1j * self.center_phase))

    def distance(self, other) -> float:
        if not isinstance(other, PskCone):
            raise TypeError("distance between product and cone regions is not defined")
        d = abs(self.center_phase - other.center_phase) % (2 * math.pi)
        d = min(d, 2 * math.pi - d)
        # Apexes are the closest pair once the cones do not overlap angularly.
        if d < self.half_angle + other.half_angle - 1e-12:
            return 0.0
        return 2.0 * self.radius * math.sin(d / 2.0)


ComplexRegion = Union[ProductRegion, PskCone]


# ---------------------------------------------------------------------------
# Constellations
# ---------------------------------------------------------------------------


class RealMessagePair(NamedTuple):
    l_re: int
    l_im: int


def split_message(m, L: int):
    """Split message(s) into per-dimension indices ``(m mod L, m // L)``."""
    m_arr = np.asarray(m)
    if np.any(m_arr < 0) or np.any(m_arr >= L * L):
        raise ConfigurationError(f"message out of range for L={L}")
    if m_arr.ndim == 0:
        return RealMessagePair(int(m_arr) % L, int(m_arr) // L)
    return RealMessagePair(m_arr % L, m_arr // L)


@dataclass(frozen=True)
class RbcConstellation:
    """Message-to-region map of size ``M`` with its distance and energy."""

    scheme: Scheme
    M: int
    regions: tuple
    d_min: float
    E_s: float
    L: int | None = None
    # per-message axis descriptors for product schemes, shape (M, 2)
    axis_kind: np.ndarray | None = field(default=None, repr=False, compare=False)
    axis_value: np.ndarray | None = field(default=None, repr=False, compare=False)
    nominal: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.regions) != self.M:
            raise ConfigurationError("constellation needs exactly M regions")
        object.__setattr__(
            self, "nominal", np.array([r.min_energy_point() for r in self.regions], dtype=complex)
        )
        if isinstance(self.regions[0], ProductRegion):
            kinds = np.array([[r.re.kind, r.im.kind] for r in self.regions], dtype=int)
            vals = np.array([[r.re.value, r.im.value] for r in self.regions], dtype=float)
            object.__setattr__(self, "axis_kind", kinds)
            object.__setattr__(self, "axis_value", vals)

    def region(self, m: int):
        return self.regions[m]

    def contains(self, m, s, tol: float = 0.0) -> np.ndarray:
        """Elementwise membership of ``s[i]`` in the region of ``m[i]``."""
        m = np.atleast_1d(np.asarray(m, dtype=int))
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        return np.array([bool(self.regions[mi].contains(si, tol)) for mi, si in zip(m, s)])

    def detect(self, y) -> np.ndarray:
        return detect(self, y)


def _check_square(M: int) -> int:
    L = math.isqrt(int(M)) if int(M) == M and M > 0 else 0
    if L * L != M or L < 4 or L % 2:
        raise ConfigurationError(f"M must be L^2 with even L >= 4, got {M}")
    return L


def _finish(scheme, M, regions, L=None):
    regions = tuple(regions)
    return RbcConstellation(
        scheme=scheme,
        M=M,
        regions=regions,
        d_min=_pairwise_min_distance(regions),
        E_s=_average_min_energy(regions),
        L=L,
    )


def _qam_pam_region(l: int, L: int) -> RealRegion:
    if l == 0:
        return RealRegion.half_lower(-L + 1)
    if l == L - 1:
        return RealRegion.half_upper(L - 1)
    return RealRegion.singleton(2 * l - L + 1)


def _me_pam_region(l: int, L: int) -> RealRegion:
    if l == L - 1:
        return RealRegion.outside_pair(L)
    return RealRegion.singleton(2 * l - L + 2)


def build_qam_ci(M: int) -> RbcConstellation:
    """CI regions of square M-QAM (corner, edge and interior regions)."""
    L = _check_square(M)
    regions = []
    for m in range(M):
        lr, li = split_message(m, L)
        regions.append(ProductRegion(_qam_pam_region(lr, L), _qam_pam_region(li, L)))
    return _finish(Scheme.QAM, M, regions, L)


def build_meqam(M: int) -> RbcConstellation:
    """Mirrored-ends QAM: L-1 singletons plus one sign-flexible region per axis."""
    L = _check_square(M)
    regions = []
    for m in range(M):
        lr, li = split_message(m, L)
        regions.append(ProductRegion(_me_pam_region(lr, L), _me_pam_region(li, L)))
    return _finish(Scheme.MEQAM, M, regions, L)


def _rmqam_line_values(L: int) -> list[float]:
    """Signed real values of the vertical lines, in label order."""
    out = []
    for l in range(L // 2 - 2, -1, -1):
        out += [float(L + 2 * l), float(-(L + 2 * l))]
    return out


def build_rmqam(M: int) -> RbcConstellation:
    """Real-extended ME-QAM.

    Labels: 0 is the right half-plane region ``[2L-2, inf) x R``, labels
    1..L-2 the vertical lines ``{+-(L+2l)} x R`` (descending magnitude,
    positive first), L-1 the left half-plane region, then the L-1
    sign-flexible-imaginary regions ordered by real value, then the
    (L-1)^2 singletons row-major. For M=16 this reproduces the groups
    {0,3}, {1,2}, {4,5,6}, {7..15}.
    """
    L = _check_square(M)
    full = RealRegion.full_line()
    regions = [ProductRegion(RealRegion.half_upper(2 * L - 2), full)]
    for v in _rmqam_line_values(L):
        regions.append(ProductRegion(RealRegion.singleton(v), full))
    regions.append(ProductRegion(RealRegion.half_lower(-2 * L + 2), full))
    for lr in range(L - 1):
        regions.append(ProductRegion(RealRegion.singleton(2 * lr - L + 2), RealRegion.outside_pair(L)))
    for li in range(L - 1):
        for lr in range(L - 1):
            regions.append(
                ProductRegion(RealRegion.singleton(2 * lr - L + 2), RealRegion.singleton(2 * li - L + 2))
            )
    return _finish(Scheme.RMQAM, M, regions, L)


def build_psk_ci(M: int) -> RbcConstellation:
    """CI cones of M-PSK, radius chosen so adjacent nominal points are 2 apart."""
    if int(M) != M or M < 4 or (M & (M - 1)):
        raise ConfigurationError(f"PSK size must be a power of two >= 4, got {M}")
    theta = math.pi / M
    r = 1.0 / math.sin(theta)
    regions = [PskCone(2 * math.pi * m / M, theta, r) for m in range(M)]
    return _finish(Scheme.PSK, M, regions)


_BUILDERS = {
    Scheme.QAM: build_qam_ci,
    Scheme.PSK: build_psk_ci,
    Scheme.MEQAM: build_meqam,
    Scheme.RMQAM: build_rmqam,
}


def build_constellation(scheme, M: int) -> RbcConstellation:
    return _BUILDERS[Scheme.parse(scheme)](M)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def _average_min_energy(regions) -> float:
    pts = [r.min_energy_point() for r in regions]
    return math.fsum(p.real**2 + p.imag**2 for p in pts) / len(pts)


def _pairwise_min_distance(regions) -> float:
    best = INF
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            best = min(best, regions[i].distance(regions[j]))
    return best


def min_energy(c: RbcConstellation) -> float:
    """Average over messages of the smallest energy in each region."""
    return _average_min_energy(c.regions)


def min_distance(c: RbcConstellation) -> float:
    """Smallest Euclidean distance between regions of distinct messages."""
    return _pairwise_min_distance(c.regions)


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------


def _qam_pam_detect(x, L):
    bounds = np.arange(-L + 2, L - 1, 2, dtype=float)
    return np.searchsorted(bounds, x, side="left")


def _me_pam_detect(x, L):
    bounds = np.arange(-L + 1, L, 2, dtype=float)
    idx = np.searchsorted(bounds, x, side="left")
    sf = (idx == L) | (x < -L + 1)
    return np.where(sf, L - 1, np.maximum(idx - 1, 0))


def _rmqam_labels(c: RbcConstellation, idx, x, y):
    L = c.L
    # inner column: real singleton among L-1 values, imaginary via ME-PAM
    inner_bounds = np.arange(-L + 3, L - 2, 2, dtype=float)
    lr = np.searchsorted(inner_bounds, x, side="left")
    li = _me_pam_detect(y, L)
    inner = np.where(li == L - 1, L + lr, 2 * L - 1 + lr + (L - 1) * li)
    # line labels: positive value v = L+2l has label 1 + 2*(L/2-2-l), negative label +1
    h = L // 2
    neg_l = h - 1 - idx  # idx in 1..h-1 -> value -(L + 2*neg_l)
    pos_l = idx - h - 1  # idx in h+1..L-1 -> value L + 2*pos_l
    neg_label = 2 + 2 * (h - 2 - neg_l)
    pos_label = 1 + 2 * (h - 2 - pos_l)
    out = np.where(idx == L, 0, np.where(idx == 0, L - 1, inner))
    out = np.where((idx >= 1) & (idx < h), neg_label, out)
    out = np.where((idx > h) & (idx < L), pos_label, out)
    return out


def detect(c: RbcConstellation, y) -> np.ndarray:
    """Map received samples to messages; boundary hits go to the lower message."""
    y = np.asarray(y, dtype=complex)
    x, z = y.real, y.imag
    if c.scheme == Scheme.QAM:
        return _qam_pam_detect(x, c.L) + c.L * _qam_pam_detect(z, c.L)
    if c.scheme == Scheme.MEQAM:
        return _me_pam_detect(x, c.L) + c.L * _me_pam_detect(z, c.L)
    if c.scheme == Scheme.RMQAM:
        L = c.L
        b = np.array(
            [-(2 * L - 3) + 2 * i for i in range(L // 2)] + [(L - 1) + 2 * i for i in range(L // 2)],
            dtype=float,
        )
        lo = _rmqam_labels(c, np.searchsorted(b, x, side="left"), x, z)
        hi = _rmqam_labels(c, np.searchsorted(b, x, side="right"), x, z)
        return np.minimum(lo, hi)
    # PSK: nearest phase sector
    M = c.M
    t = np.mod(np.angle(y) / (2 * np.pi / M), M)
    k = np.ceil(t - 0.5).astype(int) % M
    return np.where(t == M - 0.5, 0, k)


def describe(c: RbcConstellation) -> list[dict]:
    """Structured region descriptions, one record per message."""
    out = []
    for m, r in enumerate(c.regions):
        if isinstance(r, ProductRegion):
            out.append(
                {
                    "scheme": c.scheme.value,
                    "m": m,
                    "kind": "product",
                    "re_kind": r.re.kind_name,
                    "re_value": r.re.value,
                    "im_kind": r.im.kind_name,
                    "im_value": r.im.value,
                }
            )
        else:
            out.append(
                {
                    "scheme": c.scheme.value,
                    "m": m,
                    "kind": "psk_cone",
                    "center_phase": r.center_phase,
                    "half_angle": r.half_angle,
                    "radius": r.radius,
                }
            )
    return out
