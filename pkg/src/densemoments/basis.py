"""
Angular and radial basis functions on the unit disk.

Every basis is separable in polar coordinates, ``V_nm(r, theta) =
R_n(r) * exp(1j * m * theta)``, with radial parts normalised so that

    integral_0^1 R_n(r) conj(R_k(r)) r dr = delta_nk / (2 pi).

Supported radial families
-------------------------
PCT, PST, PCET
    Polar cosine / sine / complex exponential transforms (harmonic in r**2).
RHFM, EFM
    Radial harmonic Fourier and exponent-Fourier moments (harmonic in r,
    with an integrable 1/sqrt(r) singularity at the origin).
ZM
    Zernike moments; the radial polynomial depends on ``|m|``.
OFMM
    Orthogonal Fourier-Mellin moments.

The local frame ``(u, v, w)`` maps image coordinates to the unit disk through
``r' = hypot(x - u, y - v) / w`` and ``theta' = atan2(y - v, x - u)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple

import numpy as np

from .errors import InvalidOrderError, OutOfDomainError

__all__ = [
    "BasisKind",
    "OrderPair",
    "OrderSet",
    "LocalFrame",
    "angular_eval",
    "radial_eval",
    "basis_eval",
    "basis_values",
    "order_set",
    "radial_orthogonality",
    "RADIUS_EPS",
    "OFMM_MAX_ORDER",
]

# clamp for the 1/sqrt(r) factor of RHFM and EFM
RADIUS_EPS = 1e-6
OFMM_MAX_ORDER = 20


class BasisKind(str, enum.Enum):
    PCT = "PCT"
    PCET = "PCET"
    PST = "PST"
    ZM = "ZM"
    OFMM = "OFMM"
    EFM = "EFM"
    RHFM = "RHFM"

    @classmethod
    def parse(cls, value) -> "BasisKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            names = ", ".join(k.value.lower() for k in cls)
            raise ValueError(f"unknown basis {value!r}; expected one of {names}") from None

    @property
    def code(self) -> int:
        """Stable integer tag used by the binary file formats."""
        return _KIND_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "BasisKind":
        for kind, c in _KIND_CODES.items():
            if c == code:
                return kind
        raise ValueError(f"unknown basis code {code}")

    @property
    def is_complex(self) -> bool:
        return self in (BasisKind.PCET, BasisKind.EFM)


_KIND_CODES = {
    BasisKind.PCT: 1,
    BasisKind.PCET: 2,
    BasisKind.PST: 3,
    BasisKind.ZM: 4,
    BasisKind.OFMM: 5,
    BasisKind.EFM: 6,
    BasisKind.RHFM: 7,
}


class OrderPair(NamedTuple):
    n: int
    m: int


@dataclass(frozen=True)
class OrderSet:
    """Deterministically ordered collection of admissible ``(n, m)`` pairs."""

    kind: BasisKind
    pairs: tuple[OrderPair, ...]
    norm: float
    bound: int

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[OrderPair]:
        return iter(self.pairs)

    def __getitem__(self, index: int) -> OrderPair:
        return self.pairs[index]

    @property
    def ms(self) -> np.ndarray:
        return np.array([p.m for p in self.pairs], dtype=int)


@dataclass(frozen=True)
class LocalFrame:
    """Center ``(u, v)`` and radius ``w`` of a local disk, in pixels."""

    u: float
    v: float
    w: float

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError(f"scale radius must be positive, got {self.w}")


def check_order(kind: BasisKind, n: int, m: int = 0) -> None:
    """Raise :class:`InvalidOrderError` unless ``(n, m)`` is admissible for *kind*."""
    kind = BasisKind.parse(kind)
    if int(n) != n or int(m) != m:
        raise InvalidOrderError(f"orders must be integers, got ({n}, {m})")
    if kind in (BasisKind.PCET, BasisKind.EFM):
        return
    if n < 0:
        raise InvalidOrderError(f"{kind.value} requires n >= 0, got n={n}")
    if kind is BasisKind.PST and n == 0:
        raise InvalidOrderError("PST radial function of order 0 vanishes identically")
    if kind is BasisKind.ZM and (abs(m) > n or (n - abs(m)) % 2):
        raise InvalidOrderError(f"ZM requires |m| <= n and n - |m| even, got ({n}, {m})")
    if kind is BasisKind.OFMM and n > OFMM_MAX_ORDER:
        raise InvalidOrderError(f"OFMM order {n} exceeds the supported maximum {OFMM_MAX_ORDER}")


def angular_eval(m: int, theta):
    """Angular basis ``exp(1j * m * theta)``."""
    return np.exp(1j * m * np.asarray(theta, dtype=float))


@lru_cache(maxsize=None)
def _zernike_coefficients(n: int, m: int) -> tuple[tuple[int, float], ...]:
    m = abs(m)
    terms = []
    for k in range((n - m) // 2 + 1):
        c = (-1) ** k * math.factorial(n - k) // (
            math.factorial(k) * math.factorial((n + m) // 2 - k) * math.factorial((n - m) // 2 - k)
        )
        terms.append((n - 2 * k, float(c)))
    return tuple(terms)


@lru_cache(maxsize=None)
def _ofmm_coefficients(n: int) -> np.ndarray:
    # exact integer arithmetic; coefficients are integers
    coeffs = [
        (-1) ** (n + k) * math.factorial(n + k + 1) // (math.factorial(k) * math.factorial(n - k) * math.factorial(k + 1))
        for k in range(n + 1)
    ]
    return np.array(coeffs, dtype=float)


def radial_eval(kind, n: int, r, m: int = 0):
    """Evaluate the radial basis function ``R_n(r)`` of *kind*.

    Parameters
    ----------
    kind : BasisKind or str
    n : int
        Radial order.
    r : float or array_like
        Radii in ``[0, 1]``.
    m : int, optional
        Angular repetition; only used by ZM, whose radial polynomial depends on it.

    Returns
    -------
    float, complex or ndarray
        Real for PCT/PST/ZM/OFMM/RHFM, complex for PCET/EFM.
    """
    kind = BasisKind.parse(kind)
    check_order(kind, n, m)
    r = np.asarray(r, dtype=float)
    if kind is BasisKind.PCT:
        if n == 0:
            out = np.full_like(r, 1.0 / math.sqrt(math.pi))
        else:
            out = math.sqrt(2.0 / math.pi) * np.cos(n * math.pi * r * r)
    elif kind is BasisKind.PST:
        out = math.sqrt(2.0 / math.pi) * np.sin(n * math.pi * r * r)
    elif kind is BasisKind.PCET:
        out = np.exp(2j * n * math.pi * r * r) / math.sqrt(math.pi)
    elif kind is BasisKind.EFM:
        rc = np.maximum(r, RADIUS_EPS)
        out = np.exp(2j * n * math.pi * rc) / np.sqrt(2.0 * math.pi * rc)
    elif kind is BasisKind.RHFM:
        rc = np.maximum(r, RADIUS_EPS)
        if n == 0:
            out = 1.0 / np.sqrt(2.0 * math.pi * rc)
        elif n % 2:
            out = np.sin(math.pi * (n + 1) * rc) / np.sqrt(math.pi * rc)
        else:
            out = np.cos(math.pi * n * rc) / np.sqrt(math.pi * rc)
    elif kind is BasisKind.ZM:
        out = np.zeros_like(r)
        for power, c in _zernike_coefficients(n, m):
            out = out + c * r**power
        out = out * math.sqrt((n + 1) / math.pi)
    else:  # OFMM
        out = np.polynomial.polynomial.polyval(r, _ofmm_coefficients(n)) * math.sqrt((n + 1) / math.pi)
    return out[()] if out.ndim == 0 else out


def basis_values(kind, n: int, m: int, dx, dy, w: float):
    """Basis ``V_nm`` at offsets ``(dx, dy)`` from a frame center, scale *w*.

    No domain check: points with ``hypot(dx, dy) > w`` are evaluated by
    analytic continuation of the radial formula. Callers mask them.
    """
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    r = np.hypot(dx, dy) / w
    theta = np.mod(np.arctan2(dy, dx), 2.0 * math.pi)
    return radial_eval(kind, n, r, m) * angular_eval(m, theta)


def basis_eval(kind, n: int, m: int, frame: LocalFrame, x, y):
    """Local basis ``V_nm^{uvw}(x, y)``; raises if a point lies outside the disk."""
    dx = np.asarray(x, dtype=float) - frame.u
    dy = np.asarray(y, dtype=float) - frame.v
    if np.any(dx * dx + dy * dy > frame.w * frame.w * (1 + 1e-12)):
        raise OutOfDomainError(f"point outside the disk of radius {frame.w} centered at ({frame.u}, {frame.v})")
    return basis_values(kind, n, m, dx, dy, frame.w)


def _valid(kind: BasisKind, n: int, m: int) -> bool:
    try:
        check_order(kind, n, m)
    except InvalidOrderError:
        return False
    return True


def order_set(kind, p, K: int) -> OrderSet:
    """All admissible ``(n, m)`` with ``m >= 0``, ``n >= 0`` and ``||(n, m)||_p <= K``.

    Negative ``m`` (and negative ``n`` for PCET/EFM) are omitted: for real
    images they only contribute complex conjugates of the retained coefficients.
    Pairs are sorted lexicographically.
    """
    kind = BasisKind.parse(kind)
    p = float(p)
    if p not in (1.0, math.inf):
        raise ValueError(f"norm must be 1 or inf, got {p}")
    if K < 0:
        raise ValueError(f"order bound must be non-negative, got {K}")
    pairs = []
    for n in range(K + 1):
        for m in range(K + 1):
            size = n + m if p == 1.0 else max(n, m)
            if size <= K and _valid(kind, n, m):
                pairs.append(OrderPair(n, m))
    return OrderSet(kind=kind, pairs=tuple(pairs), norm=p, bound=int(K))


@lru_cache(maxsize=8)
def _gauss_legendre(count: int):
    from scipy.special import roots_legendre

    return roots_legendre(count)


def radial_orthogonality(kind, n: int, n2: int, quad_points: int = 4096, m: int = 0, m2: int | None = None) -> complex:
    """Gauss-Legendre estimate of ``integral_0^1 R_n(r) conj(R_n2(r)) r dr``.

    For an orthonormal family this approaches ``delta / (2 pi)``. For ZM the
    radial polynomials of ``(n, m)`` and ``(n2, m2)`` are compared; ``m2``
    defaults to ``m``.
    """
    if quad_points < 64:
        raise ValueError("at least 64 quadrature points are required")
    m2 = m if m2 is None else m2
    nodes, weights = _gauss_legendre(int(quad_points))
    r = 0.5 * (nodes + 1.0)
    integrand = radial_eval(kind, n, r, m) * np.conj(radial_eval(kind, n2, r, m2)) * r
    value = 0.5 * np.sum(weights * integrand)
    if not np.iscomplexobj(value):
        return float(value)
    return complex(value)
