"""
Invariant features built from moment fields.

Magnitudes remove the rotation phase ``exp(1j m phi)`` and the conjugation
introduced by flips; averaging or max-pooling over a list of scales gives a
tolerance to scale changes. The phase that magnitudes discard is still useful
for estimating the rotation between two patches, see :func:`estimate_rotation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .basis import OrderPair, OrderSet
from .errors import DegenerateInputError, SizeError
from .transform import MomentField

__all__ = [
    "FeatureField",
    "magnitude_features",
    "pool_scales",
    "l2_normalize",
    "rotation_predict",
    "estimate_rotation",
    "wrap_angle",
]


@dataclass(frozen=True)
class FeatureField:
    """Real feature vectors per position.

    ``vectors`` has shape ``(rows, cols, dim)``; ``valid`` marks positions
    whose vectors may be compared. ``scales`` holds the single scale or the
    pooled set.
    """

    vectors: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)
    orders: tuple[OrderPair, ...]
    scales: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.vectors.shape[:2]

    @property
    def dim(self) -> int:
        return self.vectors.shape[2]

    def at(self, u: int, v: int) -> np.ndarray:
        return self.vectors[v, u]


def _pairs(orders) -> tuple[OrderPair, ...]:
    src = orders.pairs if isinstance(orders, OrderSet) else orders
    return tuple(OrderPair(int(p[0]), int(p[1])) for p in src)


def magnitude_features(field: MomentField, orders, scales: Sequence[int] | None = None) -> list[FeatureField]:
    """One :class:`FeatureField` of ``|coefficient|`` per scale, in order-set order."""
    pairs = _pairs(orders)
    scales = field.scales if scales is None else [int(w) for w in scales]
    out = []
    for w in scales:
        missing = [(n, m, w) for n, m in pairs if (n, m, w) not in field]
        if missing:
            raise KeyError(f"moment field lacks channels {missing}")
        vectors = np.stack([np.abs(field[(n, m, w)]) for n, m in pairs], axis=-1)
        out.append(FeatureField(vectors, field.valid_mask(w), pairs, (w,)))
    return out


def pool_scales(fields: Sequence[FeatureField], mode: str = "average") -> FeatureField:
    """Pool feature fields across scales, component by component.

    The valid mask is the intersection of the inputs. Average pooling sums in
    a fixed (sorted-scale) order so the result does not depend on the order
    of *fields*.
    """
    if not fields:
        raise ValueError("nothing to pool")
    first = fields[0]
    for f in fields[1:]:
        if f.vectors.shape != first.vectors.shape or f.orders != first.orders:
            raise SizeError("feature fields differ in shape or order set")
    ordered = sorted(fields, key=lambda f: f.scales)
    stack = np.stack([f.vectors for f in ordered])
    if mode == "average":
        vectors = stack.mean(axis=0)
    elif mode == "max":
        vectors = stack.max(axis=0)
    else:
        raise ValueError(f"unknown pooling mode {mode!r}")
    valid = np.logical_and.reduce([f.valid for f in ordered])
    scales = tuple(sorted({w for f in ordered for w in f.scales}))
    return FeatureField(vectors, valid, first.orders, scales)


def l2_normalize(features: FeatureField, eps: float = 1e-12) -> FeatureField:
    norms = np.linalg.norm(features.vectors, axis=-1, keepdims=True)
    return FeatureField(features.vectors / np.maximum(norms, eps), features.valid, features.orders, features.scales)


def rotation_predict(z, m: int, phi: float):
    """Coefficient of the image rotated by *phi*: ``z * exp(1j * m * phi)``."""
    return np.asarray(z) * np.exp(1j * m * phi)


def wrap_angle(x):
    """Map angles to ``[-pi, pi)``."""
    return (np.asarray(x) + math.pi) % (2 * math.pi) - math.pi


def estimate_rotation(a, b, orders, *, bins: int = 1024, eps: float = 1e-12) -> float:
    """Rotation angle taking coefficient vector *a* to *b*, in ``[0, 2 pi)``.

    Minimises ``sum |a_k| |b_k| wrap(arg b_k - arg a_k - m_k phi)**2`` by a
    grid search over *bins* angles followed by golden-section refinement.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ms = np.array([p[1] for p in _pairs(orders)], dtype=float)
    if a.shape != b.shape or a.shape != ms.shape:
        raise SizeError("coefficient vectors and order set differ in length")
    weights = np.abs(a) * np.abs(b) * (ms != 0)
    if not np.any(ms != 0) or weights.sum() < eps:
        raise DegenerateInputError("no rotation-sensitive coefficient carries weight")
    dphase = np.angle(b) - np.angle(a)

    def cost(phi):
        return float(np.sum(weights * wrap_angle(dphase - ms * phi) ** 2))

    grid = np.arange(bins) * (2 * math.pi / bins)
    residual = wrap_angle(dphase[None, :] - ms[None, :] * grid[:, None])
    costs = (weights[None, :] * residual**2).sum(axis=1)
    best = grid[int(np.argmin(costs))]
    step = 2 * math.pi / bins
    phi = optimize.golden(cost, brack=(best - step, best, best + step), tol=1e-12)
    return float(phi % (2 * math.pi))
