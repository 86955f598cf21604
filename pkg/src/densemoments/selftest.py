"""
Fast analytic checks of an installation.

Each check compares a computed quantity with a closed-form value: the
unity-image moments, radial orthogonality, agreement of the spatial and FFT
paths, and the rotation and flip laws of the coefficients.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .basis import BasisKind, LocalFrame, order_set, radial_orthogonality
from .kernels import IntegrationStrategy, kernel_spectrum, make_kernel
from .transform import dense_fft, dense_spatial, fft_shape, moments_at

__all__ = ["Check", "run_checks"]


class Check(NamedTuple):
    name: str
    ok: bool
    value: float
    limit: float


def _unity(kind=BasisKind.PCT, w: int = 8, K: int = 5) -> list[Check]:
    strategy = IntegrationStrategy.upsample(8)
    dc = abs(make_kernel(kind, 0, 0, w, strategy).total() - math.sqrt(math.pi))
    worst = max(abs(make_kernel(kind, n, m, w, strategy).total()) for n, m in order_set(kind, math.inf, K) if m != 0)
    return [Check("unity dc", dc <= 5e-3, dc, 5e-3), Check("unity m!=0", worst <= 5e-3, worst, 5e-3)]


def _orthogonality() -> list[Check]:
    out = []
    for kind in (BasisKind.PCT, BasisKind.PCET, BasisKind.PST, BasisKind.RHFM, BasisKind.EFM, BasisKind.OFMM):
        worst = 0.0
        low = 1 if kind is BasisKind.PST else 0
        for n in range(low, low + 3):
            for n2 in range(low, low + 3):
                target = 1.0 / (2 * math.pi) if n == n2 else 0.0
                worst = max(worst, abs(radial_orthogonality(kind, n, n2, 4096) - target))
        out.append(Check(f"orthogonality {kind.value}", worst <= 1e-3, worst, 1e-3))
    return out


def _paths(seed: int = 0) -> list[Check]:
    image = np.random.default_rng(seed).random((40, 40))
    w = 8
    grid = fft_shape(image.shape, w)
    worst = 0.0
    for kind in (BasisKind.PCT, BasisKind.ZM):
        for n, m in ((0, 0), (1, 1), (2, 0)):
            k = make_kernel(kind, n, m, w)
            a = dense_spatial(image, k)
            b = dense_fft(image, kernel_spectrum(k, grid), w)
            worst = max(worst, float(np.max(np.abs(a - b))))
    return [Check("path equivalence", worst <= 1e-8, worst, 1e-8)]


def _rotation_flip(seed: int = 1) -> list[Check]:
    image = np.random.default_rng(seed).random((32, 32))
    frame = LocalFrame(16, 16, 12)
    worst_rot = worst_flip = 0.0
    for n, m in ((1, 1), (1, 2), (2, 3)):
        z = moments_at(image, BasisKind.PCT, n, m, frame)
        scale = max(abs(z), 1e-12)
        zr = moments_at(np.rot90(image, 1), BasisKind.PCT, n, m, frame)
        worst_rot = max(worst_rot, abs(zr - z * np.exp(1j * m * math.pi / 2)) / scale)
        zu = moments_at(np.flipud(image), BasisKind.PCT, n, m, frame)
        zl = moments_at(np.fliplr(image), BasisKind.PCT, n, m, frame)
        worst_flip = max(worst_flip, abs(zu - np.conj(z)) / scale, abs(zl - (-1) ** m * np.conj(z)) / scale)
    return [
        Check("rotation phase law", bool(worst_rot <= 1e-6), float(worst_rot), 1e-6),
        Check("flip conjugation", bool(worst_flip <= 1e-9), float(worst_flip), 1e-9),
    ]


def run_checks() -> list[Check]:
    """Run every check and return the results; nothing is raised on failure."""
    return _unity() + _orthogonality() + _paths() + _rotation_flip()
