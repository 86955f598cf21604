"""
Accuracy and cost measurements for the dense transform.

``calculation_error`` sums the magnitudes of the ``m != 0`` moments of a
unity image. Those moments vanish analytically, so whatever is left is
discretisation error. ``decomposition_benchmark`` times one dense channel per
scale on a fixed pseudo-random image with every thread pool pinned to one.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .basis import BasisKind, order_set
from .errors import DegenerateInputError
from .kernels import IntegrationStrategy, kernel_spectrum, make_kernel
from .transform import _apply, _padded_fft, dense_spatial, fft_shape

__all__ = ["CEReport", "DTReport", "calculation_error", "decomposition_benchmark", "PATHS"]

PATHS = ("spatial", "fft", "fft+bank")


@dataclass(frozen=True)
class CEReport:
    kind: BasisKind
    strategy: IntegrationStrategy
    K: int
    w: int
    ce: float
    terms: int = 0

    def row(self) -> dict:
        return {"kind": self.kind.value, "strategy": str(self.strategy), "K": self.K, "w": self.w, "ce": self.ce}


def calculation_error(kind, strategy, K: int, w: int) -> CEReport:
    """Unity-image calculation error over the infinity-norm order set of bound *K*.

    The unity-image moment of ``(n, m)`` is the sum of its kernel, so no image
    is formed. Only ``m >= 1`` is enumerated; negative repetitions would add
    the same magnitudes again for this real input.
    """
    kind = BasisKind.parse(kind)
    strategy = IntegrationStrategy.parse(strategy)
    if K < 1:
        raise DegenerateInputError(f"K={K} leaves no order with m != 0")
    pairs = [p for p in order_set(kind, math.inf, K) if p.m != 0]
    if not pairs:
        raise DegenerateInputError(f"{kind.value} has no admissible order with m != 0 for K={K}")
    ce = math.fsum(abs(make_kernel(kind, n, m, w, strategy).total()) for n, m in pairs)
    return CEReport(kind, strategy, int(K), int(w), ce, len(pairs))


@dataclass(frozen=True)
class DTReport:
    """Per-scale single-thread CPU times for one evaluation path."""

    path: str
    image_size: tuple[int, int]
    scales: tuple[int, ...]
    seconds: tuple[float, ...]
    grid: tuple[int, int] | None = None
    repeats: int = 0

    def time_at(self, w: int) -> float:
        return self.seconds[self.scales.index(w)]

    def rows(self) -> list[dict]:
        return [{"path": self.path, "w": w, "seconds": s} for w, s in zip(self.scales, self.seconds)]


def _interleaved_medians(fns, repeats: int) -> list[float]:
    # one warm-up per callable, then round-robin rounds so slow drift in
    # machine speed hits every scale alike instead of a contiguous block
    for fn in fns:
        fn()
    samples = [[] for _ in fns]
    for _ in range(repeats):
        for i, fn in enumerate(fns):
            t0 = time.process_time()
            fn()
            samples[i].append(time.process_time() - t0)
    return [statistics.median(x) for x in samples]


def _timed_call(path, image, kernel, grid):
    if path == "spatial":
        return lambda: dense_spatial(image, kernel)
    if path == "fft":
        return lambda: _apply(_padded_fft(image, grid, 1), kernel_spectrum(kernel, grid, workers=1), image.shape, 1)
    spectrum = kernel_spectrum(kernel, grid, workers=1)
    return lambda: _apply(_padded_fft(image, grid, 1), spectrum, image.shape, 1)


def decomposition_benchmark(
    image_size: tuple[int, int],
    kind,
    order: tuple[int, int],
    scales: Sequence[int],
    paths: Sequence[str] = PATHS,
    *,
    strategy=IntegrationStrategy(1),
    repeats: int = 5,
    spatial_scales: Sequence[int] | None = None,
    spatial_repeats: int | None = None,
    seed: int = 0,
) -> list[DTReport]:
    """Time one dense channel ``(n, m)`` per scale and per path.

    Every FFT path works on one grid sized for the largest scale, as a kernel
    bank must, so its cost is independent of ``w``. Timed work per path:

    ``fft``
        kernel FFT, image FFT, product and inverse FFT.
    ``fft+bank``
        the same minus the kernel FFT, whose spectrum is looked up.
    ``spatial``
        the sliding-window sum. Its cost grows like ``w**2``, so it can be
        restricted to *spatial_scales* (a subset of *scales*) with its own
        repeat count.

    Kernel discretisation is image-independent set-up work and is left out of
    every path. Times are process CPU seconds, the median of *repeats* runs
    after one discarded warm-up; runs are interleaved across scales.
    """
    scales = [int(w) for w in scales]
    if scales != sorted(scales):
        raise ValueError("scales must be sorted ascending")
    for p in paths:
        if p not in PATHS:
            raise ValueError(f"unknown path {p!r}; expected one of {PATHS}")
    kind = BasisKind.parse(kind)
    strategy = IntegrationStrategy.parse(strategy)
    n, m = int(order[0]), int(order[1])
    rows, cols = int(image_size[0]), int(image_size[1])
    image = np.random.default_rng(seed).random((rows, cols))
    grid = fft_shape((rows, cols), max(scales))
    reports = []
    with threadpool_limits(limits=1):
        for path in paths:
            path_scales = scales
            reps = repeats
            if path == "spatial":
                path_scales = scales if spatial_scales is None else [w for w in scales if w in set(spatial_scales)]
                reps = repeats if spatial_repeats is None else spatial_repeats
                # compile the sliding loop outside the timed region
                dense_spatial(np.zeros((4, 4)), make_kernel(kind, n, m, 1, strategy))
            fns = [_timed_call(path, image, make_kernel(kind, n, m, w, strategy), grid) for w in path_scales]
            times = _interleaved_medians(fns, reps)
            reports.append(DTReport(path, (rows, cols), tuple(path_scales), tuple(times), grid, reps))
    return reports
