"""
Discretised basis kernels and their frequency spectra.

A kernel of scale ``w`` is a ``2w x 2w`` complex array. Kernel pixel
``grid[a, b]`` (row ``a``, column ``b``) covers ``[b, b+1) x [a, a+1)`` in
kernel-local coordinates and the disk of radius ``w`` is centered on the
corner point ``(w, w)``, so the disk tiles the array exactly and every pixel
center sits at a half-integer offset from the disk center.

Each entry approximates ``integral over pixel ∩ disk of conj(V) dx dy / w**2``
with an equal-weight sub-pixel grid (``IntegrationStrategy``). A single
centered sample is the zero-order approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.fft
from scipy import ndimage

from .basis import BasisKind, OrderSet, basis_values, check_order
from .errors import SizeError

__all__ = [
    "IntegrationStrategy",
    "ZOA",
    "Kernel",
    "KernelBank",
    "kernel_zoa",
    "kernel_upsampled",
    "make_kernel",
    "kernel_spectrum",
    "spectrum_rescale",
    "bank_build",
]


@dataclass(frozen=True)
class IntegrationStrategy:
    """Sub-pixel cubature: ``L_side**2`` equally weighted samples per pixel."""

    L_side: int = 1

    def __post_init__(self):
        if int(self.L_side) != self.L_side or self.L_side < 1:
            raise ValueError(f"L_side must be a positive integer, got {self.L_side}")

    @classmethod
    def zoa(cls) -> "IntegrationStrategy":
        return cls(1)

    @classmethod
    def upsample(cls, L_side: int) -> "IntegrationStrategy":
        return cls(int(L_side))

    @classmethod
    def parse(cls, text) -> "IntegrationStrategy":
        """Parse ``"zoa"``, ``"upsample8"``, ``"upsample:8"`` or an integer."""
        if isinstance(text, cls):
            return text
        s = str(text).strip().lower()
        if s == "zoa":
            return cls(1)
        for prefix in ("upsample:", "upsample", "up"):
            if s.startswith(prefix):
                s = s[len(prefix):]
                break
        try:
            return cls(int(s))
        except ValueError:
            raise ValueError(f"cannot parse integration strategy {text!r}") from None

    @property
    def is_zoa(self) -> bool:
        return self.L_side == 1

    @property
    def code(self) -> int:
        return 0 if self.is_zoa else 1

    def __str__(self) -> str:
        return "zoa" if self.is_zoa else f"upsample{self.L_side}"


ZOA = IntegrationStrategy(1)


@dataclass(frozen=True)
class Kernel:
    kind: BasisKind
    n: int
    m: int
    w: int
    strategy: IntegrationStrategy
    grid: np.ndarray = field(repr=False, compare=False)

    @property
    def side(self) -> int:
        return 2 * self.w

    def total(self) -> complex:
        """Kernel sum, i.e. the moment of a unity image."""
        return complex(self.grid.sum())


def _check_scale(w) -> int:
    if int(w) != w or w < 1:
        raise ValueError(f"kernel scale must be an integer >= 1, got {w}")
    return int(w)


def make_kernel(kind, n: int, m: int, w: int, strategy: IntegrationStrategy = ZOA, *, chunk: int = 1 << 21) -> Kernel:
    """Discretise ``conj(V_nm)`` over a disk of radius *w*.

    Sub-samples sit at ``(k + 0.5) / L_side`` inside each pixel and are kept
    only when they fall inside the closed disk.
    """
    kind = BasisKind.parse(kind)
    check_order(kind, n, m)
    w = _check_scale(w)
    strategy = IntegrationStrategy.parse(strategy)
    L = strategy.L_side
    side = 2 * w
    offsets = (np.arange(side * L) + 0.5) / L - w
    weight = 1.0 / (L * L * w * w)
    grid = np.empty((side, side), dtype=complex)
    # bound memory for large w * L by processing bands of kernel rows
    rows_per_band = max(1, chunk // (side * L * L))
    for a0 in range(0, side, rows_per_band):
        a1 = min(side, a0 + rows_per_band)
        dy = offsets[a0 * L:a1 * L, None]
        dx = offsets[None, :]
        inside = dx * dx + dy * dy <= w * w
        values = np.conj(basis_values(kind, n, m, dx, dy, w)) * inside
        grid[a0:a1] = values.reshape(a1 - a0, L, side, L).sum(axis=(1, 3)) * weight
    return Kernel(kind, int(n), int(m), w, strategy, grid)


def kernel_zoa(kind, n: int, m: int, w: int) -> Kernel:
    """Zero-order approximation: one sample at each pixel center."""
    return make_kernel(kind, n, m, w, ZOA)


def kernel_upsampled(kind, n: int, m: int, w: int, L_side: int) -> Kernel:
    """Pseudo up-sampled kernel with ``L_side**2`` samples per pixel."""
    return make_kernel(kind, n, m, w, IntegrationStrategy(L_side))


def _embed_flipped(grid: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Place a ``2w x 2w`` kernel so that circular convolution realises the
    sliding inner product ``out[v, u] = sum K[a, b] f[v - w + a, u - w + b]``."""
    side = grid.shape[0]
    w = side // 2
    h = np.zeros(shape, dtype=complex)
    h[:side, :side] = grid[::-1, ::-1]
    return np.roll(h, (1 - w, 1 - w), axis=(0, 1))


def kernel_spectrum(kernel: Kernel, shape: tuple[int, int], *, workers: int | None = None, dtype=np.complex128) -> np.ndarray:
    """DFT of the flipped, wrapped kernel on a ``shape = (rows, cols)`` grid.

    Multiplying this spectrum with the DFT of a zero-padded image and
    inverting gives the dense moment field (see ``transform.dense_fft``).
    The DC bin equals the kernel sum. Only the ``2w`` occupied rows are
    transformed along the columns axis before the full transform along rows.
    """
    rows, cols = int(shape[0]), int(shape[1])
    if rows < kernel.side or cols < kernel.side:
        raise SizeError(f"spectrum grid {rows}x{cols} smaller than kernel side {kernel.side}")
    h = _embed_flipped(kernel.grid, (rows, cols)).astype(dtype, copy=False)
    occupied = np.flatnonzero(np.any(h != 0, axis=1))
    partial = np.zeros((rows, cols), dtype=dtype)
    partial[occupied] = scipy.fft.fft(h[occupied], axis=1, workers=workers)
    return scipy.fft.fft(partial, axis=0, workers=workers, overwrite_x=True)


def _half_pixel_phase(shape: tuple[int, int], scale: float = 1.0) -> np.ndarray:
    # the embedded kernel is sampled half a pixel off its continuous center
    fr = scipy.fft.fftfreq(shape[0])[:, None] * scale
    fc = scipy.fft.fftfreq(shape[1])[None, :] * scale
    return np.exp(-1j * math.pi * (fr + fc))


def spectrum_rescale(spectrum_w0: np.ndarray, w0: int, w: int) -> np.ndarray:
    """Derive the kernel spectrum at scale *w* from the one at *w0*.

    Uses ``F_w(xi) = F_w0(w * xi / w0)``. Because kernel entries carry the
    ``1 / w**2`` area normalisation, the amplitude factor ``(w / w0)**2`` of
    the continuous scaling theorem cancels against it and does not appear.
    The half-pixel sampling offset is removed before and restored after the
    frequency warp. Interpolation is bilinear on the centered spectrum;
    frequencies beyond the source band evaluate to zero.
    """
    spectrum_w0 = np.asarray(spectrum_w0)
    if w0 == w:
        return spectrum_w0.copy()
    if w0 < 1 or w < 1:
        raise ValueError("scales must be >= 1")
    shape = spectrum_w0.shape
    ratio = w / w0
    centered = scipy.fft.fftshift(spectrum_w0 / _half_pixel_phase(shape))
    coords = []
    for axis, size in enumerate(shape):
        freq = scipy.fft.fftfreq(size) * ratio
        coords.append(freq * size + size // 2)
    rr, cc = np.meshgrid(coords[0], coords[1], indexing="ij")
    points = np.array([rr, cc])
    warped = ndimage.map_coordinates(centered.real, points, order=1, mode="constant", cval=0.0) + 1j * ndimage.map_coordinates(
        centered.imag, points, order=1, mode="constant", cval=0.0
    )
    # map_coordinates already returns values at unshifted target positions
    return warped * _half_pixel_phase(shape)


@dataclass(frozen=True)
class KernelBank:
    """Lookup table of kernel spectra keyed by ``(n, m, w)`` on one grid shape."""

    kind: BasisKind
    shape: tuple[int, int]
    strategy: IntegrationStrategy
    entries: dict = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key) -> bool:
        return tuple(key) in self.entries

    def __getitem__(self, key) -> np.ndarray:
        return self.entries[tuple(key)]

    def keys(self):
        return self.entries.keys()

    @property
    def scales(self) -> list[int]:
        return sorted({k[2] for k in self.entries})


def bank_build(
    kind,
    orders: Iterable,
    scales: Iterable[int],
    shape: tuple[int, int],
    strategy: IntegrationStrategy = ZOA,
    use_rescale: bool = False,
    *,
    workers: int | None = None,
) -> KernelBank:
    """Precompute kernel spectra for every ``(n, m)`` in *orders* and every scale.

    With ``use_rescale`` only the smallest scale of each order is transformed
    directly; the others are warped from it with :func:`spectrum_rescale`.
    """
    kind = BasisKind.parse(kind)
    strategy = IntegrationStrategy.parse(strategy)
    scales = sorted({_check_scale(w) for w in scales})
    if not scales:
        raise ValueError("at least one scale is required")
    shape = (int(shape[0]), int(shape[1]))
    if 2 * scales[-1] > min(shape):
        raise SizeError(f"largest scale {scales[-1]} does not fit a {shape[0]}x{shape[1]} grid")
    pairs = [(p[0], p[1]) for p in (orders.pairs if isinstance(orders, OrderSet) else orders)]
    entries = {}
    for n, m in pairs:
        base = None
        for w in scales:
            if use_rescale and base is not None:
                entries[(n, m, w)] = spectrum_rescale(base, scales[0], w)
                continue
            spectrum = kernel_spectrum(make_kernel(kind, n, m, w, strategy), shape, workers=workers)
            entries[(n, m, w)] = spectrum
            base = spectrum
    return KernelBank(kind, shape, strategy, entries)
