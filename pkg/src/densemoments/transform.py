"""
Dense moment fields over position and scale.

Three routes compute the same quantity, the local inner product of an image
with ``V_nm`` on the disk of radius ``w`` centered at ``(u, v)``:

* :func:`moments_at` sums pixel contributions at one frame directly from the
  basis definition. It is slow and serves as the reference.
* :func:`dense_spatial` slides a discretised kernel over the zero-padded image.
* :func:`dense_fft` multiplies spectra on a padded grid.

Images are 2-D float arrays indexed ``[row, col] = [y, x]``; pixel
``[i, j]`` covers ``[j, j+1) x [i, i+1)``. Field entry ``[v, u]`` belongs to
the disk centered on the pixel corner ``(x, y) = (u, v)``, which is why a
disk of integer radius covers exactly ``2w x 2w`` pixels. Entries with
``w <= u <= cols - w`` and ``w <= v <= rows - w`` are interior; the rest
see zero padding and are flagged invalid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numba
import numpy as np
import scipy.fft

from .basis import BasisKind, LocalFrame, OrderSet, basis_values, check_order
from .errors import OutOfDomainError, SizeError
from .kernels import ZOA, IntegrationStrategy, Kernel, KernelBank, kernel_spectrum, make_kernel

__all__ = [
    "as_image",
    "MomentField",
    "moments_at",
    "dense_spatial",
    "dense_fft",
    "fft_shape",
    "iter_channels",
    "decompose",
    "interior_mask",
]


def as_image(image) -> np.ndarray:
    """Validate and return a finite 2-D float64 array."""
    arr = np.asarray(image, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-D grayscale image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite samples")
    return arr


def interior_mask(shape: tuple[int, int], w: int) -> np.ndarray:
    """Positions whose disk of radius *w* lies fully inside the image."""
    rows, cols = shape
    mask = np.zeros(shape, dtype=bool)
    if rows >= 2 * w and cols >= 2 * w:
        mask[w:rows - w + 1, w:cols - w + 1] = True
    return mask


@dataclass(frozen=True)
class MomentField:
    """Complex coefficient fields keyed by ``(n, m, w)``."""

    kind: BasisKind
    shape: tuple[int, int]
    strategy: IntegrationStrategy
    channels: dict = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.channels)

    def __getitem__(self, key) -> np.ndarray:
        return self.channels[tuple(key)]

    def __contains__(self, key) -> bool:
        return tuple(key) in self.channels

    def keys(self):
        return self.channels.keys()

    @property
    def scales(self) -> list[int]:
        return sorted({k[2] for k in self.channels})

    def valid_mask(self, w: int) -> np.ndarray:
        return interior_mask(self.shape, w)


def moments_at(image, kind, n: int, m: int, frame: LocalFrame, strategy: IntegrationStrategy = ZOA) -> complex:
    """Moment of *image* in one local frame, summed pixel by pixel.

    Every pixel meeting the disk contributes its samples-inside-disk average
    of ``conj(V)`` times the pixel value, scaled by ``1 / w**2``.
    """
    image = as_image(image)
    kind = BasisKind.parse(kind)
    check_order(kind, n, m)
    strategy = IntegrationStrategy.parse(strategy)
    rows, cols = image.shape
    u, v, w = float(frame.u), float(frame.v), float(frame.w)
    if u - w < 0 or v - w < 0 or u + w > cols or v + w > rows:
        raise OutOfDomainError(f"disk ({u}, {v}, {w}) exceeds the {rows}x{cols} image")
    L = strategy.L_side
    j0, j1 = int(math.floor(u - w)), int(math.ceil(u + w))
    i0, i1 = int(math.floor(v - w)), int(math.ceil(v + w))
    sub = (np.arange(L) + 0.5) / L
    xs = (np.arange(j0, j1)[:, None] + sub[None, :]).ravel()
    ys = (np.arange(i0, i1)[:, None] + sub[None, :]).ravel()
    dx = xs[None, :] - u
    dy = ys[:, None] - v
    inside = dx * dx + dy * dy <= w * w
    h = np.conj(basis_values(kind, n, m, dx, dy, w)) * inside
    h = h.reshape(i1 - i0, L, j1 - j0, L).sum(axis=(1, 3)) / (L * L * w * w)
    return complex(np.sum(h * image[i0:i1, j0:j1]))


@numba.njit(cache=True, nogil=True)
def _slide(padded, k_re, k_im, rows, cols):
    side = k_re.shape[0]
    out_re = np.zeros((rows, cols))
    out_im = np.zeros((rows, cols))
    for v in range(rows):
        for a in range(side):
            src = padded[v + a]
            for b in range(side):
                kr = k_re[a, b]
                ki = k_im[a, b]
                if kr == 0.0 and ki == 0.0:
                    continue
                for u in range(cols):
                    s = src[u + b]
                    out_re[v, u] += kr * s
                    out_im[v, u] += ki * s
    return out_re, out_im


def dense_spatial(image, kernel: Kernel) -> np.ndarray:
    """Sliding-window evaluation: ``out[v, u] = sum K[a, b] f[v-w+a, u-w+b]``.

    Cost grows with ``w**2`` per position.
    """
    image = as_image(image)
    w = kernel.w
    rows, cols = image.shape
    if rows < 2 * w or cols < 2 * w:
        raise SizeError(f"image {rows}x{cols} smaller than kernel side {2 * w}")
    padded = np.pad(image, w)
    grid = np.ascontiguousarray(kernel.grid)
    re, im = _slide(padded, np.ascontiguousarray(grid.real), np.ascontiguousarray(grid.imag), rows, cols)
    return re + 1j * im


def fft_shape(image_shape: tuple[int, int], w_max: int) -> tuple[int, int]:
    """Smallest FFT-friendly grid that holds the image plus a ``w_max`` guard band."""
    return tuple(scipy.fft.next_fast_len(int(s) + 2 * int(w_max)) for s in image_shape)


def _check_grid(image_shape, grid_shape, w):
    rows, cols = image_shape
    if grid_shape[0] < rows + 2 * w or grid_shape[1] < cols + 2 * w:
        raise SizeError(
            f"spectrum grid {grid_shape[0]}x{grid_shape[1]} cannot hold a {rows}x{cols} image with a {w}-pixel guard band"
        )


def _padded_fft(image: np.ndarray, grid_shape, workers=None, dtype=np.complex128) -> np.ndarray:
    return scipy.fft.fft2(image.astype(dtype, copy=False), s=grid_shape, workers=workers)


def _apply(image_spectrum, spectrum, image_shape, workers=None) -> np.ndarray:
    rows, cols = image_shape
    return scipy.fft.ifft2(image_spectrum * spectrum, workers=workers, overwrite_x=True)[:rows, :cols]


def dense_fft(image, spectrum: np.ndarray, w: int, *, workers: int | None = None) -> np.ndarray:
    """Frequency-domain evaluation with a precomputed kernel spectrum.

    The image is zero-padded to the spectrum grid, which must exceed the image
    by at least ``2w`` in each direction so that circular wrap-around never
    reaches the cropped result.
    """
    image = as_image(image)
    spectrum = np.asarray(spectrum)
    _check_grid(image.shape, spectrum.shape, w)
    return _apply(_padded_fft(image, spectrum.shape, workers), spectrum, image.shape, workers)


def _pairs(orders) -> list[tuple[int, int]]:
    return [(int(p[0]), int(p[1])) for p in (orders.pairs if isinstance(orders, OrderSet) else orders)]


def iter_channels(
    image,
    kind,
    orders,
    scales: Iterable[int],
    strategy: IntegrationStrategy = ZOA,
    path: str = "fft",
    bank: KernelBank | None = None,
    *,
    workers: int | None = None,
    single: bool = False,
) -> Iterator[tuple[tuple[int, int, int], np.ndarray]]:
    """Yield ``((n, m, w), field)`` one channel at a time.

    Lets callers reduce channels on the fly instead of holding the full field.
    ``single=True`` runs the FFT path in complex64, roughly halving its cost
    at about ``1e-6`` relative accuracy; bank spectra are used as stored.
    """
    image = as_image(image)
    kind = BasisKind.parse(kind)
    strategy = IntegrationStrategy.parse(strategy)
    scales = [int(w) for w in scales]
    if not scales:
        raise ValueError("at least one scale is required")
    w_max = max(scales)
    if 2 * w_max > min(image.shape):
        raise SizeError(f"scale {w_max} too large for a {image.shape[0]}x{image.shape[1]} image")
    pairs = _pairs(orders)
    if path == "spatial":
        for n, m in pairs:
            for w in scales:
                yield (n, m, w), dense_spatial(image, make_kernel(kind, n, m, w, strategy))
        return
    if path != "fft":
        raise ValueError(f"unknown path {path!r}; expected 'fft' or 'spatial'")
    if bank is not None:
        if bank.kind is not kind:
            raise ValueError(f"bank holds {bank.kind.value} kernels, requested {kind.value}")
        grid_shape = bank.shape
        _check_grid(image.shape, grid_shape, w_max)
    else:
        grid_shape = fft_shape(image.shape, w_max)
    dtype = np.complex64 if single else np.complex128
    image_spectrum = _padded_fft(image, grid_shape, workers, dtype)
    for n, m in pairs:
        for w in scales:
            if bank is not None and (n, m, w) in bank:
                spectrum = bank[(n, m, w)]
            else:
                spectrum = kernel_spectrum(make_kernel(kind, n, m, w, strategy), grid_shape, workers=workers, dtype=dtype)
            yield (n, m, w), _apply(image_spectrum, spectrum, image.shape, workers)


def decompose(
    image,
    kind,
    orders,
    scales: Iterable[int],
    strategy: IntegrationStrategy = ZOA,
    path: str = "fft",
    bank: KernelBank | None = None,
    *,
    workers: int | None = None,
) -> MomentField:
    """Dense moment field for every ``(n, m)`` in *orders* and every scale.

    With a *bank*, spectra are looked up instead of rebuilt; the bank grid
    must cover the image plus the largest scale's guard band.
    """
    image = as_image(image)
    kind = BasisKind.parse(kind)
    strategy = bank.strategy if bank is not None else IntegrationStrategy.parse(strategy)
    channels = dict(iter_channels(image, kind, orders, scales, strategy, path, bank, workers=workers))
    return MomentField(kind, image.shape, strategy, channels)
