"""
Perceptual hashing with dense moment features.

A digest stores, for every cell of a regular grid, the scale-pooled
magnitude features at the cell center quantized to one byte per component.
Two digests are compared cell by cell; cells whose distance exceeds an
adaptive threshold are reported as tampered.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from ..basis import BasisKind, order_set
from ..errors import ConfigMismatchError, DegenerateInputError, FormatError, SizeError
from ..kernels import IntegrationStrategy
from ..transform import as_image, iter_channels

__all__ = [
    "HashConfig",
    "HashDigest",
    "phash_generate",
    "phash_compare",
    "otsu_threshold",
    "quantize",
    "HashComparison",
]

_MAGIC = b"DIRH"
_VERSION = 1
# magic, version, config hash (16 ascii hex chars), grid rows, grid cols, dim
_HEAD = struct.Struct("<4sH16sIII")


@dataclass(frozen=True)
class HashConfig:
    """Parameters of :func:`phash_generate`."""

    stride: int = 8
    kind: str = "PCT"
    norm: float = math.inf
    K: int = 3
    scales: tuple[int, ...] = (8, 10, 12)
    pooling: str = "average"
    strategy: str = "zoa"

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(int(w) for w in self.scales))
        object.__setattr__(self, "kind", BasisKind.parse(self.kind).value)
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValueError("stride must be a positive integer")
        if not self.scales or any(w < 1 for w in self.scales):
            raise ValueError("scales must be positive")
        if self.pooling not in ("average", "max"):
            raise ValueError(f"unknown pooling {self.pooling!r}")

    @property
    def dim(self) -> int:
        return len(order_set(self.kind, self.norm, self.K))

    def digest(self) -> str:
        text = repr(sorted(asdict(self).items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class HashDigest:
    """Quantized feature grid with the ranges needed to decode it.

    ``codes`` has shape ``(grid_rows, grid_cols, dim)`` and dtype uint8;
    ``ranges`` holds ``(lo, hi)`` per component.
    """

    config_hash: str
    codes: np.ndarray = field(repr=False)
    ranges: np.ndarray = field(repr=False)

    @property
    def grid(self) -> tuple[int, int]:
        return self.codes.shape[0], self.codes.shape[1]

    @property
    def dim(self) -> int:
        return self.codes.shape[2]

    @property
    def payload_bytes(self) -> int:
        return self.codes.size

    @property
    def header_bytes(self) -> int:
        return _HEAD.size + 16 * self.dim

    @property
    def nbytes(self) -> int:
        return self.header_bytes + self.payload_bytes

    def dequantize(self) -> np.ndarray:
        lo, hi = self.ranges[:, 0], self.ranges[:, 1]
        return lo + self.codes.astype(float) * ((hi - lo) / 255.0)

    def to_bytes(self) -> bytes:
        rows, cols = self.grid
        head = _HEAD.pack(_MAGIC, _VERSION, self.config_hash.encode("ascii"), rows, cols, self.dim)
        return head + self.ranges.astype("<f8").tobytes() + self.codes.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "HashDigest":
        if len(data) < _HEAD.size:
            raise FormatError("digest shorter than its header")
        magic, version, chash, rows, cols, dim = _HEAD.unpack_from(data)
        if magic != _MAGIC:
            raise FormatError(f"bad digest magic {magic!r}")
        if version != _VERSION:
            raise FormatError(f"unsupported digest version {version}")
        need = _HEAD.size + 16 * dim + rows * cols * dim
        if len(data) != need:
            raise FormatError(f"digest holds {len(data)} bytes, header promises {need}")
        off = _HEAD.size
        ranges = np.frombuffer(data, "<f8", 2 * dim, off).reshape(dim, 2).astype(float)
        codes = np.frombuffer(data, np.uint8, rows * cols * dim, off + 16 * dim).reshape(rows, cols, dim).copy()
        if not np.all(np.isfinite(ranges)):
            raise FormatError("non-finite quantization range")
        return cls(chash.decode("ascii"), codes, ranges)


def quantize(features, config_hash: str) -> HashDigest:
    """Per-component affine quantization of a ``(rows, cols, dim)`` grid to 8 bits."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 3:
        raise ValueError("expected a (rows, cols, dim) feature grid")
    if not np.all(np.isfinite(features)):
        raise ValueError("features must be finite")
    lo = features.min(axis=(0, 1))
    hi = features.max(axis=(0, 1))
    span = np.where(hi > lo, hi - lo, 1.0)
    codes = np.clip(np.rint((features - lo) / span * 255.0), 0, 255).astype(np.uint8)
    return HashDigest(config_hash, codes, np.stack([lo, hi], axis=1))


def _cell_centers(size: int, stride: int) -> np.ndarray:
    return np.arange(size // stride) * stride + stride // 2


def phash_generate(image, cfg: HashConfig | None = None) -> HashDigest:
    """Digest of *image*: pooled magnitude features sampled at the grid cell centers.

    The grid has ``rows // stride`` by ``cols // stride`` cells; the feature
    of a cell is taken at the pixel corner nearest its center. Disks reaching
    past the image see zero padding, so border cells are hashed too.
    """
    cfg = cfg or HashConfig()
    image = as_image(image)
    rows, cols = image.shape
    if min(rows, cols) < max(cfg.stride, 2 * max(cfg.scales)):
        raise SizeError(f"image {rows}x{cols} too small for stride {cfg.stride} and scale {max(cfg.scales)}")
    kind = BasisKind.parse(cfg.kind)
    orders = order_set(kind, cfg.norm, cfg.K)
    index = {(p.n, p.m): k for k, p in enumerate(orders)}
    ys, xs = _cell_centers(rows, cfg.stride), _cell_centers(cols, cfg.stride)
    grid = np.zeros((len(ys), len(xs), len(orders)))
    if cfg.pooling == "max":
        grid[:] = -np.inf
    sel = np.ix_(ys, xs)
    strategy = IntegrationStrategy.parse(cfg.strategy)
    for (n, m, _w), chan in iter_channels(image, kind, orders, cfg.scales, strategy):
        mag = np.abs(chan[sel])
        k = index[(n, m)]
        if cfg.pooling == "average":
            grid[..., k] += mag
        else:
            grid[..., k] = np.maximum(grid[..., k], mag)
    if cfg.pooling == "average":
        grid /= len(cfg.scales)
    return quantize(grid, cfg.digest())


def otsu_threshold(values, bins: int = 256) -> float:
    """Threshold maximizing the between-class variance of a histogram of *values*.

    The histogram spans ``[min, max]`` in *bins* equal bins and values ``< t``
    form the lower class. Bin edges separated only by empty bins split the
    data identically, so they count as one candidate; among equally good
    splits the lowest wins, and the threshold returned is the middle of its
    run of equivalent edges (the middle of the gap between the classes).
    """
    v = np.asarray(values, dtype=float).ravel()
    v = v[np.isfinite(v)]
    if v.size == 0 or v.min() == v.max():
        raise DegenerateInputError("Otsu threshold needs at least two distinct values")
    hist, edges = np.histogram(v, bins=bins, range=(v.min(), v.max()))
    p = hist / hist.sum()
    centers = 0.5 * (edges[:-1] + edges[1:])
    # w0[k], mu0[k]: weight and mean of bins [0, k]; the split sits at edges[k + 1]
    w0 = np.cumsum(p)[:-1]
    s0 = np.cumsum(p * centers)[:-1]
    w1 = 1.0 - w0
    total = s0[-1] + p[-1] * centers[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (total * w0 - s0) ** 2 / (w0 * w1)
    between = np.where((w0 > 0) & (w1 > 0), between, -np.inf)
    # exact ties only; float noise between equal splits is below this
    best = between.max()
    k = int(np.flatnonzero(between >= best - 1e-12 * abs(best))[0])
    # edges k+1 .. j+1 give the same partition while bins k+1 .. j are empty
    j = k
    while j + 1 < bins - 1 and hist[j + 1] == 0:
        j += 1
    return float(0.5 * (edges[k + 1] + edges[j + 1]))


@dataclass(frozen=True)
class HashComparison:
    distance: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)
    threshold: float
    otsu: float

    def __iter__(self):
        return iter((self.distance, self.mask, self.threshold))


def phash_compare(a: HashDigest, b: HashDigest, noise_floor: float = 3.0) -> HashComparison:
    """Per-cell distances between two digests and the cells flagged as tampered.

    Cells in the upper Otsu class of the distances are flagged, provided
    they also exceed ``noise_floor`` times the median distance. The floor
    matters for untampered pairs: Otsu always splits, so without it the
    upper half of plain recompression noise would be reported. When all
    distances are equal nothing is flagged.
    """
    if a.config_hash != b.config_hash:
        raise ConfigMismatchError(f"digests from different configurations: {a.config_hash} vs {b.config_hash}")
    if a.codes.shape != b.codes.shape:
        raise ConfigMismatchError(f"digest grids differ: {a.codes.shape} vs {b.codes.shape}")
    dist = np.sqrt(np.sum((a.dequantize() - b.dequantize()) ** 2, axis=-1))
    try:
        otsu = otsu_threshold(dist)
    except DegenerateInputError:
        return HashComparison(dist, np.zeros(dist.shape, dtype=bool), math.inf, math.inf)
    floor = noise_floor * float(np.median(dist))
    mask = (dist >= otsu) & (dist > floor)
    return HashComparison(dist, mask, max(otsu, floor), otsu)
