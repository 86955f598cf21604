"""
Copy-move forgery detection on pooled dense moment features.

The image's feature field is matched against itself with a minimum offset,
pixels whose offset agrees with most of their neighbourhood are kept, both
ends of every kept match are marked and the mask is cleaned morphologically.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import asdict, dataclass, field

import numba
import numpy as np
from scipy import ndimage, signal

from ..basis import BasisKind, order_set
from ..errors import SizeError
from ..invariants import FeatureField
from ..kernels import IntegrationStrategy
from ..match import dense_match
from ..transform import as_image, interior_mask, iter_channels

__all__ = ["CopyMoveConfig", "ForgeryMask", "copymove_detect", "score_mask", "disk_footprint", "offset_consistency"]


def _default_scales() -> tuple[int, ...]:
    return tuple(int(round(w)) for w in np.linspace(8, 32, 10))


@dataclass(frozen=True)
class CopyMoveConfig:
    """Parameters of :func:`copymove_detect`.

    ``upsample_long_edge`` enlarges smaller images so the long edge reaches
    that many pixels before analysis; ``None`` analyses at native size.
    """

    kind: str = "PCT"
    norm: float = 1.0
    K: int = 3
    scales: tuple[int, ...] = field(default_factory=_default_scales)
    pooling: str = "average"
    strategy: str = "zoa"
    upsample_long_edge: int | None = 2000
    min_offset: float = 50.0
    iterations: int = 3
    refine: bool = True
    consistency_radius: int = 8
    consistency_fraction: float = 0.5
    offset_tolerance: float = 2.0
    consistency_model: str = "affine"
    morph_open: int = 3
    morph_close: int = 7

    def __post_init__(self):
        scales = tuple(int(w) for w in self.scales)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "kind", BasisKind.parse(self.kind).value)
        if not scales or any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValueError("scales must be non-empty and strictly increasing")
        if self.min_offset <= scales[-1]:
            raise ValueError(f"min_offset {self.min_offset} must exceed the largest scale {scales[-1]}")
        if self.pooling not in ("average", "max"):
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if not 0 < self.consistency_fraction <= 1:
            raise ValueError("consistency_fraction must lie in (0, 1]")

    def digest(self) -> str:
        text = repr(sorted(asdict(self).items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ForgeryMask:
    mask: np.ndarray = field(repr=False)
    config_hash: str
    runtime: float
    analysed_shape: tuple[int, int]

    @property
    def shape(self):
        return self.mask.shape


def disk_footprint(radius: int) -> np.ndarray:
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return xx * xx + yy * yy <= r * r


@numba.njit(cache=True)
def _consistency(off, valid, radius, tol2, fraction, affine, params, fitted):
    rows, cols = valid.shape
    keep = np.zeros((rows, cols), dtype=np.bool_)
    r2 = radius * radius
    side = 2 * radius + 1
    zs = np.empty((side * side, 2))
    ts = np.empty((side * side, 2))
    for v in range(rows):
        for u in range(cols):
            if not valid[v, u]:
                continue
            count = 0
            for dv in range(-radius, radius + 1):
                vv = v + dv
                if vv < 0 or vv >= rows:
                    continue
                for du in range(-radius, radius + 1):
                    uu = u + du
                    if uu < 0 or uu >= cols or du * du + dv * dv > r2 or not valid[vv, uu]:
                        continue
                    zs[count, 0] = du
                    zs[count, 1] = dv
                    ts[count, 0] = off[vv, uu, 0]
                    ts[count, 1] = off[vv, uu, 1]
                    count += 1
            # predicted neighbour offset = g[0] * du + g[1] * dv + g[2]
            gx = np.zeros(3)
            gy = np.zeros(3)
            if affine and fitted[v, u]:
                gx[:] = params[v, u, 0]
                gy[:] = params[v, u, 1]
            elif affine and count >= 3:
                m = np.zeros((3, 3))
                bx = np.zeros(3)
                by = np.zeros(3)
                for k in range(count):
                    z0, z1 = zs[k, 0], zs[k, 1]
                    m[0, 0] += z0 * z0
                    m[0, 1] += z0 * z1
                    m[0, 2] += z0
                    m[1, 1] += z1 * z1
                    m[1, 2] += z1
                    m[2, 2] += 1.0
                    bx[0] += z0 * ts[k, 0]
                    bx[1] += z1 * ts[k, 0]
                    bx[2] += ts[k, 0]
                    by[0] += z0 * ts[k, 1]
                    by[1] += z1 * ts[k, 1]
                    by[2] += ts[k, 1]
                m[1, 0] = m[0, 1]
                m[2, 0] = m[0, 2]
                m[2, 1] = m[1, 2]
                if abs(np.linalg.det(m)) > 1e-9:
                    gx = np.linalg.solve(m, bx)
                    gy = np.linalg.solve(m, by)
                else:
                    gx[2] = off[v, u, 0]
                    gy[2] = off[v, u, 1]
            else:
                gx[2] = off[v, u, 0]
                gy[2] = off[v, u, 1]
            agree = 0
            for k in range(count):
                ex = ts[k, 0] - (gx[0] * zs[k, 0] + gx[1] * zs[k, 1] + gx[2])
                ey = ts[k, 1] - (gy[0] * zs[k, 0] + gy[1] * zs[k, 1] + gy[2])
                if ex * ex + ey * ey <= tol2:
                    agree += 1
            keep[v, u] = count > 0 and agree >= fraction * count
    return keep


def _interior_affine_fit(offsets, valid, radius):
    # Where the whole disk is valid the normal equations are diagonal (the
    # disk is symmetric), so the fit reduces to three correlations per
    # offset component: mean, and first moments along x and y.
    fp = disk_footprint(radius)
    full = ndimage.binary_erosion(valid, structure=fp, border_value=0)
    yy, xx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    count = fp.sum()
    s2 = float((xx[fp] ** 2).sum())
    params = np.zeros(offsets.shape[:2] + (2, 3))
    kernels = ((fp * xx) / s2, (fp * yy) / s2, fp / count)
    for c in range(2):
        t = offsets[..., c].astype(float)
        for j, k in enumerate(kernels):
            # correlation with k equals convolution with the flipped kernel
            params[..., c, j] = signal.fftconvolve(t, k[::-1, ::-1], mode="same")
    return params, full


def offset_consistency(
    offsets, valid, radius: int = 8, fraction: float = 0.5, tolerance: float = 2.0, model: str = "affine"
) -> np.ndarray:
    """Keep pixels whose neighbourhood agrees on the offset.

    With ``model="translation"`` a neighbour agrees when its offset lies
    within *tolerance* pixels of the pixel's own. With ``model="affine"`` the
    neighbour offsets are compared with a least-squares affine fit of the
    offset field over the disk of *radius*, which also accepts the smoothly
    varying offsets of rotated or rescaled copies. A pixel is kept when at
    least *fraction* of its valid neighbours agree.
    """
    if model not in ("translation", "affine"):
        raise ValueError(f"unknown consistency model {model!r}")
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    valid = np.ascontiguousarray(valid, dtype=np.bool_)
    if model == "affine":
        params, fitted = _interior_affine_fit(offsets, valid, int(radius))
    else:
        params, fitted = np.zeros((1, 1, 2, 3)), np.zeros((1, 1), dtype=np.bool_)
    return _consistency(offsets, valid, int(radius), float(tolerance) ** 2, float(fraction), model == "affine", params, fitted)


def _pooled_features(image, cfg: CopyMoveConfig) -> FeatureField:
    kind = BasisKind.parse(cfg.kind)
    orders = order_set(kind, cfg.norm, cfg.K)
    index = {(p.n, p.m): k for k, p in enumerate(orders)}
    # channel-first while accumulating (contiguous planes), vector-last for matching
    acc = np.zeros((len(orders),) + image.shape, dtype=np.float32)
    if cfg.pooling == "max":
        acc[:] = -np.inf
    # channels are reduced as they arrive so the full complex field is never held
    strategy = IntegrationStrategy.parse(cfg.strategy)
    for (n, m, _w), chan in iter_channels(image, kind, orders, cfg.scales, strategy, single=True):
        plane = acc[index[(n, m)]]
        if cfg.pooling == "average":
            plane += np.abs(chan)
        else:
            np.maximum(plane, np.abs(chan), out=plane)
    if cfg.pooling == "average":
        acc /= len(cfg.scales)
    acc = np.ascontiguousarray(np.moveaxis(acc, 0, -1))
    return FeatureField(acc, interior_mask(image.shape, cfg.scales[-1]), tuple(orders.pairs), cfg.scales)


def copymove_detect(image, cfg: CopyMoveConfig | None = None, seed: int = 0) -> ForgeryMask:
    """Binary mask of regions that appear twice in *image*.

    Steps: optional enlargement to ``cfg.upsample_long_edge``; dense
    magnitude features pooled over ``cfg.scales``; self-matching that ignores
    offsets shorter than ``cfg.min_offset``; offset-consistency filtering;
    marking both ends of each surviving match; opening then closing with disk
    footprints; nearest-neighbour resampling back to the input size.
    """
    cfg = cfg or CopyMoveConfig()
    t0 = time.perf_counter()
    image = as_image(image)
    shape0 = image.shape
    work = image
    if cfg.upsample_long_edge and max(shape0) < cfg.upsample_long_edge:
        factor = cfg.upsample_long_edge / max(shape0)
        work = ndimage.zoom(image, factor, order=1)
    if min(work.shape) < 2 * cfg.scales[-1]:
        raise SizeError(f"image {work.shape[0]}x{work.shape[1]} too small for scale {cfg.scales[-1]}")
    features = _pooled_features(work, cfg)
    mf = dense_match(features, features, cfg.iterations, seed, min_offset=cfg.min_offset, refine=cfg.refine)
    keep = offset_consistency(
        mf.offsets, mf.valid, cfg.consistency_radius, cfg.consistency_fraction, cfg.offset_tolerance, cfg.consistency_model
    )
    mask = keep.copy()
    vs, us = np.nonzero(keep)
    mask[vs + mf.offsets[vs, us, 1], us + mf.offsets[vs, us, 0]] = True
    if cfg.morph_open:
        mask = ndimage.binary_opening(mask, structure=disk_footprint(cfg.morph_open))
    if cfg.morph_close:
        mask = ndimage.binary_closing(mask, structure=disk_footprint(cfg.morph_close))
    if mask.shape != shape0:
        ri = np.minimum((np.arange(shape0[0]) + 0.5) * mask.shape[0] / shape0[0], mask.shape[0] - 1).astype(int)
        ci = np.minimum((np.arange(shape0[1]) + 0.5) * mask.shape[1] / shape0[1], mask.shape[1] - 1).astype(int)
        mask = mask[np.ix_(ri, ci)]
    return ForgeryMask(mask, cfg.digest(), time.perf_counter() - t0, work.shape)


def score_mask(predicted, truth, exclude_border: int = 0) -> tuple[float, float, float]:
    """Pixel precision, recall and F1, ignoring a band of *exclude_border*
    pixels on both sides of the truth boundary. Undefined ratios count as 0."""
    pred = np.asarray(predicted.mask if isinstance(predicted, ForgeryMask) else predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise SizeError(f"mask shapes differ: {pred.shape} vs {truth.shape}")
    care = np.ones_like(truth)
    if exclude_border > 0:
        fp = disk_footprint(exclude_border)
        band = ndimage.binary_dilation(truth, structure=fp) & ~ndimage.binary_erosion(truth, structure=fp, border_value=1)
        care = ~band
    tp = np.count_nonzero(pred & truth & care)
    npred = np.count_nonzero(pred & care)
    ntrue = np.count_nonzero(truth & care)
    precision = tp / npred if npred else 0.0
    recall = tp / ntrue if ntrue else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1
