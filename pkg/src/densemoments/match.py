"""
Dense correspondence between feature fields.

``dense_match`` is a stripped-down PatchMatch on per-pixel feature vectors:
seeded random initialisation, alternating forward/backward scan-order
propagation and a random search around the current match whose radius
halves from the field size down to one pixel. A candidate replaces the current match only when it is
strictly closer, so the per-pixel distance never grows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import SizeError
from .invariants import FeatureField

__all__ = ["MatchField", "dense_match", "repeatability", "affine"]


@dataclass(frozen=True)
class MatchField:
    """Per-pixel integer offset ``(dx, dy)`` into the target field and match distance.

    ``offsets[v, u] = (dx, dy)`` means source position ``(u, v)`` matches
    target position ``(u + dx, v + dy)``. Positions with ``valid`` False
    carry no match (offset 0, distance ``inf``).
    """

    offsets: np.ndarray = field(repr=False)
    distance: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.distance.shape

    def targets(self) -> np.ndarray:
        """Matched target positions as an ``(rows, cols, 2)`` array of ``(x, y)``."""
        rows, cols = self.shape
        yy, xx = np.mgrid[0:rows, 0:cols]
        return np.stack([xx + self.offsets[..., 0], yy + self.offsets[..., 1]], axis=-1)

    def offset_length(self) -> np.ndarray:
        return np.hypot(self.offsets[..., 0], self.offsets[..., 1])


@numba.njit(cache=True, inline="always")
def _try(src, dst, dvalid, u, v, tx, ty, best, off, min_off2):
    rows_d, cols_d = dvalid.shape
    if tx < 0 or ty < 0 or tx >= cols_d or ty >= rows_d:
        return
    dx = tx - u
    dy = ty - v
    if dx * dx + dy * dy < min_off2 or not dvalid[ty, tx]:
        return
    limit = best[v, u]
    s = 0.0
    for k in range(src.shape[2]):
        d = src[v, u, k] - dst[ty, tx, k]
        s += d * d
        if s >= limit:
            return
    best[v, u] = s
    off[v, u, 0] = dx
    off[v, u, 1] = dy


@numba.njit(cache=True, inline="always")
def _try_batch(src, dst, dvalid, u, v, cand, count, dist, best, off, min_off2):
    # Full distances first, selection second. Without the early exit the
    # candidate loads do not depend on each other and overlap in flight,
    # which matters because every candidate is a cache miss. Selecting in
    # candidate order with strict improvement gives the same result as
    # trying them one by one.
    rows_d, cols_d = dvalid.shape
    for i in range(count):
        tx = cand[i, 0]
        ty = cand[i, 1]
        dist[i] = np.inf
        if tx < 0 or ty < 0 or tx >= cols_d or ty >= rows_d:
            continue
        dx = tx - u
        dy = ty - v
        if dx * dx + dy * dy < min_off2 or not dvalid[ty, tx]:
            continue
        s = 0.0
        for k in range(src.shape[2]):
            d = src[v, u, k] - dst[ty, tx, k]
            s += d * d
        dist[i] = s
    for i in range(count):
        if dist[i] < best[v, u]:
            best[v, u] = dist[i]
            off[v, u, 0] = cand[i, 0] - u
            off[v, u, 1] = cand[i, 1] - v


@numba.njit(cache=True)
def _patchmatch(src, svalid, dst, dvalid, iterations, seed, min_off2, max_init_tries, refine):
    np.random.seed(seed)
    rows, cols = svalid.shape
    rows_d, cols_d = dvalid.shape
    off = np.zeros((rows, cols, 2), dtype=np.int64)
    best = np.full((rows, cols), np.inf)
    for v in range(rows):
        for u in range(cols):
            if not svalid[v, u]:
                continue
            for _ in range(max_init_tries):
                tx = np.random.randint(0, cols_d)
                ty = np.random.randint(0, rows_d)
                _try(src, dst, dvalid, u, v, tx, ty, best, off, min_off2)
                if best[v, u] < np.inf:
                    break
    radius0 = max(rows_d, cols_d)
    n_radii = 0
    r = radius0
    while r >= 1:
        n_radii += 1
        r //= 2
    # with refine, the 8 targets around each propagated candidate are tried
    # too, since rotated or rescaled copies shift the true target by a pixel
    # or two per step
    reach = 1 if refine else 0
    side = 2 * reach + 1
    cand = np.empty((max(2 * side * side, n_radii), 2), dtype=np.int64)
    dist = np.empty(cand.shape[0])
    for it in range(iterations):
        forward = it % 2 == 0
        step = 1 if forward else -1
        for vi in range(rows):
            v = vi if forward else rows - 1 - vi
            for ui in range(cols):
                u = ui if forward else cols - 1 - ui
                if not svalid[v, u]:
                    continue
                # propagation from the already visited horizontal and vertical neighbours
                count = 0
                for which in range(2):
                    pu = u - step if which == 0 else u
                    pv = v if which == 0 else v - step
                    if pu < 0 or pu >= cols or pv < 0 or pv >= rows:
                        continue
                    if not svalid[pv, pu] or best[pv, pu] == np.inf:
                        continue
                    cx = u + off[pv, pu, 0]
                    cy = v + off[pv, pu, 1]
                    for ey in range(-reach, reach + 1):
                        for ex in range(-reach, reach + 1):
                            cand[count, 0] = cx + ex
                            cand[count, 1] = cy + ey
                            count += 1
                _try_batch(src, dst, dvalid, u, v, cand, count, dist, best, off, min_off2)
                # random search around the match held after propagation
                cx = u + off[v, u, 0]
                cy = v + off[v, u, 1]
                radius = radius0
                for i in range(n_radii):
                    cand[i, 0] = cx + np.random.randint(-radius, radius + 1)
                    cand[i, 1] = cy + np.random.randint(-radius, radius + 1)
                    radius //= 2
                _try_batch(src, dst, dvalid, u, v, cand, n_radii, dist, best, off, min_off2)
    return off, best


def dense_match(
    src: FeatureField,
    dst: FeatureField,
    iterations: int = 3,
    seed: int = 0,
    *,
    min_offset: float = 0.0,
    max_init_tries: int = 64,
    refine: bool = False,
) -> MatchField:
    """Approximate nearest-neighbour field from *src* into *dst*.

    Parameters
    ----------
    src, dst : FeatureField
        Feature fields of equal dimension; only valid positions take part.
    iterations : int
        Number of propagation + random-search sweeps, alternating scan order.
    seed : int
        Seeds the whole run; equal seeds give byte-identical results, and a
        run with more iterations repeats the shorter run as its prefix.
    min_offset : float
        Candidates closer than this (in pixels) are rejected. Used when
        matching a field against itself.
    refine : bool
        Also try the 8 targets adjacent to every propagated candidate. Speeds
        up convergence where the true offset varies from pixel to pixel
        (rotated or rescaled content).

    Returns
    -------
    MatchField
    """
    if src.dim != dst.dim:
        raise SizeError(f"feature dimensions differ: {src.dim} vs {dst.dim}")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not dst.valid.any():
        raise SizeError("target field has no valid position")
    # float32 fields stay float32 to halve memory traffic; sums accumulate in float64
    dtype = np.float32 if src.vectors.dtype == np.float32 and dst.vectors.dtype == np.float32 else np.float64
    off, best = _patchmatch(
        np.ascontiguousarray(src.vectors, dtype=dtype),
        np.ascontiguousarray(src.valid),
        np.ascontiguousarray(dst.vectors, dtype=dtype),
        np.ascontiguousarray(dst.valid),
        int(iterations),
        int(seed) % (2**32),
        float(min_offset) ** 2,
        int(max_init_tries),
        bool(refine),
    )
    valid = src.valid & np.isfinite(best)
    off[~valid] = 0
    return MatchField(off, np.where(valid, np.sqrt(best), np.inf), valid)


def affine(matrix=None, *, shift=(0.0, 0.0), angle: float = 0.0, center=(0.0, 0.0)) -> np.ndarray:
    """2x3 affine map on ``(x, y)``: rotation by *angle* about *center*, then *shift*.

    A positive angle turns ``+x`` toward ``+y``, i.e. clockwise on screen with
    ``y`` pointing down. Passing *matrix* returns it as a validated array.
    """
    if matrix is not None:
        a = np.asarray(matrix, dtype=float)
        if a.shape != (2, 3):
            raise ValueError("affine matrix must be 2x3")
        return a
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    ctr = np.asarray(center, dtype=float)
    t = ctr - rot @ ctr + np.asarray(shift, dtype=float)
    return np.hstack([rot, t[:, None]])


def repeatability(mf: MatchField, gt_transform, epsilon: float, target_valid=None) -> float:
    """Share of matched pixels landing within *epsilon* of the ground-truth position.

    *gt_transform* is a 2x3 affine matrix acting on ``(x, y, 1)``. When
    *target_valid* is given, only source pixels whose true image falls on a
    valid target position are counted; those are the only ones that can be
    matched correctly.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    a = affine(gt_transform)
    rows, cols = mf.shape
    yy, xx = np.mgrid[0:rows, 0:cols].astype(float)
    gx = a[0, 0] * xx + a[0, 1] * yy + a[0, 2]
    gy = a[1, 0] * xx + a[1, 1] * yy + a[1, 2]
    mask = mf.valid.copy()
    if target_valid is not None:
        target_valid = np.asarray(target_valid, dtype=bool)
        ix, iy = np.rint(gx).astype(int), np.rint(gy).astype(int)
        inside = (ix >= 0) & (iy >= 0) & (ix < target_valid.shape[1]) & (iy < target_valid.shape[0])
        ok = np.zeros_like(mask)
        ok[inside] = target_valid[iy[inside], ix[inside]]
        mask &= ok
    total = int(mask.sum())
    if total == 0:
        return 0.0
    t = mf.targets()
    err = np.hypot(t[..., 0] - gx, t[..., 1] - gy)
    return float(np.count_nonzero(err[mask] <= epsilon)) / total
