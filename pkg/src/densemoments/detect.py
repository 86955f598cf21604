"""
Template detection on a dense feature field.

A template is summarised by its magnitude feature vector at the template
center. Every valid position of the scene's feature field is scored by the
Euclidean distance to that vector; sub-threshold minima survive a greedy
non-maximum suppression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .basis import BasisKind, LocalFrame
from .errors import SizeError
from .invariants import FeatureField, _pairs
from .kernels import ZOA, IntegrationStrategy
from .transform import as_image, moments_at

__all__ = [
    "Detection",
    "DetectionResult",
    "GroundTruth",
    "template_signature",
    "distance_map",
    "detect_peaks",
    "f1_score",
]


class Detection(NamedTuple):
    u: int
    v: int
    w: float
    score: float


@dataclass(frozen=True)
class DetectionResult:
    """Detections sorted by ascending score, pairwise further apart than ``nms_radius``."""

    detections: tuple[Detection, ...]
    threshold: float
    nms_radius: float

    def __len__(self) -> int:
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)

    def positions(self) -> np.ndarray:
        return np.array([(d.u, d.v) for d in self.detections], dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class GroundTruth:
    """Known instance centers ``(u, v)`` with a per-instance tolerance radius."""

    points: tuple[tuple[float, float], ...]
    tolerance: tuple[float, ...] = field(default=())

    def __post_init__(self):
        tol = self.tolerance or (8.0,) * len(self.points)
        if len(tol) == 1 and len(self.points) > 1:
            tol = tol * len(self.points)
        if len(tol) != len(self.points):
            raise ValueError("one tolerance per ground-truth point is required")
        if any(t <= 0 for t in tol):
            raise ValueError("tolerance radii must be positive")
        object.__setattr__(self, "points", tuple((float(u), float(v)) for u, v in self.points))
        object.__setattr__(self, "tolerance", tuple(float(t) for t in tol))

    def __len__(self) -> int:
        return len(self.points)


def template_signature(
    template, kind, orders, scales: Sequence[int], strategy: IntegrationStrategy = ZOA
) -> np.ndarray:
    """Magnitude feature vectors at the template center, one row per scale.

    The center is the pixel corner ``(cols // 2, rows // 2)``, the same point
    a dense field assigns to a template pasted with its top-left corner at
    ``(u - cols // 2, v - rows // 2)``.
    """
    template = as_image(template)
    kind = BasisKind.parse(kind)
    rows, cols = template.shape
    u, v = cols // 2, rows // 2
    pairs = _pairs(orders)
    out = np.empty((len(scales), len(pairs)))
    for i, w in enumerate(scales):
        if u - w < 0 or v - w < 0 or u + w > cols or v + w > rows:
            raise SizeError(f"template {rows}x{cols} cannot hold a disk of radius {w} around its center")
        frame = LocalFrame(u, v, w)
        for k, (n, m) in enumerate(pairs):
            out[i, k] = abs(moments_at(template, kind, n, m, frame, strategy))
    return out


def distance_map(features: FeatureField, signature) -> np.ndarray:
    """Euclidean distance of every feature vector to *signature*; invalid positions are ``inf``."""
    signature = np.asarray(signature, dtype=float)
    if signature.ndim != 1 or signature.shape[0] != features.dim:
        raise SizeError(f"signature of shape {signature.shape} does not match feature dimension {features.dim}")
    d = np.sqrt(np.sum((features.vectors - signature) ** 2, axis=-1))
    d[~features.valid] = np.inf
    return d


def detect_peaks(dmap, threshold: float, nms_radius: float, w: float = 0.0) -> DetectionResult:
    """Greedy non-maximum suppression over positions scoring below *threshold*.

    Candidates are visited by ascending score (ties in row-major order); a
    candidate is kept when every kept detection lies more than *nms_radius*
    away.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    dmap = np.asarray(dmap, dtype=float)
    vs, us = np.nonzero(dmap < threshold)
    scores = dmap[vs, us]
    order = np.lexsort((us, vs, scores))
    kept: list[Detection] = []
    kept_xy = np.empty((0, 2))
    r2 = float(nms_radius) ** 2
    for i in order:
        u, v = int(us[i]), int(vs[i])
        if kept_xy.size and np.min((kept_xy[:, 0] - u) ** 2 + (kept_xy[:, 1] - v) ** 2) <= r2:
            continue
        kept.append(Detection(u, v, w, float(scores[i])))
        kept_xy = np.vstack([kept_xy, (u, v)])
    return DetectionResult(tuple(kept), float(threshold), float(nms_radius))


def f1_score(detections, gt: GroundTruth) -> tuple[float, float, float]:
    """Precision, recall and F1 under greedy one-to-one matching.

    Detections are taken by ascending score and paired with the nearest still
    unmatched ground-truth point inside that point's tolerance. An undefined
    ratio (no detections, or no ground truth) counts as 0; with both empty
    the result is ``(1, 1, 1)``.
    """
    dets = sorted(detections, key=lambda d: d.score) if not isinstance(detections, DetectionResult) else list(detections)
    if not dets and not len(gt):
        return 1.0, 1.0, 1.0
    pts = np.array(gt.points, dtype=float).reshape(-1, 2)
    tol = np.array(gt.tolerance, dtype=float)
    free = np.ones(len(pts), dtype=bool)
    tp = 0
    for d in dets:
        if not free.any():
            break
        dist = np.hypot(pts[:, 0] - d.u, pts[:, 1] - d.v)
        dist[~free | (dist > tol)] = np.inf
        j = int(np.argmin(dist))
        if math.isfinite(dist[j]):
            free[j] = False
            tp += 1
    precision = tp / len(dets) if dets else 0.0
    recall = tp / len(pts) if len(pts) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1
