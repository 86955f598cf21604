"""Copy-move forgery detection and perceptual hashing."""

from .copymove import CopyMoveConfig, ForgeryMask, copymove_detect, disk_footprint, offset_consistency, score_mask
from .phash import HashComparison, HashConfig, HashDigest, otsu_threshold, phash_compare, phash_generate, quantize

__all__ = [
    "CopyMoveConfig",
    "ForgeryMask",
    "copymove_detect",
    "disk_footprint",
    "offset_consistency",
    "score_mask",
    "HashComparison",
    "HashConfig",
    "HashDigest",
    "otsu_threshold",
    "phash_compare",
    "phash_generate",
    "quantize",
]
