"""
Deterministic synthetic images for tests, demos and acceptance runs.

All generators take a seed and return float images in ``[0, 1]``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .detect import GroundTruth

__all__ = [
    "texture",
    "glyph",
    "LetterScene",
    "letter_scene",
    "Forgery",
    "copy_move_forgery",
    "hash_corpus",
    "jpeg_roundtrip",
    "rotate_bilinear",
    "downscale_mean",
    "disk_patch",
    "GLYPHS",
]

# 5x7 bitmaps, rows top to bottom
GLYPHS = {
    "F": ["11111", "10000", "10000", "11110", "10000", "10000", "10000"],
    "E": ["11111", "10000", "10000", "11110", "10000", "10000", "11111"],
    "L": ["10000", "10000", "10000", "10000", "10000", "10000", "11111"],
    "T": ["11111", "00100", "00100", "00100", "00100", "00100", "00100"],
    "P": ["11110", "10001", "10001", "11110", "10000", "10000", "10000"],
    "H": ["10001", "10001", "10001", "11111", "10001", "10001", "10001"],
    "J": ["00111", "00010", "00010", "00010", "00010", "10010", "01100"],
    "C": ["01110", "10001", "10000", "10000", "10000", "10001", "01110"],
    "R": ["11110", "10001", "10001", "11110", "10100", "10010", "10001"],
    "K": ["10001", "10010", "10100", "11000", "10100", "10010", "10001"],
}


def texture(shape, seed: int = 0, sigma: float = 1.5, octaves: int = 3) -> np.ndarray:
    """Smoothed multi-octave noise rescaled to ``[0, 1]``."""
    rng = np.random.default_rng(seed)
    out = np.zeros(shape)
    for k in range(octaves):
        out += ndimage.gaussian_filter(rng.standard_normal(shape), sigma * 2**k) * 2**k
    out -= out.min()
    return out / out.max()


def glyph(char: str, size: int = 48, pixel: int = 5) -> np.ndarray:
    """Binary glyph image: the 5x7 bitmap scaled by *pixel*, centered in a ``size x size`` square."""
    bitmap = np.array([[c == "1" for c in row] for row in GLYPHS[char]], dtype=float)
    big = np.kron(bitmap, np.ones((pixel, pixel)))
    h, w = big.shape
    if h > size or w > size:
        raise ValueError(f"glyph of {h}x{w} pixels does not fit a {size}x{size} square")
    out = np.zeros((size, size))
    r0, c0 = (size - h) // 2, (size - w) // 2
    out[r0:r0 + h, c0:c0 + w] = big
    return out


_TRANSFORMS = {
    "id": lambda a: a,
    "rot90": lambda a: np.rot90(a, 1),
    "rot180": lambda a: np.rot90(a, 2),
    "rot270": lambda a: np.rot90(a, 3),
    "flipud": np.flipud,
    "fliplr": np.fliplr,
}


@dataclass(frozen=True)
class LetterScene:
    image: np.ndarray
    template: np.ndarray
    truth: GroundTruth
    instances: tuple[tuple[int, int, str], ...]
    distractors: tuple[tuple[int, int, str], ...]


def letter_scene(
    template_char: str = "F",
    transforms=("id", "rot90", "rot180", "flipud", "fliplr"),
    distractor_chars=("E", "L", "T", "P", "H", "J", "C", "R", "K"),
    cell: int = 64,
    glyph_size: int = 48,
    grid: tuple[int, int] = (4, 4),
    background: float = 0.0,
    tolerance: float = 8.0,
    seed: int = 0,
) -> LetterScene:
    """Grid scene of template instances (rotated or flipped on the pixel grid) and distractor glyphs.

    Each glyph is pasted so its center lands on the corner of a cell center,
    making instance centers integer frame positions. Cell assignment is
    shuffled with *seed*; unused cells stay empty.
    """
    rows, cols = grid
    n_slots = rows * cols
    if len(transforms) + len(distractor_chars) > n_slots:
        raise ValueError("grid too small for the requested glyphs")
    rng = np.random.default_rng(seed)
    slots = rng.permutation(n_slots)
    image = np.full((rows * cell, cols * cell), float(background))
    template = glyph(template_char, glyph_size)
    half = glyph_size // 2
    placed = []
    for k, name in enumerate(list(transforms) + list(distractor_chars)):
        r, c = divmod(int(slots[k]), cols)
        u, v = c * cell + cell // 2, r * cell + cell // 2
        if k < len(transforms):
            g, label = _TRANSFORMS[name](template), name
        else:
            g, label = glyph(name, glyph_size), name
        image[v - half:v - half + glyph_size, u - half:u - half + glyph_size] = np.maximum(
            image[v - half:v - half + glyph_size, u - half:u - half + glyph_size], g
        )
        placed.append((u, v, label))
    instances = tuple(placed[: len(transforms)])
    distractors = tuple(placed[len(transforms):])
    truth = GroundTruth(tuple((u, v) for u, v, _ in instances), (tolerance,) * len(instances))
    return LetterScene(image, template, truth, instances, distractors)


@dataclass(frozen=True)
class Forgery:
    image: np.ndarray
    truth: np.ndarray
    source: tuple[int, int, int, int]
    target: tuple[int, int, int, int]


def copy_move_forgery(
    shape=(512, 512),
    patch: int = 64,
    source=(96, 160),
    shift=(200, 0),
    transform: str = "none",
    scale: float = 1.0,
    seed: int = 0,
) -> Forgery:
    """Copy a ``patch x patch`` block of a random texture to another place in the same image.

    Parameters
    ----------
    source : (x, y)
        Top-left corner of the copied block.
    shift : (dx, dy)
        Displacement of the pasted block's top-left corner.
    transform : {"none", "rot90", "rot180", "flipud", "fliplr"}
        Grid-exact transform applied to the copy.
    scale : float
        Resampling factor applied to the copy (bilinear), after *transform*.

    Returns
    -------
    Forgery
        ``truth`` marks both the source block and the pasted block.
    """
    img = texture(shape, seed)
    x0, y0 = source
    block = img[y0:y0 + patch, x0:x0 + patch].copy()
    if transform != "none":
        if transform not in _TRANSFORMS:
            raise ValueError(f"unknown transform {transform!r}")
        block = _TRANSFORMS[transform](block)
    if scale != 1.0:
        block = np.clip(ndimage.zoom(block, scale, order=1), 0.0, 1.0)
    h, w = block.shape
    tx, ty = x0 + shift[0], y0 + shift[1]
    if tx < 0 or ty < 0 or ty + h > shape[0] or tx + w > shape[1]:
        raise ValueError("pasted block leaves the image")
    out = img.copy()
    out[ty:ty + h, tx:tx + w] = block
    truth = np.zeros(shape, dtype=bool)
    truth[y0:y0 + patch, x0:x0 + patch] = True
    truth[ty:ty + h, tx:tx + w] = True
    return Forgery(out, truth, (x0, y0, patch, patch), (tx, ty, w, h))


def hash_corpus(count: int = 20, shape=(256, 256), seed: int = 0) -> list[np.ndarray]:
    """Mixed scenes: smooth texture plus a few random rectangles and disks."""
    rng = np.random.default_rng(seed)
    out = []
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    for i in range(count):
        img = 0.6 * texture(shape, seed=int(rng.integers(1 << 31)), sigma=2.0 + (i % 3))
        for _ in range(int(rng.integers(3, 7))):
            val = rng.uniform(0.0, 0.4)
            if rng.random() < 0.5:
                x0, y0 = rng.integers(0, shape[1] - 40), rng.integers(0, shape[0] - 40)
                w, h = rng.integers(12, 60, size=2)
                img[y0:y0 + h, x0:x0 + w] += val
            else:
                cx, cy, r = rng.integers(0, shape[1]), rng.integers(0, shape[0]), rng.integers(8, 40)
                img[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] += val
        out.append(np.clip(img, 0.0, 1.0))
    return out


def jpeg_roundtrip(image, quality: int) -> np.ndarray:
    """Encode as 8-bit grayscale JPEG at *quality* and decode back to ``[0, 1]``."""
    arr = np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format="JPEG", quality=int(quality))
    buf.seek(0)
    return np.asarray(Image.open(buf), dtype=float) / 255.0


def rotate_bilinear(image, degrees: float, center=None) -> np.ndarray:
    """Rotate about *center* (pixel-corner coordinates ``(x, y)``) with bilinear resampling.

    Matches the sign used by :func:`numpy.rot90`: 90 degrees equals
    ``np.rot90(image, 1)`` for a square image rotated about its center.
    Samples falling outside are zero.
    """
    image = np.asarray(image, dtype=float)
    rows, cols = image.shape
    cx, cy = (cols / 2.0, rows / 2.0) if center is None else center
    phi = np.deg2rad(degrees)
    c, s = np.cos(phi), np.sin(phi)
    yy, xx = np.mgrid[0:rows, 0:cols].astype(float)
    # output pixel center -> source pixel center
    dx, dy = xx + 0.5 - cx, yy + 0.5 - cy
    sx = c * dx - s * dy + cx - 0.5
    sy = s * dx + c * dy + cy - 0.5
    # snap rounding noise so grid-exact angles stay exact at the border
    sx, sy = np.round(sx, 9), np.round(sy, 9)
    return ndimage.map_coordinates(image, [sy, sx], order=1, mode="constant", cval=0.0)


def downscale_mean(image, factor: int = 2) -> np.ndarray:
    """Average non-overlapping ``factor x factor`` blocks."""
    image = np.asarray(image, dtype=float)
    rows, cols = (s // factor * factor for s in image.shape)
    a = image[:rows, :cols]
    return a.reshape(rows // factor, factor, cols // factor, factor).mean(axis=(1, 3))


def disk_patch(image, u: int, v: int, w: int) -> np.ndarray:
    """Copy of *image* with everything outside the closed disk of radius *w* around ``(u, v)`` set to zero."""
    image = np.asarray(image, dtype=float)
    yy, xx = np.mgrid[0:image.shape[0], 0:image.shape[1]]
    inside = (xx + 0.5 - u) ** 2 + (yy + 0.5 - v) ** 2 <= w * w
    return np.where(inside, image, 0.0)
