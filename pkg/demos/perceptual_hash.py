"""
Tamper localisation with a perceptual hash
==========================================

Hash an image, recompress it as a poor-quality JPEG and hash again: the
two digests should agree. Then replace a block and compare: the cells
covering the block should stand out.
"""

import numpy as np

from densemoments.forensics import phash_compare, phash_generate
from densemoments.synthetic import jpeg_roundtrip, texture

img = texture((512, 512), 0)
digest = phash_generate(img)
rows, cols = digest.grid
print(f"grid {rows}x{cols}, {digest.dim} bytes per cell, {digest.nbytes} bytes in total")

recompressed = phash_compare(digest, phash_generate(jpeg_roundtrip(img, 10)))
print(f"JPEG quality 10: {recompressed.mask.sum()} of {recompressed.mask.size} cells flagged")

tampered = img.copy()
tampered[200:264, 296:360] = texture((64, 64), 100)
res = phash_compare(digest, phash_generate(tampered))
print(f"block replaced: {res.mask.sum()} cells flagged, threshold {res.threshold:.4f}")

# the flagged cells, one character per cell, around the replaced block
ys, xs = np.nonzero(res.mask)
for r in range(ys.min() - 2, ys.max() + 3):
    print("".join("#" if res.mask[r, c] else "." for c in range(xs.min() - 4, xs.max() + 5)))
