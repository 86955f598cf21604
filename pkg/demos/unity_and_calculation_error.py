"""
Discretisation error of local moment kernels
============================================

A constant image has a known moment in every local disk: sqrt(pi) for
PCT order (0, 0) and zero for every order with m != 0. How close a kernel
gets to those values depends on how it samples the disk.
"""

import math

import numpy as np

from densemoments import IntegrationStrategy, make_kernel
from densemoments.metrics import calculation_error

# one sample per pixel center versus an 8x8 grid of sub-samples per pixel
for strategy in (IntegrationStrategy.zoa(), IntegrationStrategy.upsample(8)):
    k = make_kernel("PCT", 0, 0, 8, strategy)
    print(f"{str(strategy):>10}: kernel sum {k.total().real:.5f}  (sqrt(pi) = {math.sqrt(math.pi):.5f})")

# the summed |moment| over m != 0 orders shrinks as sub-sampling gets finer
print()
print(" K   " + "".join(f"L={L:<9d}" for L in (1, 2, 4, 8)))
for K in (5, 10, 20):
    ces = [calculation_error("PCT", IntegrationStrategy(L), K, 8).ce for L in (1, 2, 4, 8)]
    print(f"{K:2d}   " + "".join(f"{c:<11.4g}" for c in ces))

# the kernel itself: real part of PCT (2, 2) at w = 8, coarse text rendering
grid = make_kernel("PCT", 2, 2, 8).grid.real
levels = " .:-=+*#"
scaled = np.rint((grid - grid.min()) / np.ptp(grid) * (len(levels) - 1)).astype(int)
inside = make_kernel("PCT", 0, 0, 8).grid != 0
print()
for row, keep in zip(scaled, inside):
    print("".join(levels[v] * 2 if k else "  " for v, k in zip(row, keep)))
