"""
Recovering a rotation angle from moment phases
==============================================

Rotating a patch by phi multiplies its (n, m) moment by exp(1j m phi).
Magnitudes ignore that factor; phases keep it, so comparing the phases
of two patches gives the angle between them.
"""

import math

import numpy as np

from densemoments import LocalFrame, moments_at, order_set
from densemoments.invariants import estimate_rotation
from densemoments.synthetic import rotate_bilinear, texture

img = texture((128, 128), 4)
orders = order_set("PCT", math.inf, 2)
frame = LocalFrame(64, 64, 24)
a = np.array([moments_at(img, "PCT", n, m, frame) for n, m in orders])

print("true     estimated   error")
for deg in (5, 17, 33, 45, 61, 78, 90, 135):
    rotated = rotate_bilinear(img, deg)
    b = np.array([moments_at(rotated, "PCT", n, m, frame) for n, m in orders])
    est = math.degrees(estimate_rotation(a, b, orders))
    print(f"{deg:4d}   {est:9.3f}   {est - deg:+.3f} deg")
