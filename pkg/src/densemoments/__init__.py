"""
Dense orthogonal-moment fields over position and scale.

Local moments of an image in every frame ``(u, v, w)`` are computed by FFT
with precomputed kernel spectra, so the cost per channel does not depend on
the disk radius. Magnitudes of those moments are rotation and flip
invariant features for detection, matching and image forensics.
"""

from .basis import BasisKind, LocalFrame, OrderPair, OrderSet, basis_eval, order_set, radial_eval
from .errors import (
    ConfigMismatchError,
    DegenerateInputError,
    DenseMomentsError,
    FormatError,
    InvalidOrderError,
    OutOfDomainError,
    SizeError,
)
from .invariants import FeatureField, estimate_rotation, magnitude_features, pool_scales, rotation_predict
from .kernels import ZOA, IntegrationStrategy, Kernel, KernelBank, bank_build, kernel_spectrum, make_kernel
from .transform import MomentField, decompose, dense_fft, dense_spatial, fft_shape, moments_at

__version__ = "0.1.0"

__all__ = [
    "BasisKind",
    "LocalFrame",
    "OrderPair",
    "OrderSet",
    "basis_eval",
    "order_set",
    "radial_eval",
    "ConfigMismatchError",
    "DegenerateInputError",
    "DenseMomentsError",
    "FormatError",
    "InvalidOrderError",
    "OutOfDomainError",
    "SizeError",
    "FeatureField",
    "estimate_rotation",
    "magnitude_features",
    "pool_scales",
    "rotation_predict",
    "ZOA",
    "IntegrationStrategy",
    "Kernel",
    "KernelBank",
    "bank_build",
    "kernel_spectrum",
    "make_kernel",
    "MomentField",
    "decompose",
    "dense_fft",
    "dense_spatial",
    "fft_shape",
    "moments_at",
]
