"""Exception hierarchy shared by every module of the package."""


class DenseMomentsError(Exception):
    """Base class for all errors raised by densemoments."""


class InvalidOrderError(DenseMomentsError, ValueError):
    """An (n, m) pair is not admissible for the requested basis."""


class OutOfDomainError(DenseMomentsError, ValueError):
    """A point or a disk lies outside the domain where it is defined."""


class SizeError(DenseMomentsError, ValueError):
    """An array or transform size is too small or does not match."""


class DegenerateInputError(DenseMomentsError, ValueError):
    """The input carries no usable information (constant values, zero weight)."""


class ConfigMismatchError(DenseMomentsError, ValueError):
    """Two objects were produced under incompatible configurations."""


class FormatError(DenseMomentsError, ValueError):
    """A file is truncated, has a bad magic number or an unsupported layout."""
