"""
Image and binary container I/O.

Images: PGM (P2 ASCII, P5 binary, 8 or 16 bit) and PNG (8/16-bit gray or
RGB, through Pillow) are read into float arrays in ``[0, 1]``; color is
reduced to BT.601 luma. Masks and maps are written as binary PGM.

Containers, all little-endian:

``.dirb``
    Kernel spectra. A sequence of records, each ``"DIRB"``, kind code, n,
    m, w, grid rows, grid cols, L_side (1 is ZOA), then ``rows * cols``
    complex values as float64 pairs, row-major.
``.dirf``
    Fields. ``"DIRF"``, version, flags (bit 0: complex payload), rows,
    cols, channel count, then per channel (kind code, n, m, w), then the
    channels row-major as float64 (real) or float64 pairs (complex).
``.dirh``
    Hash digests, see :class:`densemoments.forensics.phash.HashDigest`.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .basis import BasisKind
from .errors import FormatError
from .invariants import FeatureField
from .kernels import ZOA, IntegrationStrategy, KernelBank
from .match import MatchField
from .transform import MomentField

__all__ = [
    "load_image",
    "read_pgm",
    "write_pgm",
    "write_mask",
    "write_map",
    "luma",
    "save_bank",
    "load_bank",
    "DirfContents",
    "write_dirf",
    "read_dirf",
    "save_moments",
    "load_moments",
    "save_features",
    "save_match",
    "load_match",
    "save_digest",
    "load_digest",
]

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def luma(rgb) -> np.ndarray:
    """ITU-R BT.601 luma of an ``(..., 3)`` array."""
    rgb = np.asarray(rgb, dtype=float)
    return rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114


def _pgm_tokens(data: bytes, count: int):
    # header fields separated by whitespace; '#' starts a comment running to end of line
    pos, out = 2, []
    n = len(data)
    while len(out) < count:
        while pos < n and (data[pos:pos + 1].isspace() or data[pos:pos + 1] == b"#"):
            if data[pos:pos + 1] == b"#":
                while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("PGM header ends early")
        try:
            out.append(int(data[start:pos]))
        except ValueError:
            raise FormatError(f"bad PGM header field {data[start:pos]!r}") from None
    return out, pos


def read_pgm(data: bytes) -> np.ndarray:
    """Decode P2 or P5 bytes to floats in ``[0, 1]``."""
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"not a PGM file (magic {magic!r})")
    (cols, rows, maxval), pos = _pgm_tokens(data, 3)
    if cols < 1 or rows < 1:
        raise FormatError(f"bad PGM size {cols}x{rows}")
    if not 0 < maxval < 65536:
        raise FormatError(f"bad PGM maxval {maxval}")
    count = rows * cols
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise FormatError("PGM header is not terminated")
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(data) - pos < need:
            raise FormatError(f"PGM raster truncated: {len(data) - pos} of {need} bytes")
        values = np.frombuffer(data, dtype, count, pos).astype(float)
    else:
        fields = data[pos:].split()
        if len(fields) < count:
            raise FormatError(f"PGM raster truncated: {len(fields)} of {count} samples")
        try:
            values = np.array([int(f) for f in fields[:count]], dtype=float)
        except ValueError:
            raise FormatError("non-numeric sample in P2 raster") from None
    if values.max(initial=0) > maxval:
        raise FormatError("PGM sample exceeds maxval")
    return values.reshape(rows, cols) / maxval


def write_pgm(path, image, maxval: int = 255) -> None:
    """Write samples in ``[0, 1]`` as binary PGM (P5) with the given *maxval*."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("PGM holds 2-D images only")
    if not 0 < maxval < 65536:
        raise ValueError("maxval must lie in 1..65535")
    q = np.clip(np.rint(image * maxval), 0, maxval)
    raster = q.astype(">u2" if maxval > 255 else "u1").tobytes()
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (image.shape[1], image.shape[0], maxval))
        fh.write(raster)


def write_mask(path, mask) -> None:
    """Binary mask as P5 with values 0 and 255."""
    write_pgm(path, np.asarray(mask, dtype=bool).astype(float), 255)


def write_map(path, values) -> None:
    """Real map min-max normalized to 16-bit PGM; non-finite entries become white."""
    v = np.asarray(values, dtype=float)
    finite = np.isfinite(v)
    out = np.ones(v.shape)
    if finite.any():
        lo, hi = v[finite].min(), v[finite].max()
        out[finite] = (v[finite] - lo) / (hi - lo) if hi > lo else 0.0
    write_pgm(path, out, 65535)


def _read_png(data: bytes) -> np.ndarray:
    if len(data) < 33 or data[12:16] != b"IHDR":
        raise FormatError("PNG header is damaged")
    depth = data[24]
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            arr = np.asarray(im)
    except (OSError, SyntaxError, ValueError) as exc:
        raise FormatError(f"cannot decode PNG: {exc}") from None
    if mode in ("I", "I;16", "I;16B", "I;16L"):
        scale = 65535.0 if depth == 16 else 255.0
        return arr.astype(float) / scale
    if mode == "1":
        return arr.astype(float)
    arr = arr.astype(float) / 255.0
    if mode in ("L", "LA"):
        return arr if arr.ndim == 2 else arr[..., 0]
    if mode in ("RGB", "RGBA"):
        # Pillow reduces 16-bit color to 8 bits per channel
        return luma(arr[..., :3])
    raise FormatError(f"unsupported PNG mode {mode}")


def load_image(path) -> np.ndarray:
    """Read a PGM or PNG file as a 2-D float array in ``[0, 1]``.

    Raises
    ------
    OSError
        The file cannot be read.
    FormatError
        Unknown format, corrupt header or truncated raster.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] in (b"P2", b"P5"):
        return read_pgm(data)
    if data[:8] == _PNG_SIGNATURE:
        return _read_png(data)
    raise FormatError(f"{os.fspath(path)}: unsupported image format")


# -- kernel spectra -----------------------------------------------------------

_DIRB = struct.Struct("<4sIiiiIII")


def save_bank(path, bank: KernelBank) -> None:
    rows, cols = bank.shape
    with open(path, "wb") as fh:
        for (n, m, w) in sorted(bank.keys()):
            fh.write(_DIRB.pack(b"DIRB", bank.kind.code, n, m, w, rows, cols, bank.strategy.L_side))
            fh.write(np.ascontiguousarray(bank[(n, m, w)], dtype="<c16").tobytes())


def load_bank(path) -> KernelBank:
    with open(path, "rb") as fh:
        data = fh.read()
    pos, entries = 0, {}
    kind = shape = strategy = None
    while pos < len(data):
        if len(data) - pos < _DIRB.size:
            raise FormatError("truncated .dirb record header")
        magic, code, n, m, w, rows, cols, L = _DIRB.unpack_from(data, pos)
        if magic != b"DIRB":
            raise FormatError(f"bad .dirb magic {magic!r}")
        pos += _DIRB.size
        try:
            rec_kind, rec_strategy = BasisKind.from_code(code), IntegrationStrategy(L)
        except ValueError as exc:
            raise FormatError(str(exc)) from None
        if kind is None:
            kind, shape, strategy = rec_kind, (rows, cols), rec_strategy
        elif (rec_kind, (rows, cols), rec_strategy) != (kind, shape, strategy):
            raise FormatError("mixed kinds, grids or strategies in one .dirb file")
        need = rows * cols * 16
        if len(data) - pos < need:
            raise FormatError("truncated .dirb payload")
        entries[(n, m, w)] = np.frombuffer(data, "<c16", rows * cols, pos).reshape(rows, cols).astype(complex)
        pos += need
    if kind is None:
        raise FormatError("empty .dirb file")
    return KernelBank(kind, shape, strategy, entries)


# -- fields -------------------------------------------------------------------

_DIRF = struct.Struct("<4sHHIII")
_DIRF_CHANNEL = struct.Struct("<Iiii")
_DIRF_VERSION = 1


@dataclass(frozen=True)
class DirfContents:
    """Decoded ``.dirf`` file: ``tags[k] = (kind_code, n, m, w)`` labels ``channels[k]``."""

    shape: tuple[int, int]
    tags: tuple[tuple[int, int, int, int], ...]
    channels: np.ndarray = field(repr=False)
    is_complex: bool = False


def write_dirf(path, tags, channels, is_complex: bool) -> None:
    channels = np.asarray(channels)
    if channels.ndim != 3 or channels.shape[0] != len(tags):
        raise ValueError("channels must be (count, rows, cols) with one tag per channel")
    _, rows, cols = channels.shape
    with open(path, "wb") as fh:
        fh.write(_DIRF.pack(b"DIRF", _DIRF_VERSION, int(bool(is_complex)), rows, cols, len(tags)))
        for tag in tags:
            fh.write(_DIRF_CHANNEL.pack(*(int(t) for t in tag)))
        fh.write(np.ascontiguousarray(channels, dtype="<c16" if is_complex else "<f8").tobytes())


def read_dirf(path) -> DirfContents:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _DIRF.size:
        raise FormatError("truncated .dirf header")
    magic, version, flags, rows, cols, count = _DIRF.unpack_from(data)
    if magic != b"DIRF":
        raise FormatError(f"bad .dirf magic {magic!r}")
    if version != _DIRF_VERSION:
        raise FormatError(f"unsupported .dirf version {version}")
    is_complex = bool(flags & 1)
    pos = _DIRF.size
    if len(data) < pos + count * _DIRF_CHANNEL.size:
        raise FormatError("truncated .dirf channel table")
    tags = tuple(_DIRF_CHANNEL.unpack_from(data, pos + k * _DIRF_CHANNEL.size) for k in range(count))
    pos += count * _DIRF_CHANNEL.size
    dtype = np.dtype("<c16" if is_complex else "<f8")
    need = count * rows * cols * dtype.itemsize
    if len(data) - pos != need:
        raise FormatError(f".dirf payload holds {len(data) - pos} bytes, header promises {need}")
    arr = np.frombuffer(data, dtype, count * rows * cols, pos).reshape(count, rows, cols)
    return DirfContents((rows, cols), tags, arr.astype(complex if is_complex else float), is_complex)


def save_moments(path, field_: MomentField) -> None:
    keys = sorted(field_.keys())
    tags = [(field_.kind.code, n, m, w) for n, m, w in keys]
    write_dirf(path, tags, np.stack([field_[k] for k in keys]), True)


def load_moments(path) -> MomentField:
    c = read_dirf(path)
    if not c.is_complex:
        raise FormatError(".dirf file holds a real payload, not moments")
    codes = {t[0] for t in c.tags}
    if len(codes) != 1:
        raise FormatError("moment channels of more than one basis")
    kind = BasisKind.from_code(codes.pop())
    channels = {(n, m, w): c.channels[k] for k, (_, n, m, w) in enumerate(c.tags)}
    # the container does not record the integration strategy
    return MomentField(kind, c.shape, ZOA, channels)


def save_features(path, features: FeatureField, kind: BasisKind | None = None) -> None:
    """Real variant: one channel per component, ``w`` tag 0 for scale-pooled fields."""
    code = kind.code if kind is not None else 0
    w = features.scales[0] if len(features.scales) == 1 else 0
    tags = [(code, n, m, w) for n, m in features.orders]
    write_dirf(path, tags, np.moveaxis(np.asarray(features.vectors, dtype=float), -1, 0), False)


def save_match(path, mf: MatchField) -> None:
    """Real variant with three channels: dx, dy and distance (``inf`` where invalid)."""
    tags = [(0, k, 0, 0) for k in range(3)]
    chans = np.stack([mf.offsets[..., 0].astype(float), mf.offsets[..., 1].astype(float), mf.distance])
    write_dirf(path, tags, chans, False)


def load_match(path) -> MatchField:
    c = read_dirf(path)
    if c.is_complex or len(c.tags) != 3:
        raise FormatError(".dirf file is not a match field")
    dist = c.channels[2]
    offsets = np.stack([c.channels[0], c.channels[1]], axis=-1).astype(np.int64)
    return MatchField(offsets, dist, np.isfinite(dist))


def save_digest(path, digest) -> None:
    with open(path, "wb") as fh:
        fh.write(digest.to_bytes())


def load_digest(path):
    from .forensics.phash import HashDigest

    with open(path, "rb") as fh:
        return HashDigest.from_bytes(fh.read())
