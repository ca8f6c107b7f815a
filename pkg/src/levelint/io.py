"""Field file formats: PGM images and the flat ``CAF1`` float64 cache."""

from __future__ import annotations

import os
import struct

import numpy as np

from .grid import ContractViolation, GridSpec, ScalarField

CAF_MAGIC = b"CAF1"
_MAX_PIXELS = 1 << 31


class PGMError(ValueError):
    """Malformed PGM data. ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class _Header:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _skip_space(self):
        data = self.data
        while self.pos < len(data):
            c = data[self.pos : self.pos + 1]
            if c == b"#":
                while self.pos < len(data) and data[self.pos : self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            elif c.isspace():
                self.pos += 1
            else:
                break

    def integer(self, what: str) -> int:
        self._skip_space()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos : self.pos + 1].isdigit():
            self.pos += 1
        if start == self.pos:
            raise PGMError(f"expected {what}", start)
        return int(self.data[start : self.pos])


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode P2 (ASCII) or P5 (binary) PGM bytes into a ``(rows, cols)`` float array."""
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PGMError(f"unknown magic {magic!r}, expected P2 or P5", 0)
    head = _Header(data)
    head.pos = 2
    width = head.integer("width")
    height = head.integer("height")
    maxval_at = head.pos
    maxval = head.integer("maxval")
    if width < 1 or height < 1:
        raise PGMError(f"empty image {width}x{height}", maxval_at)
    if width * height > _MAX_PIXELS:
        raise PGMError(f"image {width}x{height} is too large", maxval_at)
    if not 0 < maxval <= 65535:
        raise PGMError(f"maxval {maxval} outside 1..65535", maxval_at)
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if head.pos >= len(data) or not data[head.pos : head.pos + 1].isspace():
            raise PGMError("missing whitespace after maxval", head.pos)
        start = head.pos + 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(data) - start < need:
            raise PGMError(f"truncated raster: need {need} bytes, have {len(data) - start}", len(data))
        pixels = np.frombuffer(data, dtype=dtype, count=count, offset=start)
    else:
        pixels = np.empty(count, dtype=np.int64)
        for k in range(count):
            try:
                pixels[k] = head.integer(f"pixel {k}")
            except PGMError as exc:
                if head.pos >= len(data):
                    raise PGMError(f"truncated raster: got {k} of {count} pixels", head.pos) from exc
                raise
    if np.any(pixels > maxval):
        raise PGMError(f"pixel value exceeds maxval {maxval}", head.pos)
    return pixels.astype(float).reshape(height, width)


def load_pgm(path) -> ScalarField:
    """Read a PGM file as a 2D field with unit spacing (axis 0 = image rows)."""
    with open(path, "rb") as fh:
        image = parse_pgm(fh.read())
    spec = GridSpec(image.shape, (1.0, 1.0), (0.0, 0.0))
    return ScalarField(spec, image)


def write_pgm(path, values, maxval: int = 255, binary: bool = True):
    """Write integer-valued ``(rows, cols)`` data as P5 or P2."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ContractViolation("PGM images are 2D")
    pixels = np.rint(values).astype(np.int64)
    if np.any(pixels < 0) or np.any(pixels > maxval):
        raise ContractViolation(f"pixel values must lie in 0..{maxval}")
    height, width = pixels.shape
    header = f"P{5 if binary else 2}\n{width} {height}\n{maxval}\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        if binary:
            dtype = ">u2" if maxval > 255 else "u1"
            fh.write(pixels.astype(dtype).tobytes())
        else:
            for row in pixels:
                fh.write((" ".join(str(int(p)) for p in row) + "\n").encode())


def save_caf(path, field: ScalarField):
    """Write ``CAF1`` | u32 ndim | u32 dims... | little-endian float64 values (row-major)."""
    dims = field.spec.dims
    with open(path, "wb") as fh:
        fh.write(CAF_MAGIC)
        fh.write(struct.pack(f"<I{len(dims)}I", len(dims), *dims))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def load_caf(path, spacing=None, origin=None) -> ScalarField:
    """Read a ``CAF1`` file. Spacing and origin are not stored; they default to 1 and 0."""
    data = open(path, "rb").read()
    if data[:4] != CAF_MAGIC:
        raise ValueError(f"{os.fspath(path)}: not a CAF1 file")
    if len(data) < 8:
        raise ValueError(f"{os.fspath(path)}: truncated header")
    (ndim,) = struct.unpack_from("<I", data, 4)
    header_len = 8 + 4 * ndim
    if ndim == 0 or len(data) < header_len:
        raise ValueError(f"{os.fspath(path)}: bad dimension count {ndim}")
    dims = struct.unpack_from(f"<{ndim}I", data, 8)
    count = int(np.prod(dims))
    if len(data) - header_len != 8 * count:
        raise ValueError(
            f"{os.fspath(path)}: expected {8 * count} payload bytes, found {len(data) - header_len}"
        )
    values = np.frombuffer(data, dtype="<f8", offset=header_len).reshape(dims)
    spacing = tuple(spacing) if spacing is not None else (1.0,) * ndim
    origin = tuple(origin) if origin is not None else (0.0,) * ndim
    return ScalarField(GridSpec(dims, spacing, origin), values)
