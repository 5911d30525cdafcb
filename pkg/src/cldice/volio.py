"""CTV1 volume files and binary PGM (P5) images.

CTV1 layout, all little-endian:
    b"CTV1" | ndim:u8 (2 or 3) | dims: ndim x u32 | dtype:u8 | payload
dtype 0 is one byte per voxel holding 0 or 1; dtype 1 is float32.
The payload is row-major with the last axis fastest.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CTV1"
DTYPE_BINARY = 0
DTYPE_REAL = 1


class VolumeFormatError(ValueError):
    code = "format_error"


class BadMagicError(VolumeFormatError):
    code = "bad_magic"


class TruncatedPayloadError(VolumeFormatError):
    code = "truncated_payload"


class InvalidDtypeError(VolumeFormatError):
    code = "invalid_dtype"


class InvalidHeaderError(VolumeFormatError):
    code = "invalid_header"


class InvalidPayloadError(VolumeFormatError):
    code = "invalid_payload"


def encode_volume(arr) -> bytes:
    arr = np.asarray(arr)
    if arr.ndim not in (2, 3):
        raise ValueError(f"volumes must be 2D or 3D, got ndim={arr.ndim}")
    if arr.dtype == bool:
        dtype, payload = DTYPE_BINARY, arr.astype(np.uint8).tobytes(order="C")
    else:
        vals = arr.astype("<f4")
        if not np.all(np.isfinite(vals)) or vals.min() < 0 or vals.max() > 1:
            raise ValueError("real volumes must hold finite values in [0, 1]")
        dtype, payload = DTYPE_REAL, vals.tobytes(order="C")
    header = MAGIC + struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + struct.pack("<B", dtype) + payload


def decode_volume(data: bytes) -> np.ndarray:
    """Binary volumes decode to bool arrays, real volumes to float64 arrays."""
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 5:
        raise InvalidHeaderError("truncated header")
    ndim = data[4]
    if ndim not in (2, 3):
        raise InvalidHeaderError(f"ndim must be 2 or 3, got {ndim}")
    head = 5 + 4 * ndim + 1
    if len(data) < head:
        raise InvalidHeaderError("truncated header")
    dims = struct.unpack(f"<{ndim}I", data[5:5 + 4 * ndim])
    if 0 in dims:
        raise InvalidHeaderError(f"zero-length axis in dims {dims}")
    dtype = data[head - 1]
    if dtype not in (DTYPE_BINARY, DTYPE_REAL):
        raise InvalidDtypeError(f"unknown dtype code {dtype}")
    width = 1 if dtype == DTYPE_BINARY else 4
    n = int(np.prod(dims)) * width
    payload = data[head:]
    if len(payload) < n:
        raise TruncatedPayloadError(f"truncated payload: expected {n} bytes, got {len(payload)}")
    if len(payload) > n:
        raise InvalidHeaderError(f"{len(payload) - n} trailing bytes after payload")
    if dtype == DTYPE_BINARY:
        raw = np.frombuffer(payload, dtype=np.uint8)
        if raw.max(initial=0) > 1:
            raise InvalidPayloadError("binary payload bytes must be 0 or 1")
        return raw.reshape(dims).astype(bool)
    vals = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float64)
    if not np.all(np.isfinite(vals)) or vals.min() < 0 or vals.max() > 1:
        raise VolumeFormatError("real payload values must be finite and in [0, 1]")
    return vals


def save_volume(path, arr) -> None:
    Path(path).write_bytes(encode_volume(arr))


def _pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise InvalidHeaderError("truncated PGM header")
        tokens.append(int(data[start:pos]))
    return tokens, pos + 1  # a single whitespace byte precedes the raster


def decode_pgm(data: bytes) -> np.ndarray:
    """P5 grayscale image as a field in [0, 1] (value / maxval)."""
    if data[:2] != b"P5":
        raise BadMagicError("not a binary PGM (P5) file")
    (width, height, maxval), pos = _pgm_tokens(data, 3)
    if not 0 < maxval < 256:
        raise InvalidDtypeError(f"only 8-bit PGM supported, maxval={maxval}")
    raster = data[pos:pos + width * height]
    if len(raster) < width * height:
        raise TruncatedPayloadError("truncated PGM raster")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return np.minimum(img.astype(np.float64) / maxval, 1.0)


def encode_pgm(field) -> bytes:
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("PGM images are 2D")
    raster = np.round(np.clip(arr, 0, 1) * 255).astype(np.uint8)
    h, w = arr.shape
    return f"P5\n{w} {h}\n255\n".encode() + raster.tobytes()


def load_volume(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:2] == b"P5":
        return decode_pgm(data)
    return decode_volume(data)
