"""Volume file formats: binary PGM (P5) for 2-D and MHDX for 2-D/3-D.

MHDX is a short text header followed by a blank line and the raw
little-endian voxel payload in x-fastest order::

    dims 4 3 2
    spacing 0.5 0.5 1.0
    dtype i16

"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import FormatError
from .volume import DTYPES, ImageRegion, ImageVolume, dtype_code


def _fmt(x: float) -> str:
    return repr(float(x))


def encode_mhdx(vol: ImageVolume) -> bytes:
    code = vol.dtype
    nx, ny, nz = vol.dims
    header = (f"dims {nx} {ny} {nz}\n"
              f"spacing {' '.join(_fmt(s) for s in vol.spacing)}\n"
              f"dtype {code}\n\n")
    return header.encode("ascii") + vol.data.astype(DTYPES[code], copy=False).tobytes(order="C")


def decode_mhdx(raw: bytes, name: str = "<bytes>") -> ImageVolume:
    end = raw.find(b"\n\n")
    if end < 0:
        raise FormatError(f"{name}: MHDX header not terminated by a blank line")
    try:
        header = raw[:end].decode("ascii")
    except UnicodeDecodeError:
        raise FormatError(f"{name}: MHDX header is not ASCII") from None
    fields = {}
    for line in header.splitlines():
        parts = line.split()
        if not parts:
            continue
        fields[parts[0]] = parts[1:]
    try:
        dims = [int(v) for v in fields["dims"]]
        spacing = [float(v) for v in fields.get("spacing", ["1", "1", "1"])]
        code = fields["dtype"][0]
    except (KeyError, IndexError, ValueError) as e:
        raise FormatError(f"{name}: malformed MHDX header ({e})") from None
    if len(dims) == 2:
        dims.append(1)
    if len(spacing) == 2:
        spacing.append(1.0)
    if len(dims) != 3 or min(dims) < 1 or len(spacing) != 3:
        raise FormatError(f"{name}: bad dims/spacing {dims} {spacing}")
    if code not in DTYPES:
        raise FormatError(f"{name}: unsupported dtype {code!r}")
    dt = DTYPES[code]
    nx, ny, nz = dims
    payload = raw[end + 2:]
    need = nx * ny * nz * dt.itemsize
    if len(payload) != need:
        kind = "truncated" if len(payload) < need else "oversized"
        raise FormatError(f"{name}: {kind} payload, expected {need} bytes, got {len(payload)}")
    data = np.frombuffer(payload, dtype=dt).reshape(nz, ny, nx)
    try:
        return ImageVolume(data, tuple(spacing))
    except ValueError as e:
        raise FormatError(f"{name}: {e}") from None


def _pgm_tokens(raw: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, i, n = [], 0, len(raw)
    while len(tokens) < count:
        while i < n and raw[i:i + 1].isspace():
            i += 1
        if i < n and raw[i:i + 1] == b"#":
            while i < n and raw[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not raw[i:i + 1].isspace() and raw[i:i + 1] != b"#":
            i += 1
        if start == i:
            raise FormatError("truncated PGM header")
        tokens.append(raw[start:i])
    # exactly one whitespace byte separates the header from the raster
    return tokens, i + 1


def decode_pgm(raw: bytes, name: str = "<bytes>") -> ImageVolume:
    try:
        tokens, offset = _pgm_tokens(raw, 4)
    except FormatError as e:
        raise FormatError(f"{name}: {e}") from None
    if tokens[0] != b"P5":
        raise FormatError(f"{name}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError(f"{name}: malformed PGM header") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError(f"{name}: bad PGM geometry {width}x{height} maxval {maxval}")
    if maxval < 256:
        dt, out = np.dtype("u1"), np.dtype("<u1")
    else:
        dt, out = np.dtype(">u2"), np.dtype("<i2") if maxval < 32768 else np.dtype("<f4")
    payload = raw[offset:]
    need = width * height * dt.itemsize
    if len(payload) < need:
        raise FormatError(f"{name}: truncated payload, expected {need} bytes, got {len(payload)}")
    data = np.frombuffer(payload[:need], dtype=dt).reshape(height, width).astype(out)
    return ImageVolume(data, (1.0, 1.0, 1.0))


def encode_pgm(vol: ImageVolume) -> bytes:
    if not vol.is_2d:
        raise FormatError("PGM holds 2-D images only")
    data = vol.data[0]
    if data.size and (data.min() < 0 or data.max() > 255 or
                      not np.array_equal(data, np.round(data))):
        raise FormatError("PGM output needs integer values in 0..255")
    ny, nx = data.shape
    return f"P5\n{nx} {ny}\n255\n".encode("ascii") + data.astype(np.uint8).tobytes()


def read_volume(path: str | Path) -> ImageVolume:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"P5":
        return decode_pgm(raw, str(path))
    return decode_mhdx(raw, str(path))


def write_volume(vol: ImageVolume, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        path.write_bytes(encode_pgm(vol))
    else:
        path.write_bytes(encode_mhdx(vol))


def region_volume(r: ImageRegion) -> ImageVolume:
    return ImageVolume(r.mask.astype(np.uint8) * np.uint8(255), r.spacing)


def write_region(r: ImageRegion, path: str | Path) -> None:
    """Write a mask as a 0/255 u8 volume in the region's geometry."""
    write_volume(region_volume(r), path)


def read_mask(path: str | Path) -> ImageRegion:
    vol = read_volume(path)
    return ImageRegion(vol.data != 0, vol.spacing)


def coerce_dtype(data: np.ndarray) -> np.ndarray:
    """Cast arbitrary numeric data to the nearest storable dtype."""
    try:
        dtype_code(data.dtype)
        return data
    except ValueError:
        pass
    if data.dtype == bool:
        return data.astype(np.uint8)
    if data.dtype.kind in "iu" and data.size and data.min() >= -32768 and data.max() <= 32767:
        return data.astype(np.int16)
    return data.astype(np.float32)
