"""The SPH1 binary container for signals, masks and framelet pyramids.

Header (little-endian, 12 bytes)::

    b"SPH1"  version:u16  level:u32  channels:u8  face_order:u8

Version 1 carries plain samples, channel-major in canonical patch order: 8
bytes per sample (float64 signal) or 1 byte per sample (u8 mask flags); the
payload size tells them apart. Version 2 carries a framelet pyramid::

    depth:u32  n_sections:u32
    n_sections x (level:u32  band:u8  offset:u64  length:u64)
    channel-major float64 coefficients

where ``offset``/``length`` count coefficients within one channel and band 0
is the lowpass.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .framelet import FrameletPyramid
from .signal import Mask, SphericalSignal

__all__ = ["FormatError", "read", "write", "read_signal", "read_mask", "read_pyramid", "atomic_write_bytes"]

MAGIC = b"SPH1"
FACE_ORDER_TAG = 0  # (+z, -z, +x, -x, +y, -y)
_HEADER = struct.Struct("<4sHIBB")
_SECTION = struct.Struct("<IBQQ")
_PYR_HEAD = struct.Struct("<II")


class FormatError(ValueError):
    pass


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode(obj) -> bytes:
    if isinstance(obj, SphericalSignal):
        head = _HEADER.pack(MAGIC, 1, obj.level, obj.channels, FACE_ORDER_TAG)
        return head + obj.values.astype("<f8").tobytes()
    if isinstance(obj, Mask):
        head = _HEADER.pack(MAGIC, 1, obj.level, 1, FACE_ORDER_TAG)
        return head + obj.flags.astype(np.uint8).tobytes()
    if isinstance(obj, FrameletPyramid):
        secs = obj.sections()
        parts = [
            _HEADER.pack(MAGIC, 2, obj.level, obj.channels, FACE_ORDER_TAG),
            _PYR_HEAD.pack(obj.depth, len(secs)),
            *(_SECTION.pack(*s) for s in secs),
            obj.coeffs.astype("<f8").tobytes(),
        ]
        return b"".join(parts)
    raise TypeError(f"cannot encode {type(obj).__name__} as SPH1")


def decode(data: bytes):
    if len(data) < _HEADER.size:
        raise FormatError("truncated SPH1 header")
    magic, version, level, channels, tag = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if tag != FACE_ORDER_TAG:
        raise FormatError(f"unknown face-order tag {tag}")
    if channels < 1 or level > 15:
        raise FormatError(f"implausible header: level {level}, channels {channels}")
    body = memoryview(data)[_HEADER.size :]
    n = 6 * 4**level
    if version == 1:
        if len(body) == 8 * n * channels:
            vals = np.frombuffer(body, dtype="<f8").reshape(channels, n)
            return SphericalSignal(level, vals.astype(float))
        if len(body) == n * channels and channels == 1:
            flags = np.frombuffer(body, dtype=np.uint8)
            if np.any(flags > 1):
                raise FormatError("mask flags must be 0 or 1")
            return Mask(level, flags.astype(bool))
        raise FormatError(f"payload of {len(body)} bytes fits neither a signal nor a mask")
    if version == 2:
        if len(body) < _PYR_HEAD.size:
            raise FormatError("truncated pyramid header")
        depth, nsec = _PYR_HEAD.unpack_from(body)
        pos = _PYR_HEAD.size + nsec * _SECTION.size
        if len(body) < pos:
            raise FormatError("truncated section table")
        secs = [
            _SECTION.unpack_from(body, _PYR_HEAD.size + k * _SECTION.size) for k in range(nsec)
        ]
        coeffs = np.frombuffer(body[pos:], dtype="<f8")
        if coeffs.size % channels:
            raise FormatError("coefficient payload not divisible by channel count")
        try:
            pyr = FrameletPyramid(level, depth, coeffs.reshape(channels, -1).astype(float))
        except ValueError as exc:
            raise FormatError(str(exc)) from exc
        if [tuple(s) for s in secs] != pyr.sections():
            raise FormatError("section table does not match the pyramid layout")
        return pyr
    raise FormatError(f"unsupported SPH1 version {version}")


def write(path, obj) -> None:
    atomic_write_bytes(path, encode(obj))


def read(path):
    return decode(Path(path).read_bytes())


def _read_as(path, cls):
    obj = read(path)
    if not isinstance(obj, cls):
        raise FormatError(f"{path} holds a {type(obj).__name__}, expected {cls.__name__}")
    return obj


def read_signal(path) -> SphericalSignal:
    return _read_as(path, SphericalSignal)


def read_pyramid(path) -> FrameletPyramid:
    return _read_as(path, FrameletPyramid)


def read_mask(path) -> Mask:
    return _read_as(path, Mask)
