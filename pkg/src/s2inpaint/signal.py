"""Spherical signals and conversion to and from planar images.

Equirectangular convention: longitude in [-pi, pi) runs along columns,
latitude from +pi/2 (row 0) down to -pi/2. Pixel ``(r, c)`` is centered at
``lon = -pi + (c + 0.5) * 2pi / W`` and ``lat = pi/2 - (r + 0.5) * pi / H``.
Values are kept on the [0, 255] scale but never clamped until export.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .partition import Partition, locate_index

__all__ = [
    "Mask",
    "SphericalSignal",
    "from_equirectangular",
    "single_face_ingest",
    "to_equirectangular",
]


@dataclass
class SphericalSignal:
    """Per-channel samples on the level-``J`` patches in canonical order.

    ``values`` has shape ``(channels, 6 * 4**level)``; a 1-D array is taken
    as a single channel.
    """

    level: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.ndim != 2 or self.values.shape[1] != 6 * 4**self.level:
            raise ValueError(
                f"level {self.level} needs {6 * 4**self.level} samples per channel, "
                f"got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("signal values must be finite")

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def size(self) -> int:
        return self.values.shape[1]

    def channel(self, k: int) -> "SphericalSignal":
        return SphericalSignal(self.level, self.values[k : k + 1].copy())

    @classmethod
    def stack(cls, parts: list["SphericalSignal"]) -> "SphericalSignal":
        return cls(parts[0].level, np.concatenate([p.values for p in parts], axis=0))

    @classmethod
    def constant(cls, level: int, value: float, channels: int = 1) -> "SphericalSignal":
        return cls(level, np.full((channels, 6 * 4**level), float(value)))


@dataclass
class Mask:
    """Observed (True) / missing (False) flag per level-``J`` patch."""

    level: int
    flags: np.ndarray

    def __post_init__(self):
        self.flags = np.asarray(self.flags, dtype=bool).reshape(-1)
        if self.flags.shape[0] != 6 * 4**self.level:
            raise ValueError(
                f"level {self.level} mask needs {6 * 4**self.level} flags, got {self.flags.shape[0]}"
            )

    @property
    def observed_count(self) -> int:
        return int(self.flags.sum())

    @property
    def observed_fraction(self) -> float:
        return self.observed_count / self.flags.size


def _as_hwc(img) -> np.ndarray:
    img = np.asarray(img, dtype=float)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected an (H, W) or (H, W, C) image, got shape {img.shape}")
    return img


def lonlat(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    return np.arctan2(y, x), np.arcsin(np.clip(z, -1.0, 1.0))


def _bilinear(img: np.ndarray, row: np.ndarray, col: np.ndarray, wrap_cols: bool) -> np.ndarray:
    """Sample ``img`` (H, W, C) at fractional pixel-center coordinates."""
    h, w = img.shape[:2]
    row = np.clip(row, 0.0, h - 1.0)
    r0 = np.floor(row).astype(int)
    r1 = np.minimum(r0 + 1, h - 1)
    fr = row - r0
    if wrap_cols:
        c0f = np.floor(col)
        fc = col - c0f
        c0 = c0f.astype(int) % w
        c1 = (c0 + 1) % w
    else:
        col = np.clip(col, 0.0, w - 1.0)
        c0 = np.floor(col).astype(int)
        c1 = np.minimum(c0 + 1, w - 1)
        fc = col - c0
    fr = fr[:, None]
    fc = fc[:, None]
    # a + (b - a) f is exact when neighbours agree, so piecewise-constant
    # images sample back without rounding.
    top = img[r0, c0] + (img[r0, c1] - img[r0, c0]) * fc
    bottom = img[r1, c0] + (img[r1, c1] - img[r1, c0]) * fc
    return top + (bottom - top) * fr


def from_equirectangular(img, partition: Partition) -> SphericalSignal:
    """Bilinear samples of an equirectangular image at every patch center."""
    img = _as_hwc(img)
    h, w = img.shape[:2]
    lon, lat = lonlat(partition.centers)
    col = (lon + np.pi) / (2 * np.pi) * w - 0.5
    row = (np.pi / 2 - lat) / np.pi * h - 0.5
    samples = _bilinear(img, row, col, wrap_cols=True)
    return SphericalSignal(partition.level, samples.T)


def pixel_directions(width: int, height: int) -> np.ndarray:
    lon = -np.pi + (np.arange(width) + 0.5) * (2 * np.pi / width)
    lat = np.pi / 2 - (np.arange(height) + 0.5) * (np.pi / height)
    lon, lat = np.meshgrid(lon, lat)
    return np.stack(
        [np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)], axis=-1
    )


def to_equirectangular(sig: SphericalSignal, partition: Partition, width: int, height: int) -> np.ndarray:
    """Nearest-patch rendering; returns an ``(H, W, C)`` float image."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be positive")
    if partition.level != sig.level:
        raise ValueError("partition and signal levels differ")
    idx = locate_index(partition, pixel_directions(width, height))
    return np.moveaxis(sig.values[:, idx], 0, -1)


def single_face_ingest(img, partition: Partition, face: int = 0) -> SphericalSignal:
    """Map a square image onto one face's parameter square.

    Column ``c`` is centered at ``u = -1 + (c + 0.5) * 2 / n`` and row ``r``
    at ``v = 1 - (r + 0.5) * 2 / n`` (row 0 on top). Patches on the other
    five faces receive the per-channel image mean.
    """
    img = _as_hwc(img)
    n = img.shape[0]
    if img.shape[1] != n:
        raise ValueError(f"single-face ingestion needs a square image, got {img.shape[:2]}")
    if not 0 <= face < 6:
        raise ValueError(f"face must be in [0, 6), got {face}")
    leaf = partition.rects[partition.level]
    per_face = 4**partition.level
    values = np.empty((img.shape[2], partition.size))
    values[:] = np.array([img[:, :, k].mean() for k in range(img.shape[2])])[:, None]
    sl = slice(face * per_face, (face + 1) * per_face)
    u = 0.5 * (leaf[sl, 0] + leaf[sl, 1])
    v = 0.5 * (leaf[sl, 2] + leaf[sl, 3])
    col = (u + 1) * n / 2 - 0.5
    row = (1 - v) * n / 2 - 0.5
    values[:, sl] = _bilinear(img, row, col, wrap_cols=False).T
    return SphericalSignal(partition.level, values)
