"""Random missing-data masks and restoration quality metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import Mask

__all__ = ["MaskSpec", "gen_mask", "psnr", "splitmix64", "ssim", "uniform53"]

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

C1 = (0.01 * 255) ** 2
C2 = (0.03 * 255) ** 2


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First ``n`` outputs of SplitMix64 started from state ``seed``.

    The k-th state is ``seed + k * gamma`` (mod 2**64), so the whole stream
    is produced without a Python loop.
    """
    seed = np.uint64(int(seed) % 2**64)
    k = np.arange(1, n + 1, dtype=np.uint64)
    z = seed + k * _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def uniform53(seed: int, n: int) -> np.ndarray:
    """Uniform doubles in [0, 1) from the top 53 bits of each SplitMix64 output."""
    return (splitmix64(seed, n) >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class MaskSpec:
    missing_ratio: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.missing_ratio <= 1.0:
            raise ValueError(f"missing ratio must be in [0, 1], got {self.missing_ratio}")


def gen_mask(level: int, spec: MaskSpec) -> Mask:
    """One draw per patch in canonical order; observed iff draw > ratio."""
    draws = uniform53(spec.seed, 6 * 4**level)
    return Mask(level, draws > spec.missing_ratio)


def _values(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


def psnr(x, x_star) -> float:
    """PSNR in dB against the peak value 255; ``inf`` for identical inputs."""
    a, b = _values(x), _values(x_star)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float("inf")
    return float(20 * np.log10(255.0 / np.sqrt(mse)))


def ssim(x, x_star) -> float:
    """Single-window SSIM over all entries and channels."""
    a, b = _values(x), _values(x_star)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    a, b = a.ravel(), b.ravel()
    if a.size < 2:
        raise ValueError("SSIM needs at least two samples")
    mu_a, mu_b = a.mean(), b.mean()
    var_a = np.mean((a - mu_a) ** 2)
    var_b = np.mean((b - mu_b) ** 2)
    cov = np.mean((a - mu_a) * (b - mu_b))
    num = (2 * mu_a * mu_b + C1) * (2 * cov + C2)
    den = (mu_a**2 + mu_b**2 + C1) * (var_a + var_b + C2)
    return float(num / den)
