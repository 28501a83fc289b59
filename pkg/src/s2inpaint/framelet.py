"""Directional spherical Haar tight-framelet transform.

Every parent patch has four equal-area children; the 7x4 matrix ``P`` maps
their four values to one lowpass coefficient and six directional detail
coefficients. Because ``P.T @ P`` is the identity, the multilevel analysis
``F`` is an isometry and synthesis ``F*`` (its adjoint) inverts it exactly.

Coefficients are stored flat, coarsest first::

    [lowpass (6*4**(J-d)),
     band 1..6 at level J-d   (each 6*4**(J-d)),
     ...
     band 1..6 at level J-1   (each 6*4**(J-1))]

All functions act on the trailing axis, so a leading channel axis is carried
through untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "P",
    "FrameletPyramid",
    "analysis",
    "coefficient_count",
    "decompose",
    "decompose_level",
    "default_depth",
    "reconstruct",
    "reconstruct_level",
    "synthesis",
]

P = 0.5 * np.array(
    [
        [1, 1, 1, 1],
        [1, -1, 0, 0],
        [1, 0, -1, 0],
        [1, 0, 0, -1],
        [0, 1, -1, 0],
        [0, 1, 0, -1],
        [0, 0, 1, -1],
    ],
    dtype=float,
)
P.setflags(write=False)


def default_depth(level: int) -> int:
    return min(level, 3)


def _level_of(n: int) -> int:
    j, m = 0, n
    if m % 6:
        raise ValueError(f"length {n} is not 6 * 4**j")
    m //= 6
    while m > 1:
        if m % 4:
            raise ValueError(f"length {n} is not 6 * 4**j")
        m //= 4
        j += 1
    return j


def coefficient_count(level: int, depth: int) -> int:
    return 6 * 4 ** (level - depth) + sum(36 * 4**ell for ell in range(level - depth, level))


def decompose_level(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One analysis step.

    ``c`` has trailing length ``6 * 4**j`` with ``j >= 1``. Returns the
    lowpass of trailing length ``n = 6 * 4**(j-1)`` and the details with
    trailing shape ``(6, n)``.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[-1]
    if _level_of(n) < 1:
        raise ValueError(f"need a level >= 1 vector, got length {n}")
    # Each row of the (groups, 4) view is one sibling group in digit order.
    # The product stays group-major; the details come back as a (6, n) view.
    w = c.reshape(*c.shape[:-1], n // 4, 4) @ P.T
    return w[..., 0], np.swapaxes(w[..., 1:], -1, -2)


def reconstruct_level(low: np.ndarray, details: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`decompose_level` (and its exact left inverse)."""
    low = np.asarray(low, dtype=float)
    details = np.asarray(details, dtype=float)
    if details.shape != low.shape[:-1] + (6,) + low.shape[-1:]:
        raise ValueError(
            f"details shape {details.shape} does not match lowpass shape {low.shape}"
        )
    w = np.concatenate([low[..., None], np.swapaxes(details, -1, -2)], axis=-1)
    out = w @ P
    return out.reshape(*low.shape[:-1], 4 * low.shape[-1])


def analysis(values: np.ndarray, depth: int) -> np.ndarray:
    """``F``: samples (trailing length ``6*4**J``) to flat coefficients."""
    values = np.asarray(values, dtype=float)
    level = _level_of(values.shape[-1])
    if not 1 <= depth <= level:
        raise ValueError(f"depth must be in [1, {level}], got {depth}")
    bands = []
    low = values
    for _ in range(depth):
        low, det = decompose_level(low)
        bands.append(det.reshape(*det.shape[:-2], -1))
    return np.concatenate([low, *reversed(bands)], axis=-1)


def synthesis(coeffs: np.ndarray, level: int, depth: int) -> np.ndarray:
    """``F*``: flat coefficients back to samples."""
    coeffs = np.asarray(coeffs, dtype=float)
    if not 1 <= depth <= level:
        raise ValueError(f"depth must be in [1, {level}], got {depth}")
    if coeffs.shape[-1] != coefficient_count(level, depth):
        raise ValueError(
            f"expected {coefficient_count(level, depth)} coefficients for "
            f"level {level}, depth {depth}; got {coeffs.shape[-1]}"
        )
    lead = coeffs.shape[:-1]
    n = 6 * 4 ** (level - depth)
    low = coeffs[..., :n]
    pos = n
    for _ in range(depth):
        det = coeffs[..., pos : pos + 6 * n].reshape(*lead, 6, n)
        pos += 6 * n
        low = reconstruct_level(low, det)
        n *= 4
    return low


@dataclass
class FrameletPyramid:
    """Framelet coefficients of a (multi-channel) signal.

    ``coeffs`` has shape ``(channels, coefficient_count(level, depth))`` in
    the coarsest-first layout described in the module docstring.
    """

    level: int
    depth: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if not 1 <= self.depth <= self.level:
            raise ValueError(f"depth must be in [1, {self.level}], got {self.depth}")
        if self.coeffs.ndim != 2 or self.coeffs.shape[1] != coefficient_count(
            self.level, self.depth
        ):
            raise ValueError(f"malformed pyramid layout {self.coeffs.shape}")

    @property
    def channels(self) -> int:
        return self.coeffs.shape[0]

    @property
    def lowpass(self) -> np.ndarray:
        return self.coeffs[:, : 6 * 4 ** (self.level - self.depth)]

    def details(self, ell: int) -> np.ndarray:
        """Detail bands produced at level ``ell``; shape ``(channels, 6, 6*4**ell)``."""
        if not self.level - self.depth <= ell < self.level:
            raise ValueError(f"no detail bands at level {ell}")
        start, n = self._offset(ell)
        return self.coeffs[:, start : start + 6 * n].reshape(self.channels, 6, n)

    def _offset(self, ell: int) -> tuple[int, int]:
        start = 6 * 4 ** (self.level - self.depth)
        for k in range(self.level - self.depth, ell):
            start += 36 * 4**k
        return start, 6 * 4**ell

    def sections(self) -> list[tuple[int, int, int, int]]:
        """``(level, band, offset, length)`` for every band; band 0 is the lowpass."""
        coarse = self.level - self.depth
        out = [(coarse, 0, 0, 6 * 4**coarse)]
        for ell in range(coarse, self.level):
            start, n = self._offset(ell)
            out.extend((ell, b + 1, start + b * n, n) for b in range(6))
        return out

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def decompose(sig, depth: int | None = None) -> FrameletPyramid:
    """Multilevel analysis of a :class:`~s2inpaint.signal.SphericalSignal`."""
    depth = default_depth(sig.level) if depth is None else depth
    if not 1 <= depth <= sig.level:
        raise ValueError(f"depth must be in [1, {sig.level}], got {depth}")
    return FrameletPyramid(sig.level, depth, analysis(sig.values, depth))


def reconstruct(pyr: FrameletPyramid):
    from .signal import SphericalSignal

    return SphericalSignal(pyr.level, synthesis(pyr.coeffs, pyr.level, pyr.depth))
