"""ADMM plug-and-play inpainting on spherical signals.

Solves

    min_x ||F x||_1 + lam * Phi(x)   subject to   x = g on observed patches

by splitting ``y = F x`` and ``z = x``. One iteration is

    y   <- shrink(F x - L1 / b1, w / b1)        (w = l1_weight, 1 by default)
    z   <- Denoiser(x - L2 / b2, sqrt(lam / b2))
    x   <- g on observed patches, else (b1 F* y + b2 z + F* L1 + L2) / (b1 + b2)
    L1  <- L1 + (y - F x)
    L2  <- L2 + (z - x)

The closed-form x-update relies on ``F* F = I``. Multi-channel signals are
solved one channel at a time.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from . import framelet
from .denoiser import DenoiserSpec, denoise, soft_shrink
from .signal import Mask, SphericalSignal

__all__ = [
    "BETA1_GRID",
    "BETA2_GRID",
    "DivergenceError",
    "Mask",
    "RunReport",
    "SolverParams",
    "SolverState",
    "admm_step",
    "init_state",
    "inpaint",
    "soft_shrink",
]

log = logging.getLogger(__name__)

EPS = 1e-12
BETA1_GRID = tuple(round(0.1 * k, 1) for k in range(1, 11))
BETA2_GRID = (1.0, 2.0, 3.0, 4.0, 5.0)


class DivergenceError(ArithmeticError):
    def __init__(self, iteration: int):
        super().__init__(f"non-finite iterate at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverParams:
    lam: float = 1.0
    beta1: float = 0.5
    beta2: float = 2.0
    depth: int | None = None
    max_iters: int = 50
    rel_tol: float = 1e-4
    # Weight on ||y||_1; the y-threshold is l1_weight / beta1.
    l1_weight: float = 1.0

    def __post_init__(self):
        if self.lam <= 0 or self.beta1 <= 0 or self.beta2 <= 0:
            raise ValueError("lam, beta1 and beta2 must be positive")
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be nonnegative")

    def resolved_depth(self, level: int) -> int:
        return framelet.default_depth(level) if self.depth is None else self.depth


@dataclass
class SolverState:
    """ADMM iterate for one channel; all arrays are 1-D."""

    level: int
    depth: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    iter: int = 0
    last_rel_change: float = math.inf


@dataclass
class RunReport:
    params: dict
    denoiser: dict
    level: int
    channels: int
    observed: int
    iterations: list[list[dict]] = field(default_factory=list)
    wall_time_s: float = 0.0
    channel_wall_times_s: list[float] = field(default_factory=list)
    metrics: dict | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _F(v, state):
    return framelet.analysis(v, state.depth)


def _Fstar(c, state):
    return framelet.synthesis(c, state.level, state.depth)


def init_state(g: np.ndarray, observed: np.ndarray, level: int, depth: int) -> SolverState:
    """Mean-fill the missing entries of ``g`` and start from zero multipliers."""
    x = np.where(observed, g, g[observed].mean())
    y = framelet.analysis(x, depth)
    return SolverState(level, depth, x, y, x.copy(), np.zeros_like(y), np.zeros_like(x))


def admm_step(
    state: SolverState,
    params: SolverParams,
    observed: np.ndarray,
    g: np.ndarray,
    denoiser: DenoiserSpec,
) -> SolverState:
    b1, b2 = params.beta1, params.beta2
    x_old = state.x

    with np.errstate(over="ignore", invalid="ignore"):
        y = soft_shrink(_F(x_old, state) - state.lam1 / b1, params.l1_weight / b1)
        noisy = x_old - state.lam2 / b2
        if not np.all(np.isfinite(noisy)):
            raise DivergenceError(state.iter + 1)
        z = denoise(denoiser, SphericalSignal(state.level, noisy), math.sqrt(params.lam / b2)).values[0]
        blend = (b1 * _Fstar(y, state) + b2 * z + _Fstar(state.lam1, state) + state.lam2) / (b1 + b2)
        x = np.where(observed, g, blend)
        lam1 = state.lam1 + (y - _F(x, state))
        lam2 = state.lam2 + (z - x)

        rel = float(np.linalg.norm(x - x_old) / max(np.linalg.norm(x_old), EPS))

    if not (
        math.isfinite(rel)
        and np.all(np.isfinite(x))
        and np.all(np.isfinite(lam1))
        and np.all(np.isfinite(lam2))
    ):
        raise DivergenceError(state.iter + 1)
    return SolverState(state.level, state.depth, x, y, z, lam1, lam2, state.iter + 1, rel)


def _solve_channel(g, mask, params, denoiser, callback):
    depth = params.resolved_depth(mask.level)
    state = init_state(g, mask.flags, mask.level, depth)
    history = []
    while True:
        state = admm_step(state, params, mask.flags, g, denoiser)
        record = {
            "iter": state.iter,
            "l1": float(np.abs(_F(state.x, state)).sum()),
            "rel_change": state.last_rel_change,
            "feasible": bool(np.array_equal(state.x[mask.flags], g[mask.flags])),
        }
        history.append(record)
        if callback is not None:
            callback(state)
        if state.iter >= params.max_iters or state.last_rel_change < params.rel_tol:
            return state.x, history


def inpaint(
    g: SphericalSignal,
    mask: Mask,
    params: SolverParams | None = None,
    denoiser: DenoiserSpec | None = None,
    callback: Callable[[SolverState], None] | None = None,
) -> tuple[SphericalSignal, RunReport]:
    """Restore the missing patches of ``g``.

    ``callback`` (if given) sees the state after every iteration of every
    channel.
    """
    params = params or SolverParams()
    denoiser = denoiser or DenoiserSpec()
    if mask.level != g.level:
        raise ValueError(f"mask level {mask.level} differs from signal level {g.level}")
    if mask.observed_count == 0:
        raise ValueError("mask has no observed entries")
    depth = params.resolved_depth(g.level)
    if not 1 <= depth <= g.level:
        raise ValueError(f"depth must be in [1, {g.level}], got {depth}")

    report = RunReport(
        params=asdict(replace(params, depth=depth)),
        denoiser=denoiser.as_dict(),
        level=g.level,
        channels=g.channels,
        observed=mask.observed_count,
    )
    t0 = time.perf_counter()
    out = np.empty_like(g.values)
    for k in range(g.channels):
        tc = time.perf_counter()
        out[k], history = _solve_channel(g.values[k], mask, params, denoiser, callback)
        report.iterations.append(history)
        report.channel_wall_times_s.append(time.perf_counter() - tc)
        log.debug("channel %d: %d iterations", k, len(history))
    report.wall_time_s = time.perf_counter() - t0
    return SphericalSignal(g.level, out), report
