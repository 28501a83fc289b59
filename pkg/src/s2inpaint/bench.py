"""Wall-clock scaling of the single-level and multilevel transforms."""
from __future__ import annotations

import timeit

import numpy as np

from . import framelet


def _batch_size(fn, batch_s: float) -> int:
    timer = timeit.Timer(fn)
    number = 1
    while timer.timeit(number) < batch_s:
        number *= 2
    return number


def best_time(fn, repeats: int = 15, number: int | None = None, batch_s: float = 0.02) -> float:
    """Minimum per-call time over ``repeats`` batches of ``number`` calls.

    When ``number`` is omitted it is chosen so one batch lasts about
    ``batch_s`` seconds, which keeps sub-millisecond calls above timer noise.
    """
    return best_times([fn], repeats, batch_s, number)[0]


def best_times(
    fns, repeats: int = 15, batch_s: float = 0.02, number: int | None = None, rounds: int = 3
) -> list[float]:
    """Per-call minimum times of several functions.

    Each function gets a warm block of batches per round, and the rounds
    cycle through all functions, so slow drift in machine speed hits every
    function alike without evicting the state a single function warms up.
    """
    timers = [timeit.Timer(fn) for fn in fns]
    numbers = [number or _batch_size(fn, batch_s) for fn in fns]
    per_round = max(1, -(-repeats // rounds))
    best = [float("inf")] * len(fns)
    for _ in range(rounds):
        for k, (timer, n) in enumerate(zip(timers, numbers)):
            best[k] = min(best[k], min(timer.repeat(repeat=per_round, number=n)) / n)
    return best


def scaling_table(levels, repeats: int = 15, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    levels = list(levels)
    cases = []
    for level in levels:
        c = rng.random(6 * 4**level)
        low, det = framelet.decompose_level(c)
        depth = framelet.default_depth(level)
        coeffs = framelet.analysis(c, depth)
        cases.append(
            {
                "decompose_level_s": lambda c=c: framelet.decompose_level(c),
                "reconstruct_level_s": lambda low=low, det=det: framelet.reconstruct_level(low, det),
                "decompose_s": lambda c=c, d=depth: framelet.analysis(c, d),
                "reconstruct_s": lambda x=coeffs, j=level, d=depth: framelet.synthesis(x, j, d),
            }
        )
    rows = [
        {"level": level, "samples": 6 * 4**level, "depth": framelet.default_depth(level)} for level in levels
    ]
    for key in ("decompose_level_s", "reconstruct_level_s", "decompose_s", "reconstruct_s"):
        for row, t in zip(rows, best_times([case[key] for case in cases], repeats)):
            row[key] = t
    ratios = [
        {
            "from_level": a["level"],
            "to_level": b["level"],
            "decompose_level_ratio": b["decompose_level_s"] / a["decompose_level_s"],
            "reconstruct_level_ratio": b["reconstruct_level_s"] / a["reconstruct_level_s"],
        }
        for a, b in zip(rows, rows[1:])
        if b["level"] == a["level"] + 1
    ]
    return {"seed": seed, "repeats": repeats, "rows": rows, "ratios": ratios}
