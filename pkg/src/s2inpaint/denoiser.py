"""Denoisers for the z-update of the ADMM solver.

Three kinds are available: ``identity``; ``framelet-shrink``, which
soft-thresholds every framelet detail coefficient at ``gain * sigma`` and
leaves the lowpass alone; and ``external``, which hands the signal to
another process through SPH1 files so that a trained network can be
plugged in.

The external command template must contain the placeholders ``{input}``,
``{sigma}`` and ``{output}``. It is split with :func:`shlex.split` before
substitution, so paths containing spaces stay single arguments. The process
must write a signal of identical level and channel count to ``{output}``
and exit with status 0.
"""
from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import framelet
from .signal import SphericalSignal

__all__ = ["DenoiserError", "DenoiserSpec", "denoise", "soft_shrink", "SCRATCH_ENV"]

SCRATCH_ENV = "S2INPAINT_SCRATCH"
KINDS = ("identity", "framelet-shrink", "external")


class DenoiserError(RuntimeError):
    """An external denoiser failed; carries the process diagnostics."""

    def __init__(self, message, returncode=None, stderr=""):
        super().__init__(message)
        self.returncode = returncode
        self.stderr = stderr


def soft_shrink(t, tau):
    """Elementwise ``sign(t) * max(|t| - tau, 0)``."""
    if np.any(np.asarray(tau) < 0):
        raise ValueError("threshold must be nonnegative")
    t = np.asarray(t, dtype=float)
    return np.sign(t) * np.maximum(np.abs(t) - tau, 0.0)


@dataclass(frozen=True)
class DenoiserSpec:
    kind: str = "framelet-shrink"
    depth: int | None = None
    gain: float = 1.0
    command: str | None = None
    scratch_dir: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown denoiser kind {self.kind!r}; choose from {KINDS}")
        if self.gain <= 0:
            raise ValueError(f"gain must be positive, got {self.gain}")
        if self.kind == "external":
            if not self.command:
                raise ValueError("external denoiser needs a command template")
            for key in ("{input}", "{sigma}", "{output}"):
                if key not in self.command:
                    raise ValueError(f"command template is missing {key}")

    def as_dict(self) -> dict:
        return {"kind": self.kind, "depth": self.depth, "gain": self.gain, "command": self.command}


def denoise(spec: DenoiserSpec, sig: SphericalSignal, sigma: float) -> SphericalSignal:
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if spec.kind == "identity" or sigma == 0:
        return SphericalSignal(sig.level, sig.values.copy())
    if spec.kind == "framelet-shrink":
        return _framelet_shrink(sig, sigma, spec.depth, spec.gain)
    return _external(spec, sig, sigma)


def _framelet_shrink(sig, sigma, depth, gain):
    if sig.level == 0:
        return SphericalSignal(0, sig.values.copy())
    depth = framelet.default_depth(sig.level) if depth is None else min(depth, sig.level)
    coeffs = framelet.analysis(sig.values, depth)
    n_low = 6 * 4 ** (sig.level - depth)
    coeffs[:, n_low:] = soft_shrink(coeffs[:, n_low:], gain * sigma)
    return SphericalSignal(sig.level, framelet.synthesis(coeffs, sig.level, depth))


def _external(spec, sig, sigma):
    from . import sph1

    scratch = spec.scratch_dir or os.environ.get(SCRATCH_ENV) or None
    workdir = tempfile.mkdtemp(prefix="denoise-", dir=scratch)
    src = Path(workdir) / "input.sph1"
    dst = Path(workdir) / "output.sph1"
    sph1.write(src, sig)
    argv = [
        tok.format(input=str(src), sigma=repr(float(sigma)), output=str(dst))
        for tok in shlex.split(spec.command)
    ]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True)
    except OSError as exc:
        raise DenoiserError(f"could not start external denoiser: {exc}") from exc
    if proc.returncode != 0:
        raise DenoiserError(
            f"external denoiser exited with status {proc.returncode}",
            proc.returncode,
            proc.stderr,
        )
    try:
        out = sph1.read_signal(dst)
    except (OSError, ValueError) as exc:
        raise DenoiserError(f"external denoiser produced no valid signal: {exc}", 0, proc.stderr) from exc
    if out.level != sig.level or out.channels != sig.channels:
        raise DenoiserError(
            f"external denoiser returned level {out.level} x {out.channels} channels, "
            f"expected {sig.level} x {sig.channels}",
            0,
            proc.stderr,
        )
    src.unlink()
    dst.unlink()
    os.rmdir(workdir)
    return out
