"""Command-line interface.

Every subcommand accepts ``--config FILE`` (TOML). Keys at the top level of
the file apply to all subcommands; keys under a ``[<subcommand>]`` table
apply to that subcommand only. Command-line flags win over the file, which
wins over built-in defaults. Option names use underscores in the file
(``max_iters = 200``).

Failures exit with status 1 and print ``{"error": ..., "message": ...}`` on
standard error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, sph1
from .bench import scaling_table
from .denoiser import SCRATCH_ENV, DenoiserSpec, denoise
from .framelet import decompose, default_depth, reconstruct
from .metrics import MaskSpec, gen_mask, psnr, ssim
from .partition import build_partition
from .signal import SphericalSignal, from_equirectangular, single_face_ingest, to_equirectangular
from .solver import BETA1_GRID, BETA2_GRID, DivergenceError, SolverParams, inpaint

log = logging.getLogger("s2inpaint")

SCHEMA_VERSION = 1


class CLIError(Exception):
    pass


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def dumps(doc) -> str:
    return json.dumps(_json_safe(doc), indent=2, sort_keys=True)


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _report_base(args, command: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "s2inpaint",
        "version": __version__,
        "numpy_version": np.__version__,
        "command": command,
        "argv": list(getattr(args, "_argv", [])),
    }


def _write_text(path, text: str) -> None:
    sph1.atomic_write_bytes(path, text.encode())


def _emit(doc, path=None) -> None:
    text = dumps(doc)
    if path:
        _write_text(path, text + "\n")
    else:
        print(text)


def parse_levels(text: str) -> list[int]:
    """``"6..9"`` -> [6, 7, 8, 9]; ``"6,8"`` -> [6, 8]."""
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",") if t.strip()]


# -- images ---------------------------------------------------------------


def read_png(path, grayscale: bool = False) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        im = im.convert("L" if grayscale else ("L" if im.mode in ("L", "I", "1", "LA") else "RGB"))
        return np.asarray(im, dtype=float)


def to_uint8_rgb(img: np.ndarray, colormap: str | None) -> np.ndarray:
    """Clamp to [0, 255]; single-channel images go through ``colormap`` if given."""
    img = np.clip(img, 0.0, 255.0)
    if img.shape[-1] == 1:
        if colormap and colormap != "none":
            from matplotlib import colormaps

            rgba = colormaps[colormap](img[..., 0] / 255.0)
            return np.round(rgba[..., :3] * 255).astype(np.uint8)
        return np.round(img[..., 0]).astype(np.uint8)
    return np.round(img[..., :3]).astype(np.uint8)


def write_png(path, pixels: np.ndarray) -> None:
    import io

    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(pixels).save(buf, format="PNG")
    sph1.atomic_write_bytes(path, buf.getvalue())


def render_png(sig: SphericalSignal, path, width=None, height=None, colormap="viridis") -> None:
    width = width or 8 * 2**sig.level
    height = height or max(1, width // 2)
    partition = build_partition(sig.level)
    img = to_equirectangular(sig, partition, width, height)
    write_png(path, to_uint8_rgb(img, colormap))


# -- subcommands ----------------------------------------------------------


def cmd_partition_info(args) -> int:
    partition = build_partition(args.level)
    areas = partition.areas()
    target = 4 * math.pi / partition.size
    doc = {
        **_report_base(args, "partition-info"),
        "level": args.level,
        "patch_counts": [6 * 4**j for j in range(args.level + 1)],
        "min_area": float(areas.min()),
        "max_area": float(areas.max()),
        "mean_area": float(areas.mean()),
        "target_area": target,
        "max_rel_deviation": float(np.max(np.abs(areas - target)) / target),
        "total_area": float(areas.sum()),
    }
    if args.export:
        _write_text(args.export, partition.to_json())
        doc["export"] = {"path": str(args.export), "sha256": sha256(args.export)}
    _emit(doc, args.report)
    return 0


def cmd_ingest(args) -> int:
    img = read_png(args.input, grayscale=args.grayscale)
    partition = build_partition(args.level)
    if args.mode == "equirect":
        sig = from_equirectangular(img, partition)
    else:
        sig = single_face_ingest(img, partition, face=args.face)
    sph1.write(args.output, sig)
    _emit(
        {
            **_report_base(args, "ingest"),
            "mode": args.mode,
            "level": args.level,
            "channels": sig.channels,
            "input_sha256": sha256(args.input),
            "output_sha256": sha256(args.output),
        },
        args.report,
    )
    return 0


def cmd_render(args) -> int:
    sig = sph1.read_signal(args.input)
    render_png(sig, args.output, args.width, args.height, args.colormap)
    return 0


def cmd_transform(args) -> int:
    obj = sph1.read(args.input)
    doc = _report_base(args, "transform")
    if args.inverse:
        if not hasattr(obj, "coeffs"):
            raise CLIError("--inverse needs a pyramid file")
        out = reconstruct(obj)
        doc.update(direction="inverse", level=obj.level, depth=obj.depth)
    else:
        if not isinstance(obj, SphericalSignal):
            raise CLIError("forward transform needs a signal file")
        depth = args.depth or default_depth(obj.level)
        out = decompose(obj, depth)
        back = reconstruct(out).values
        scale = max(np.linalg.norm(obj.values), 1e-300)
        err = float(np.linalg.norm(back - obj.values) / scale)
        doc.update(
            direction="forward",
            level=obj.level,
            depth=depth,
            roundtrip_rel_error=err,
            roundtrip_ok=err <= 1e-10,
            parseval_rel_error=float(abs(out.norm() - np.linalg.norm(obj.values)) / scale),
        )
    sph1.write(args.output, out)
    doc.update(input_sha256=sha256(args.input), output_sha256=sha256(args.output))
    _emit(doc, args.report)
    return 0


def _denoiser_spec(args) -> DenoiserSpec:
    return DenoiserSpec(
        kind=args.denoiser,
        depth=args.denoiser_depth,
        gain=args.gain,
        command=args.command,
        scratch_dir=os.environ.get(SCRATCH_ENV),
    )


def cmd_denoise(args) -> int:
    sig = sph1.read_signal(args.input)
    out = denoise(_denoiser_spec(args), sig, args.sigma)
    sph1.write(args.output, out)
    return 0


def cmd_mask(args) -> int:
    mask = gen_mask(args.level, MaskSpec(args.ratio, args.seed))
    sph1.write(args.output, mask)
    _emit(
        {
            **_report_base(args, "mask"),
            "level": args.level,
            "ratio": args.ratio,
            "seed": args.seed,
            "observed": mask.observed_count,
            "observed_fraction": mask.observed_fraction,
            "output_sha256": sha256(args.output),
        },
        args.report,
    )
    return 0


def cmd_metrics(args) -> int:
    truth = sph1.read_signal(args.truth)
    test = sph1.read_signal(args.test)
    print(dumps({"schema_version": SCHEMA_VERSION, "psnr_db": psnr(test, truth), "ssim": ssim(test, truth)}))
    return 0


def _solve_point(g, mask, params, spec, truth):
    try:
        out, report = inpaint(g, mask, params, spec)
    except DivergenceError as exc:
        return None, None, {"beta1": params.beta1, "beta2": params.beta2, "diverged_at": exc.iteration}
    row = {"beta1": params.beta1, "beta2": params.beta2, "iterations": len(report.iterations[0])}
    if truth is not None:
        row.update(psnr_db=psnr(out, truth), ssim=ssim(out, truth))
    return out, report, row


def cmd_inpaint(args) -> int:
    data = sph1.read_signal(args.input)
    inputs = {"input": sha256(args.input)}
    truth = None
    if args.mask:
        mask = sph1.read_mask(args.mask)
        inputs["mask"] = sha256(args.mask)
        mask_info = {"source": "file"}
        if args.truth:
            truth = sph1.read_signal(args.truth)
            inputs["truth"] = sha256(args.truth)
    else:
        mask = gen_mask(data.level, MaskSpec(args.ratio, args.seed))
        mask_info = {"source": "generated", "ratio": args.ratio, "seed": args.seed}
        truth = data
    mask_info["observed"] = mask.observed_count
    g = SphericalSignal(data.level, np.where(mask.flags, data.values, 0.0))
    spec = _denoiser_spec(args)
    base = dict(
        lam=args.lam,
        depth=args.depth,
        max_iters=args.max_iters,
        rel_tol=args.rel_tol,
    )

    t0 = time.perf_counter()
    grid_rows = None
    if args.grid:
        if truth is None:
            raise CLIError("--grid needs ground truth (generated mask or --truth)")
        points = [SolverParams(beta1=b1, beta2=b2, **base) for b1 in BETA1_GRID for b2 in BETA2_GRID]
        with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
            results = list(pool.map(lambda p: _solve_point(g, mask, p, spec, truth), points))
        grid_rows = [r[2] for r in results]
        finished = [r for r in results if r[0] is not None]
        if not finished:
            raise CLIError("every grid point diverged")
        out, report, best = max(finished, key=lambda r: r[2]["psnr_db"])
    else:
        out, report, best = _solve_point(
            g, mask, SolverParams(beta1=args.beta1, beta2=args.beta2, **base), spec, truth
        )
        if out is None:
            raise DivergenceError(best["diverged_at"])
    total = time.perf_counter() - t0

    sph1.write(args.output, out)
    outputs = {"output": sha256(args.output)}
    if args.png:
        render_png(out, args.png, colormap=args.colormap)
        outputs["png"] = sha256(args.png)

    doc = {
        **_report_base(args, "inpaint"),
        "seed": args.seed,
        "mask": mask_info,
        "solver": report.as_dict(),
        "input_sha256": inputs,
        "output_sha256": outputs,
        "wall_time_s": total,
    }
    if truth is not None:
        degraded = np.where(mask.flags, truth.values, truth.values[:, mask.flags].mean(axis=1)[:, None])
        doc["metrics"] = {
            "psnr_db": psnr(out, truth),
            "ssim": ssim(out, truth),
            "mean_fill_psnr_db": psnr(degraded, truth),
            "mean_fill_ssim": ssim(degraded, truth),
        }
    if grid_rows is not None:
        doc["grid"] = {"rows": grid_rows, "best": best}
    _emit(doc, args.report)
    return 0


def cmd_bench(args) -> int:
    table = scaling_table(parse_levels(args.levels), repeats=args.repeats)
    for r in table["ratios"]:
        r["decompose_level_in_range"] = 3.0 <= r["decompose_level_ratio"] <= 6.0
    _emit({**_report_base(args, "bench"), **table}, args.report)
    return 0


# -- parser ---------------------------------------------------------------


def _add_solver_opts(p):
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--beta1", type=float, default=0.5)
    p.add_argument("--beta2", type=float, default=2.0)
    p.add_argument("--depth", type=int, default=None, help="framelet depth (default min(J, 3))")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=50)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-4)


def _add_denoiser_opts(p):
    p.add_argument("--denoiser", choices=("identity", "framelet-shrink", "external"), default="framelet-shrink")
    p.add_argument("--denoiser-depth", dest="denoiser_depth", type=int, default=None)
    p.add_argument("--gain", type=float, default=1.0, help="threshold = gain * sigma")
    p.add_argument("--command", default=None, help="external command with {input} {sigma} {output}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="s2inpaint", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", default=None, help="TOML config file")
        p.set_defaults(func=func)
        return p

    p = add("partition-info", cmd_partition_info, "partition statistics for one level")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--export", default=None, help="write split-position metadata JSON")
    p.add_argument("--report", default=None)

    p = add("ingest", cmd_ingest, "PNG image to SPH1 signal")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--mode", choices=("equirect", "single-face"), default="equirect")
    p.add_argument("--face", type=int, default=0)
    p.add_argument("--grayscale", action="store_true")
    p.add_argument("--report", default=None)

    p = add("render", cmd_render, "SPH1 signal to equirectangular PNG")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--colormap", default="viridis", help="colormap for grayscale, or 'none'")

    p = add("transform", cmd_transform, "framelet analysis (or synthesis with --inverse)")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--inverse", action="store_true")
    p.add_argument("--report", default=None)

    p = add("denoise", cmd_denoise, "apply a denoiser to a signal")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--sigma", type=float, required=True)
    _add_denoiser_opts(p)

    p = add("mask", cmd_mask, "random missing-data mask")
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--report", default=None)

    p = add("inpaint", cmd_inpaint, "ADMM plug-and-play inpainting")
    p.add_argument("--input", required=True, help="signal; treated as ground truth unless --mask is given")
    p.add_argument("--output", required=True)
    p.add_argument("--mask", default=None, help="mask file (otherwise generated from --ratio/--seed)")
    p.add_argument("--truth", default=None)
    p.add_argument("--ratio", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--png", default=None)
    p.add_argument("--colormap", default="viridis")
    p.add_argument("--report", default=None)
    p.add_argument("--grid", action="store_true", help="sweep beta1 in 0.1..1, beta2 in 1..5")
    p.add_argument("--workers", type=int, default=1)
    _add_solver_opts(p)
    _add_denoiser_opts(p)

    p = add("metrics", cmd_metrics, "PSNR and SSIM between two signals")
    p.add_argument("--truth", required=True)
    p.add_argument("--test", required=True)

    p = add("bench", cmd_bench, "transform timing across levels")
    p.add_argument("--levels", default="6..9")
    p.add_argument("--repeats", type=int, default=15)
    p.add_argument("--report", default=None)
    return parser


def _load_config(path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    # Option keys may be spelled like the flags (max-iters) or like Python
    # (max_iters); table names keep their dashes (partition-info).
    out = {}
    for key, value in cfg.items():
        if isinstance(value, dict):
            out[key] = {k.replace("-", "_"): v for k, v in value.items()}
        else:
            out[key.replace("-", "_")] = value
    return out


def _subparsers(parser):
    return parser._subparsers._group_actions[0].choices.values()


def _prescan(argv, parser) -> tuple[str | None, str | None]:
    """Subcommand name and ``--config`` path, found before full parsing."""
    names = set(parser._subparsers._group_actions[0].choices)
    subcommand = next((a for a in argv if a in names), None)
    config = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
        elif a.startswith("--config="):
            config = a.split("=", 1)[1]
    return subcommand, config


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    subcommand, config = _prescan(argv, parser)
    if config and subcommand:
        cfg = _load_config(config)
        subparser = parser._subparsers._group_actions[0].choices[subcommand]
        known = {a.dest for a in subparser._actions}
        names = set(parser._subparsers._group_actions[0].choices)
        # Top-level keys are shared, so each subcommand takes only those it knows.
        shared = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
        unknown = sorted(set(shared) - {a.dest for sp in _subparsers(parser) for a in sp._actions})
        unknown += sorted(k for k, v in cfg.items() if isinstance(v, dict) and k not in names)
        section = cfg.get(subcommand, {})
        unknown += sorted(set(section) - known)
        if unknown:
            raise CLIError(f"unknown config keys for {subcommand}: {unknown}")
        merged = {k: v for k, v in shared.items() if k in known}
        merged.update(section)
        subparser.set_defaults(**merged)
        for action in subparser._actions:
            if action.dest in merged:
                action.required = False
    args = parser.parse_args(argv)
    args._argv = list(argv)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        return args.func(args)
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - surfaced as machine-readable JSON
        doc = {"error": type(exc).__name__, "message": str(exc)}
        for attr in ("iteration", "returncode", "stderr"):
            if getattr(exc, attr, None) is not None:
                doc[attr] = getattr(exc, attr)
        print(json.dumps(doc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
