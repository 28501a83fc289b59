"""PSNR/SSIM of restored signals across missing ratios.

Uses a smooth synthetic field (three low-order spherical harmonics) so the
run needs no external data. Prints a table and optionally writes JSON.

    python3 scripts/missing_ratio_sweep.py --level 6 --seeds 5 --json sweep.json
"""
import argparse
import json

import numpy as np

from s2inpaint import build_partition
from s2inpaint.denoiser import DenoiserSpec
from s2inpaint.metrics import MaskSpec, gen_mask, psnr, ssim
from s2inpaint.signal import SphericalSignal
from s2inpaint.solver import SolverParams, inpaint


def smooth_field(points):
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    return 128.0 + 50.0 * z + 40.0 * x + 30.0 * (3.0 * z**2 - 1.0) / 2.0


def run(level, ratios, seeds, params, spec):
    truth = SphericalSignal(level, smooth_field(build_partition(level).centers))
    rows = []
    for ratio in ratios:
        stats = {"psnr": [], "ssim": [], "fill_psnr": [], "fill_ssim": []}
        for seed in range(seeds):
            mask = gen_mask(level, MaskSpec(ratio, seed=seed))
            if mask.observed_count == 0:
                continue
            obs = mask.flags
            filled = np.where(obs, truth.values, truth.values[:, obs].mean())
            out, _ = inpaint(SphericalSignal(level, np.where(obs, truth.values, 0.0)), mask, params, spec)
            stats["psnr"].append(psnr(out, truth))
            stats["ssim"].append(ssim(out, truth))
            stats["fill_psnr"].append(psnr(filled, truth))
            stats["fill_ssim"].append(ssim(filled, truth))
        rows.append({"ratio": ratio, **{k: float(np.mean(v)) for k, v in stats.items()}})
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--level", type=int, default=6)
    ap.add_argument("--ratios", default="0.5,0.8,0.9,0.95")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--denoiser", default="framelet-shrink", choices=("identity", "framelet-shrink"))
    ap.add_argument("--gain", type=float, default=1.0)
    ap.add_argument("--max-iters", type=int, default=50)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()

    ratios = [float(r) for r in args.ratios.split(",")]
    params = SolverParams(max_iters=args.max_iters)
    spec = DenoiserSpec(args.denoiser, gain=args.gain)
    rows = run(args.level, ratios, args.seeds, params, spec)

    print(f"{'missing':>8} {'PSNR':>8} {'SSIM':>7} {'fill PSNR':>10} {'fill SSIM':>10}")
    for r in rows:
        print(
            f"{r['ratio']:>8.2f} {r['psnr']:>8.2f} {r['ssim']:>7.4f} "
            f"{r['fill_psnr']:>10.2f} {r['fill_ssim']:>10.4f}"
        )
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"level": args.level, "seeds": args.seeds, "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
