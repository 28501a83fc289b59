"""Timing table for the single-level and multilevel framelet transforms.

    python3 scripts/bench_scaling.py --levels 5..9 --repeats 15
"""
import argparse

from s2inpaint.bench import scaling_table
from s2inpaint.cli import parse_levels


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="5..9")
    ap.add_argument("--repeats", type=int, default=15)
    args = ap.parse_args()

    table = scaling_table(parse_levels(args.levels), repeats=args.repeats)
    print(f"{'J':>3} {'samples':>9} {'dec lvl ms':>11} {'rec lvl ms':>11} {'d':>2} {'dec ms':>8} {'rec ms':>8}")
    for r in table["rows"]:
        print(
            f"{r['level']:>3} {r['samples']:>9} {r['decompose_level_s'] * 1e3:>11.3f} "
            f"{r['reconstruct_level_s'] * 1e3:>11.3f} {r['depth']:>2} "
            f"{r['decompose_s'] * 1e3:>8.3f} {r['reconstruct_s'] * 1e3:>8.3f}"
        )
    for r in table["ratios"]:
        print(
            f"t({r['to_level']})/t({r['from_level']}): decompose {r['decompose_level_ratio']:.2f}, "
            f"reconstruct {r['reconstruct_level_ratio']:.2f}"
        )


if __name__ == "__main__":
    main()
