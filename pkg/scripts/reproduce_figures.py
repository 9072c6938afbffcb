"""Write every figure table (analytic and simulated series) to CSV.

    python scripts/reproduce_figures.py --out results/ --trials 1000000 --threads 8
"""

import argparse
import time
from pathlib import Path

from orpcov import experiments


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--figures", type=int, nargs="*", default=list(experiments.FIGURES))
    parser.add_argument("--trials", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--analytic-only", action="store_true")
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    for fid in args.figures:
        start = time.perf_counter()
        result = experiments.run_figure(fid, args.trials, args.seed, args.threads, simulate=not args.analytic_only)
        path = args.out / f"figure{fid}.csv"
        path.write_text(result.to_csv(), encoding="utf-8")
        print(f"figure {fid}: {len(result.axis_values)} x {len(result.series)} -> {path} ({time.perf_counter() - start:.1f} s)")


if __name__ == "__main__":
    main()
