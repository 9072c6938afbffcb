"""Closed form against quadrature and Monte Carlo on the default grid."""

import argparse

from orpcov import validation


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--n-tx", type=int, default=32)
    args = parser.parse_args()

    report = validation.run_grid(n_tx=args.n_tx, trials=args.trials, master_seed=args.seed, threads=args.threads)
    print(f"{'N':>3} {'T':>6} {'rho':>6} {'closed':>12} {'quad dev':>9} {'p_hat':>9} {'MC dev/hw':>9}")
    for p in report.points:
        flag = "" if p.ok else "  <-- FAIL"
        print(f"{p.n_beams:3d} {p.threshold:6.3f} {p.rho:6.3f} {p.closed_form:12.8f} {p.quad_rel_dev:9.1e} "
              f"{p.estimate.p_hat:9.6f} {p.mc_dev / p.mc_half_width:9.2f}{flag}")
    print("all points agree" if report.passed else f"{len(report.failures)} points disagree")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
