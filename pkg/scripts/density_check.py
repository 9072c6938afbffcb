"""Normalisation of the (A_max, B_min) density and a chi-square fit to simulated pairs."""

import argparse

import numpy as np

from orpcov import oracle, simulator, validation


def quantile_edges(values, bins):
    inner = np.quantile(values, np.linspace(0, 1, bins + 1)[1:-1])
    return [0.0, *inner.tolist(), 80.0]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--beams", type=int, nargs="*", default=[2, 3, 6])
    parser.add_argument("--samples", type=int, default=10**7)
    parser.add_argument("--bins", type=int, default=8)
    parser.add_argument("--seed", type=int, default=70)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    for n in range(2, 13):
        print(f"N={n:2d}  mass - 1 = {oracle.wedge_mass(n) - 1:+.2e}")
    for n in args.beams:
        pa, pb = simulator.amax_bmin_samples(n, n, 100_000, args.seed + 630 + n, args.threads)
        a, b = simulator.amax_bmin_samples(n, n, args.samples, args.seed + n, args.threads)
        r = validation.density_chi_square(a, b, n, quantile_edges(pa, args.bins), quantile_edges(pb, args.bins))
        print(f"N={n}: chi2 = {r.statistic:.1f} on {r.dof} dof, p = {r.p_value:.4f}")


if __name__ == "__main__":
    main()
