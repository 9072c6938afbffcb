"""Coverage-maximising beam count over a (T, rho) grid, closed form only."""

import argparse

import numpy as np

from orpcov import analytic
from orpcov.core import db_to_linear


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-beams", type=int, default=32)
    args = parser.parse_args()

    t_db = np.arange(-15, 11, 2.5)
    rho_db = np.arange(-5, 21, 5)
    print("T_dB \\ rho_dB " + "".join(f"{r:>8.1f}" for r in rho_db))
    for t in t_db:
        row = [analytic.optimal_beam_count(db_to_linear(t), db_to_linear(r), args.max_beams)[0] for r in rho_db]
        print(f"{t:13.1f} " + "".join(f"{n:8d}" for n in row))


if __name__ == "__main__":
    main()
