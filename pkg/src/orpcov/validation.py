"""Cross-checks between the closed form, the quadrature oracle and Monte Carlo."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import analytic, oracle, simulator
from .core import Scheme, SystemConfig

GRID_BEAMS = (2, 3, 6, 12)
GRID_THRESHOLDS = (0.1, 0.2, 0.5, 0.9, 1.0, 1.585, 6.31)
GRID_RHOS = (0.631, 1.0, 3.981)

QUAD_REL_TOL_HIGH = 1e-6  # T >= 1
QUAD_REL_TOL_LOW = 1e-4  # T < 1
MC_SIGMAS = 3.0


# -- Kolmogorov-Smirnov against an expensive CDF -----------------------------

@dataclass
class KSBound:
    lower: float
    upper: float
    evaluations: int


def ks_statistic_bound(samples: np.ndarray, cdf: Callable[[float], float], start_points: int = 256, tol: float = 5e-5) -> KSBound:
    """Bracket ``sup_x |F_n(x) - F(x)|`` using few evaluations of ``F``.

    ``F`` is only evaluated at order statistics.  Between two of them the
    empirical CDF and ``F`` are both monotone, which bounds the deviation on
    the whole gap.  Gaps whose bound could still exceed the best deviation
    seen so far are split until the bracket is narrower than ``tol``.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    cache: dict[int, float] = {}

    def F(i: int) -> float:
        if i not in cache:
            cache[i] = cdf(float(x[i]))
        return cache[i]

    below = np.searchsorted(x, x, side="left") / n  # F_n(x_i-)
    upto = np.searchsorted(x, x, side="right") / n  # F_n(x_i)
    idx = sorted(set(np.linspace(0, n - 1, min(start_points, n)).astype(int).tolist()))

    while True:
        lower = max(max(abs(upto[i] - F(i)), abs(F(i) - below[i])) for i in idx)
        gaps = []
        upper = max(F(idx[0]), 1.0 - F(idx[-1]), lower)
        for i, j in zip(idx, idx[1:]):
            u = max(upto[i] - F(i), F(i) - below[i], below[j] - F(i), F(j) - upto[i], upto[j] - F(j), F(j) - below[j])
            upper = max(upper, u)
            if u > lower + tol and j - i > 1:
                gaps.append((i, j))
        if upper - lower <= tol or not gaps:
            return KSBound(lower, upper, len(cache))
        new = {(i + j) // 2 for i, j in gaps}
        idx = sorted(set(idx) | new)


# -- density histogram ---------------------------------------------------------

@dataclass
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    cells: int


def density_chi_square(
    amax: np.ndarray, bmin: np.ndarray, n_beams: int, a_edges: Sequence[float], b_edges: Sequence[float], min_expected: float = 20.0
) -> ChiSquareResult:
    """Goodness of fit of simulated (A_max, B_min) pairs to the joint density.

    Cells with fewer than ``min_expected`` expected hits are pooled with
    everything outside the grid into a single remainder cell.
    """
    n = amax.size
    counts, _, _ = np.histogram2d(amax, bmin, bins=[a_edges, b_edges])
    observed, expected = [], []
    for i in range(len(a_edges) - 1):
        for j in range(len(b_edges) - 1):
            e = n * oracle.cell_mass(n_beams, a_edges[i], a_edges[i + 1], b_edges[j], b_edges[j + 1])
            if e >= min_expected:
                observed.append(counts[i, j])
                expected.append(e)
    rest_obs = n - sum(observed)
    rest_exp = n - sum(expected)
    if rest_exp >= min_expected:
        observed.append(rest_obs)
        expected.append(rest_exp)
    observed, expected = np.array(observed), np.array(expected)
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    dof = len(observed) - 1
    return ChiSquareResult(chi2, dof, float(stats.chi2.sf(chi2, dof)), len(observed))


# -- three-way grid ------------------------------------------------------------

@dataclass
class GridPoint:
    n_beams: int
    threshold: float
    rho: float
    closed_form: float
    quadrature: float
    estimate: simulator.CoverageEstimate

    @property
    def quad_rel_dev(self) -> float:
        return abs(self.closed_form - self.quadrature) / self.quadrature if self.quadrature > 0 else abs(self.closed_form)

    @property
    def quad_limit(self) -> float:
        return QUAD_REL_TOL_HIGH if self.threshold >= 1.0 else QUAD_REL_TOL_LOW

    @property
    def mc_half_width(self) -> float:
        hw = self.estimate.ci_half_width
        if hw == 0.0:
            # no spread among trials: use the binomial error at the closed-form value
            p, n = self.closed_form, self.estimate.trials
            hw = 1.96 * math.sqrt(p * (1.0 - p) / n)
        return hw

    @property
    def mc_dev(self) -> float:
        return abs(self.closed_form - self.estimate.p_hat)

    @property
    def quad_ok(self) -> bool:
        return self.quad_rel_dev <= self.quad_limit

    @property
    def mc_ok(self) -> bool:
        return self.mc_dev <= MC_SIGMAS * self.mc_half_width

    @property
    def ok(self) -> bool:
        return self.quad_ok and self.mc_ok


@dataclass
class GridReport:
    points: list[GridPoint] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.ok for p in self.points)

    @property
    def failures(self) -> list[GridPoint]:
        return [p for p in self.points if not p.ok]

    def worst_quadrature(self) -> GridPoint:
        return max(self.points, key=lambda p: p.quad_rel_dev / p.quad_limit)

    def worst_monte_carlo(self) -> GridPoint:
        return max(self.points, key=lambda p: p.mc_dev / (MC_SIGMAS * p.mc_half_width) if p.mc_half_width else 0.0)


def run_grid(
    beams: Sequence[int] = GRID_BEAMS,
    thresholds: Sequence[float] = GRID_THRESHOLDS,
    rhos: Sequence[float] = GRID_RHOS,
    n_tx: int = 32,
    trials: int = simulator.DEFAULT_TRIALS,
    master_seed: int = 2024,
    threads: int = 1,
    quad_spec: oracle.QuadratureSpec | None = None,
    perturb: Callable[[int, float, float, float], float] | None = None,
) -> GridReport:
    """Evaluate all three routes on every (N, T, rho) grid point.

    Monte Carlo draws are shared: one batch per ``N`` serves every ``rho`` and
    every ``T``.  ``perturb`` may rewrite the closed-form value of a point,
    which lets callers check that the harness really detects disagreement.
    """
    report = GridReport()
    for n in beams:
        base = SystemConfig(n_tx=n_tx, n_beams=n, rho=rhos[0], threshold=thresholds[0])
        samples = simulator.max_sinr_samples(base, Scheme.ORP_SA, trials, master_seed, threads, rhos=rhos)
        for ri, rho in enumerate(rhos):
            for t in thresholds:
                cfg = base.replace(rho=rho, threshold=t)
                closed = analytic.coverage_sa(cfg)
                if perturb is not None:
                    closed = perturb(n, t, rho, closed)
                quad = oracle.coverage_by_quadrature(cfg, quad_spec)
                hits = int(np.count_nonzero(samples[ri] > t))
                est = simulator.CoverageEstimate.from_count(hits, trials, master_seed)
                report.points.append(GridPoint(n, t, rho, closed, quad, est))
    return report
