"""Coverage by direct 2-D integration of the (A_max, B_min) density.

This is an independent route to the single-antenna coverage: no incomplete
gamma algebra, only the joint density integrated numerically over
``{a > T (N/rho + b), 0 <= b <= (N-1) a}``.  Inner integrals run over ``a``
and are split on every sector ray ``a = b/k``; outer integrals run over
``b`` and are split at every breakpoint ``b_k`` where the coverage line
crosses a ray.  Each piece is smooth, so QUADPACK's adaptive Gauss-Kronrod
rule converges quickly on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate, special

from .core import SystemConfig, ToleranceNotMet


@dataclass(frozen=True)
class Region:
    index: int


INFEASIBLE = None


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-40
    max_subdivisions: int = 200
    truncation_bound: float | None = None

    def bound(self, n_beams: int) -> float:
        """Truncation limit for both ``a`` and ``b`` with certified tail."""
        if self.truncation_bound is not None:
            return self.truncation_bound
        limit = 50.0 + 10.0 * n_beams
        while truncation_tail(n_beams, limit) > self.abs_tol / 10:
            limit += 10.0
        return limit


def truncation_tail(n_beams: int, limit: float) -> float:
    """Upper bound on the density mass outside ``[0, limit]^2``.

    ``P{A_max > L} <= N e^-L`` and ``P{B_min > L} <= P{S > L}`` with
    ``S ~ Gamma(N, 1)``.
    """
    return n_beams * math.exp(-limit) + float(special.gammaincc(n_beams, limit))


def region_of(a: float, b: float, n_beams: int) -> Region | None:
    """Sector ``k`` with ``b/k <= a <= b/(k-1)``; ``None`` outside the wedge."""
    if b > (n_beams - 1) * a:
        return INFEASIBLE
    if a >= b:
        return Region(1)
    k = math.ceil(b / a)
    # guard ceil against representation error right on a ray
    while k > 1 and b <= (k - 1) * a:
        k -= 1
    while b > k * a:
        k += 1
    return Region(min(k, n_beams - 1))


def _hall_volume(a: float, b: float, n: int) -> float:
    """``sum_j (-1)^j C(n, j) (b - j a)_+^(n-1)``: slice volume of the cube [0, a]^n."""
    terms = []
    j = 0
    while j <= n and b - j * a > 0:
        terms.append((-1) ** j * math.comb(n, j) * (b - j * a) ** (n - 1))
        j += 1
    return math.fsum(terms)


def joint_pdf(a: float, b: float, n_beams: int) -> float:
    """Joint density of the strongest beam power and its interference.

    Uses the symmetry of the slice volume about ``b = (N-1) a / 2`` so that the
    alternating sum always has the fewer terms; the value equals the
    sector-wise expression on both sides.
    """
    N = n_beams
    if N < 2:
        raise ValueError("joint density needs N >= 2")
    if a <= 0 or b < 0 or b > (N - 1) * a:
        return 0.0
    n = N - 1
    if N == 2:
        vol = 1.0
    else:
        mirror = n * a - b
        vol = _hall_volume(a, min(b, mirror), n)
    return N / math.factorial(N - 2) * math.exp(-(a + b)) * max(vol, 0.0)


def joint_pdf_sector(a: float, b: float, n_beams: int) -> float:
    """The same density evaluated literally, sector by sector."""
    N = n_beams
    region = region_of(a, b, N)
    if region is None:
        return 0.0
    k = region.index
    s = math.fsum(
        math.comb(N - 1, t - 1) * (-1) ** (t + 1) * (b - (t - 1) * a) ** (N - 2)
        for t in range(1, k + 1)
    )
    return N / math.factorial(N - 2) * math.exp(-(a + b)) * s


def h_factor(ratio: float, n_beams: int) -> float:
    """Shape factor of the conditional density of the beam-power sum."""
    N = n_beams
    if not 0 < ratio <= 1:
        return 0.0
    k = math.floor(1.0 / ratio)
    if k > N - 1:
        return 0.0
    s = math.fsum(
        math.comb(N - 1, t - 1) * (-1) ** (t + 1) * (1 - t * ratio) ** (N - 2)
        for t in range(1, k + 1)
    )
    return N * (N - 1) * s


def conditional_sum_pdf(s: float, a: float, n_beams: int) -> float:
    """Density of ``S = A_max + B_min`` given ``A_max = a``."""
    N = n_beams
    if s < a or a <= 0:
        return 0.0
    return s ** (N - 2) * math.exp(-(s - a)) / (math.factorial(N) * (-math.expm1(-a)) ** (N - 1)) * h_factor(a / s, N)


# -- quadrature ------------------------------------------------------------------

def _quad(f, lo: float, hi: float, spec: QuadratureSpec) -> tuple[float, float]:
    if hi <= lo:
        return 0.0, 0.0
    out = integrate.quad(f, lo, hi, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions, full_output=1)
    if len(out) == 4:
        raise ToleranceNotMet(f"quadrature on [{lo}, {hi}] failed: {out[3]}")
    return out[0], out[1]


def _inner(b: float, a_lo: float, a_hi: float, n_beams: int, spec: QuadratureSpec) -> float:
    cuts = [a_lo]
    for k in range(n_beams - 2, 0, -1):
        ray = b / k
        if a_lo < ray < a_hi:
            cuts.append(ray)
    cuts.append(a_hi)
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        total += _quad(lambda a: joint_pdf(a, b, n_beams), lo, hi, spec)[0]
    return total


def _outer(f, cuts: list[float], spec: QuadratureSpec) -> tuple[float, float]:
    cuts = sorted(set(cuts))
    value = err = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        v, e = _quad(f, lo, hi, spec)
        value += v
        err += e
    return value, err


def coverage_by_quadrature(config: SystemConfig, spec: QuadratureSpec | None = None) -> float:
    spec = spec or QuadratureSpec()
    N, T = config.n_beams, config.threshold
    if N < 2:
        raise ValueError("quadrature oracle needs N >= 2")
    c = N / config.rho
    L = spec.bound(N)

    def a_min(b: float) -> float:
        return max(T * (c + b), b / (N - 1))

    b_hi = min(L, L / T - c)
    if b_hi <= 0:
        return 0.0
    cuts = [0.0, b_hi]
    for k in range(1, N):
        if k * T < 1.0:
            bk = T * c * k / (1.0 - k * T)
            if bk < b_hi:
                cuts.append(bk)
    value, _ = _outer(lambda b: _inner(b, a_min(b), L, N, spec), cuts, spec)
    return value


def wedge_mass(n_beams: int, spec: QuadratureSpec | None = None) -> float:
    """Integral of the joint density over the whole feasible wedge."""
    spec = spec or QuadratureSpec()
    N = n_beams
    L = spec.bound(N)
    value, _ = _outer(lambda b: _inner(b, b / (N - 1), L, N, spec), [0.0, L], spec)
    return value


def cell_mass(n_beams: int, a0: float, a1: float, b0: float, b1: float, spec: QuadratureSpec | None = None) -> float:
    """Probability of the rectangle ``[a0, a1] x [b0, b1]``."""
    spec = spec or QuadratureSpec(rel_tol=1e-9, abs_tol=1e-13)
    N = n_beams
    cuts = [b0, b1] + [k * a for k in range(1, N) for a in (a0, a1) if b0 < k * a < b1]

    def inner(b: float) -> float:
        lo = max(a0, b / (N - 1))
        return _inner(b, lo, a1, N, spec) if lo < a1 else 0.0

    return _outer(inner, cuts, spec)[0]
