"""Closed-form coverage probabilities of orthogonal random precoding.

The single-antenna coverage for ``T < 1`` is a finite combination of
truncated gamma integrals over the sectors ``b/k <= a <= b/(k-1)`` of the
(strongest beam power, interference) plane.  The sector weights are
alternating binomial sums, so heavy cancellation appears once ``N`` grows
past ten or so.  Every evaluation first runs in double precision while
tracking an absolute error bound; if the bound exceeds ``1e-8`` of the
result the evaluation is repeated in arbitrary precision with enough digits
to absorb the measured cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath

from .core import (
    DegenerateBreakpoint,
    NumericalInstability,
    Scheme,
    SystemConfig,
    validate,
)

REL_ERROR_LIMIT = 1e-8
MAX_BEAMS_LOW_THRESHOLD = 40
_MAX_DPS = 400


# -- incomplete gamma ----------------------------------------------------------

def _logsumexp(logs: list[float]) -> float:
    top = max(logs)
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


def incomplete_gamma_upper_int(n: int, alpha: float) -> float:
    """``int_alpha^inf e^-x x^n dx = n! e^-alpha sum_{l<=n} alpha^l / l!``."""
    if n < 0 or alpha < 0:
        raise ValueError("need n >= 0 and alpha >= 0")
    if alpha == 0:
        return float(math.factorial(n))
    logs = [l * math.log(alpha) - math.lgamma(l + 1) for l in range(n + 1)]
    try:
        return math.exp(math.lgamma(n + 1) - alpha + _logsumexp(logs))
    except OverflowError:
        raise NumericalInstability(f"Gamma({n + 1}, {alpha}) overflows") from None


def _upper_regularized(n: int, x: float) -> float:
    """``P{Poisson(x) <= n}``, i.e. ``Gamma(n + 1, x) / n!``."""
    if x == 0:
        return 1.0
    logs = [l * math.log(x) - math.lgamma(l + 1) for l in range(n + 1)]
    return math.exp(-x + _logsumexp(logs))


# -- arithmetic backends -----------------------------------------------------

class _Float:
    eps = 2.0 ** -53
    inf = math.inf
    num = staticmethod(float)
    exp = staticmethod(math.exp)
    log = staticmethod(math.log)
    fsum = staticmethod(math.fsum)

    @staticmethod
    def start_term(x):
        # e^-x underflows long before the Poisson weights it multiplies do
        return math.exp(-x) if x < 700 else None


class _Mp:
    def __init__(self, dps: int):
        self.ctx = mpmath.MPContext()
        self.ctx.dps = dps
        self.eps = self.ctx.eps
        self.inf = self.ctx.inf
        self.num = self.ctx.mpf
        self.exp = self.ctx.exp
        self.log = self.ctx.log
        self.fsum = self.ctx.fsum

    def start_term(self, x):
        return self.ctx.exp(-x)


class _GammaTable:
    """Regularised ``Q_n(x) = P{Poisson(x) <= n}`` and ``P_n = 1 - Q_n``."""

    def __init__(self, ar, x, n_max: int):
        zero, one = ar.num(0), ar.num(1)
        if x == 0:
            self.q = [one] * (n_max + 1)
            self.p = [zero] * (n_max + 1)
            return
        if x == ar.inf:
            self.q = [zero] * (n_max + 1)
            self.p = [one] * (n_max + 1)
            return
        t0 = ar.start_term(x)
        if t0 is None:
            logx = math.log(x)
            terms = [math.exp(-x + l * logx - math.lgamma(l + 1)) for l in range(n_max + 1)]
        else:
            terms = [t0]
            for l in range(1, n_max + 1):
                terms.append(terms[-1] * x / l)
        q, acc = [], zero
        for t in terms:
            acc += t
            q.append(acc)
        p = [None] * (n_max + 1)
        if q[-1] > 0.5:
            # Poisson tail beyond n_max, needed where 1 - Q_n would cancel
            tail, t, l = [], terms[-1], n_max
            while True:
                l += 1
                t = t * x / l
                tail.append(t)
                if l > x and t < ar.eps * q[-1]:
                    break
            suffix = ar.fsum(tail)
            for n in range(n_max, -1, -1):
                p[n] = suffix
                suffix += terms[n]
        for n in range(n_max + 1):
            if q[n] <= 0.5 or p[n] is None:
                p[n] = one - q[n]
        self.q, self.p = q, p


class _Evaluator:
    """Truncated gamma integrals ``J = int_x0^x1 e^(-lam b) b^n db``."""

    def __init__(self, ar, n_max: int):
        self.ar = ar
        self.n_max = n_max
        self.fact = [ar.num(math.factorial(n)) for n in range(n_max + 1)]
        self._tables: dict = {}

    def table(self, x) -> _GammaTable:
        tab = self._tables.get(x)
        if tab is None:
            tab = self._tables[x] = _GammaTable(self.ar, x, self.n_max)
        return tab

    def J(self, lam, n: int, x0, x1):
        """Value and a magnitude bound for its rounding error."""
        g0, g1 = self.table(lam * x0), self.table(lam * x1)
        q0, q1, p0, p1 = g0.q[n], g1.q[n], g0.p[n], g1.p[n]
        scale = self.fact[n] / lam ** (n + 1)
        if q0 <= p1:
            return scale * (q0 - q1), scale * q0
        return scale * (p1 - p0), scale * p1


@lru_cache(maxsize=None)
def _sector_weight(n_beams: int, k: int, i: int) -> int:
    """``sum_{t=1}^{k} C(N-1, t-1) (-1)^(t+1) (1-t)^i``, exactly."""
    return sum(math.comb(n_beams - 1, t - 1) * (-1) ** (t + 1) * (1 - t) ** i for t in range(1, k + 1))


# -- closed form -----------------------------------------------------------------

@dataclass
class ClosedFormTerms:
    b_points: list[float]
    m: int
    m_eff: int
    terms: dict[str, float] = field(default_factory=dict)
    total: float = 0.0
    error_bound: float = 0.0
    digits: int = 16


def threshold_index(threshold: float) -> int:
    """Smallest integer ``m`` with ``1/m <= T``, i.e. ``ceil(1/T)`` exactly."""
    m = max(1, math.ceil(1.0 / threshold))
    while m > 1 and (m - 1) * threshold >= 1.0:
        m -= 1
    while m * threshold < 1.0:
        m += 1
    return m


def _b_point(ar, k: int, n_beams: int, rho, threshold):
    kt = k * threshold
    if not kt < 1.0:
        raise DegenerateBreakpoint(f"b_{k} undefined: 1/{k} <= T = {threshold}")
    t, r = ar.num(threshold), ar.num(rho)
    return t * n_beams * k / (r * (1 - ar.num(k) * t))


def b_point(k: int, config: SystemConfig) -> float:
    """Where ``a = T (N/rho + b)`` meets the ray ``a = b/k``."""
    return _b_point(_Float, k, config.n_beams, config.rho, config.threshold)


def _low_threshold_terms(ar, n_beams: int, rho: float, threshold: float):
    N = n_beams
    T, r = ar.num(threshold), ar.num(rho)
    c = ar.num(N) / r
    m = threshold_index(threshold)
    last_full = m - 1 if m <= N - 1 else N - 1
    b = [ar.num(0)] + [_b_point(ar, k, N, rho, threshold) for k in range(1, last_full + 1)]
    ev = _Evaluator(ar, 2 * N)
    inf = ar.inf
    lam_line = T + 1
    line_decay = ar.exp(-T * c)
    prefactor = ar.num(N) / ev.fact[N - 2]
    c_pow = [c ** j for j in range(N)]
    t_pow = [T ** j for j in range(N)]
    mags: list = []
    terms: dict[str, object] = {}

    def sector(k, lower, x0, x1):
        """Sector-k mass between ``lower`` and the ray ``a = b/(k-1)``, b in [x0, x1].

        ``lower`` is ``"line"`` for ``a = T(c + b)`` or ``"ray"`` for ``a = b/k``.
        """
        n_top = 2 * N - 2
        out_j = [ev.J(ar.num(k) / (k - 1), n, x0, x1) for n in range(n_top + 1)]
        if lower == "line":
            low_j = [ev.J(lam_line, n, x0, x1) for n in range(N - 1)]
        else:
            low_j = [ev.J(ar.num(k + 1) / k, n, x0, x1) for n in range(n_top + 1)]
        inv_k = 1 / ar.num(k)
        inv_k1 = 1 / ar.num(k - 1)
        summands, smags = [], []
        for i in range(N - 1):
            weight = _sector_weight(N, k, i)
            if weight == 0:
                continue
            coef = ar.num(N * weight) / ev.fact[N - 2 - i]
            acoef = abs(coef)
            n0 = N - i - 2
            for l in range(i + 1):
                inv_l = 1 / ev.fact[l]
                if lower == "line":
                    # (c + b)^l expanded binomially against e^{-(T+1)b} b^n0
                    vals, ms = [], []
                    for v in range(l + 1):
                        w = math.comb(l, v) * c_pow[l - v]
                        val, mag = low_j[n0 + v]
                        vals.append(w * val)
                        ms.append(w * mag)
                    f = line_decay * t_pow[l] * inv_l
                    first, first_mag = f * ar.fsum(vals), f * ar.fsum(ms)
                else:
                    val, mag = low_j[n0 + l]
                    f = inv_l * inv_k ** l
                    first, first_mag = f * val, f * mag
                val, mag = out_j[n0 + l]
                f = inv_l * inv_k1 ** l
                summands.append(coef * (first - f * val))
                smags.append(acoef * (first_mag + f * mag))
        mags.extend(smags)
        return ar.fsum(summands)

    # sector 1 has density N/(N-2)! e^{-(a+b)} b^(N-2)
    c1, c1m = ev.J(lam_line, N - 2, ar.num(0), b[1])
    c2, c2m = ev.J(ar.num(2), N - 2, b[1], inf)
    terms["Pdl_1"] = prefactor * (line_decay * c1 + c2)
    mags.append(prefactor * (line_decay * c1m + c2m))
    for k in range(2, last_full + 1):
        terms[f"Pdl_{k}"] = sector(k, "line", b[k - 1], b[k]) + sector(k, "ray", b[k], inf)
    if m <= N - 1:
        terms["Pdl_m"] = sector(m, "line", b[m - 1], inf)
    total = ar.fsum(list(terms.values()))
    error = (4 * N + 16) * ar.eps * ar.fsum(mags)
    return b[1:], m, min(m, N - 1), terms, total, error


@lru_cache(maxsize=4096)
def _closed_form_cached(n_beams: int, rho: float, threshold: float) -> ClosedFormTerms:
    m = threshold_index(threshold)
    if n_beams == 1:
        return ClosedFormTerms([], m, 1, {"Pdl_1": math.exp(-threshold / rho)}, math.exp(-threshold / rho))
    if threshold >= 1.0:
        value = n_beams / (threshold + 1.0) ** (n_beams - 1) * math.exp(-threshold * n_beams / rho)
        return ClosedFormTerms([], m, 1, {"Pdl_1": value}, value)
    if n_beams > MAX_BEAMS_LOW_THRESHOLD:
        raise NumericalInstability(f"closed form for T < 1 supports N <= {MAX_BEAMS_LOW_THRESHOLD}")

    ar, dps = _Float, 16
    while True:
        b_pts, m, m_eff, terms, total, error = _low_threshold_terms(ar, n_beams, rho, threshold)
        if total > 0 and error <= REL_ERROR_LIMIT * total:
            break
        if total > 0 and error > 0:
            lost = math.log10(float(error / total) / float(ar.eps))
            new_dps = int(dps + 1.2 * max(lost - 8, 0)) + 20
        else:
            new_dps = 2 * dps + 30
        if dps >= _MAX_DPS:
            raise NumericalInstability(
                f"closed form lost precision for N={n_beams}, T={threshold}, rho={rho}"
            )
        dps = min(max(new_dps, dps + 10), _MAX_DPS)
        ar = _Mp(dps)
    return ClosedFormTerms(
        [float(x) for x in b_pts],
        m,
        m_eff,
        {k: float(v) for k, v in terms.items()},
        float(total),
        float(error),
        dps,
    )


def closed_form_terms(config: SystemConfig) -> ClosedFormTerms:
    """Per-sector pieces of the single-antenna coverage."""
    validate(config.replace(n_rx=1, n_slots=1), Scheme.ORP_SA)
    return _closed_form_cached(int(config.n_beams), float(config.rho), float(config.threshold))


def _sa(n_beams: int, rho: float, threshold: float) -> float:
    p = _closed_form_cached(int(n_beams), float(rho), float(threshold)).total
    if not -1e-12 <= p <= 1 + 1e-12:
        raise NumericalInstability(f"coverage {p} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def coverage_sa(config: SystemConfig) -> float:
    validate(config, Scheme.ORP_SA)
    return _sa(config.n_beams, config.rho, config.threshold)


def cdf_max_sinr(x: float, n_beams: int, rho: float) -> float:
    if not x > 0:
        raise ValueError("x must be positive")
    return 1.0 - _sa(n_beams, rho, x)


def diversity_combine(p: float, copies: int) -> float:
    """``1 - (1 - p)^copies`` without cancellation near 0 or 1."""
    if p >= 1.0:
        return 1.0
    return -math.expm1(copies * math.log1p(-p))


def coverage_as(config: SystemConfig) -> float:
    validate(config, Scheme.ORP_AS)
    return diversity_combine(_sa(config.n_beams, config.rho, config.threshold), config.n_rx)


def coverage_mpg(config: SystemConfig) -> float:
    validate(config, Scheme.ORP_MPG)
    return diversity_combine(_sa(config.n_beams, config.rho, config.threshold), config.n_slots)


def coverage_as_mpg(config: SystemConfig) -> float:
    validate(config, Scheme.ORP_AS_MPG)
    p = _sa(config.n_beams, config.rho, config.threshold)
    return diversity_combine(p, config.n_rx * config.n_slots)


def coverage_stc(n_tx: int, threshold: float, rho: float) -> float:
    """P{(rho/N_t) sum |h_i|^2 > T}; the gain is Gamma(N_t, 1)."""
    if n_tx < 1:
        raise ValueError("n_tx must be >= 1")
    x = n_tx * threshold / rho
    p = _upper_regularized(n_tx - 1, x)
    if not math.isfinite(p):
        raise NumericalInstability(f"STC coverage not finite for n_tx={n_tx}, x={x}")
    return p


def coverage(config: SystemConfig, scheme: Scheme) -> float:
    if scheme is Scheme.STC:
        validate(config, scheme)
        return coverage_stc(config.n_tx, config.threshold, config.rho)
    return {
        Scheme.ORP_SA: coverage_sa,
        Scheme.ORP_AS: coverage_as,
        Scheme.ORP_MPG: coverage_mpg,
        Scheme.ORP_AS_MPG: coverage_as_mpg,
    }[scheme](config)


def optimal_beam_count(threshold: float, rho: float, n_max: int, tie_tol: float = 1e-10) -> tuple[int, float]:
    """Beam count in 1..n_max maximising single-antenna coverage.

    Values within ``tie_tol`` of the best so far count as ties and keep the
    smaller ``N``; near ``P = 1`` the closed form is only accurate to about
    1e-11 and would otherwise pick the maximiser by rounding noise.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    best_n, best_p = 1, _sa(1, rho, threshold)
    for n in range(2, n_max + 1):
        p = _sa(n, rho, threshold)
        if p > best_p + tie_tol:
            best_n, best_p = n, p
    return best_n, best_p
