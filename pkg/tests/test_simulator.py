import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from orpcov import analytic, randgen, simulator
from orpcov.core import SchemeShapeMismatch, Scheme, SystemConfig
from orpcov.randgen import ChannelMatrix, PrecoderMatrix, substream


def test_beam_sinrs_examples():
    p = np.eye(4, dtype=complex)[:, :1]
    h = np.zeros(4, dtype=complex)
    h[0] = 1.0
    assert simulator.beam_sinrs(h, p, 1, 2.0)[0] == pytest.approx(2.0)

    p2 = np.eye(2, dtype=complex)
    assert simulator.beam_sinrs(np.ones(2, dtype=complex), p2, 2, 1.0) == pytest.approx([1 / 3, 1 / 3])


def test_beam_sinrs_bookkeeping():
    seed = substream(0, 3)
    h = randgen.sample_channel(1, 32, seed).entries[0]
    p = randgen.sample_precoder(32, 6, seed).columns
    a = [abs(sum(h[i] * p[i, n] for i in range(32))) ** 2 for n in range(6)]
    expected = [a[n] / (6 + math.fsum(a[:n] + a[n + 1:])) for n in range(6)]
    np.testing.assert_allclose(simulator.beam_sinrs(h, p, 6, 1.0), expected, rtol=1e-12)


def _instance(n_rx, n_tx, n, d, seed=0):
    s = substream(seed, 0)
    return randgen.sample_channel(n_rx, n_tx, s), randgen.sample_precoder(n_tx, n * d, s, n_beams=n)


def test_max_sinr_brute_force():
    cfg = SystemConfig(16, n_rx=4, n_beams=3, n_slots=2, rho=1.5, threshold=1.0)
    h, p = _instance(4, 16, 3, 2)
    best = 0.0
    for n, r, d in itertools.product(range(3), range(4), range(2)):
        g = p.group(d)
        a = [abs(h.entries[r] @ g[:, j]) ** 2 for j in range(3)]
        best = max(best, a[n] / (3 / 1.5 + sum(a) - a[n]))
    assert simulator.max_sinr(h, p, cfg, Scheme.ORP_AS_MPG) == pytest.approx(best, rel=1e-12)


def test_max_sinr_duplicate_rows_and_slot_split():
    h, p = _instance(1, 8, 2, 2, seed=4)
    dup = ChannelMatrix(np.vstack([h.entries, h.entries]))
    one = PrecoderMatrix(p.group(0), 2)
    sa = simulator.max_sinr(h, one, SystemConfig(8, n_beams=2), Scheme.ORP_SA)
    assert simulator.max_sinr(dup, one, SystemConfig(8, n_rx=2, n_beams=2), Scheme.ORP_AS) == sa
    per_slot = [simulator.max_sinr(h, PrecoderMatrix(p.group(d), 2), SystemConfig(8, n_beams=2), Scheme.ORP_SA) for d in (0, 1)]
    assert simulator.max_sinr(h, p, SystemConfig(8, n_beams=2, n_slots=2), Scheme.ORP_MPG) == max(per_slot)


def test_max_sinr_validates():
    h, p = _instance(2, 8, 2, 1)
    with pytest.raises(SchemeShapeMismatch):
        simulator.max_sinr(h, p, SystemConfig(8, n_rx=2, n_beams=2), Scheme.ORP_SA)


def test_stc_snr():
    assert simulator.stc_snr(ChannelMatrix(np.ones((1, 5), dtype=complex)), 5, 1.0) == 1.0


def test_block_matches_single_instance():
    # the vectorised path and the one-instance path see the same numbers
    cfg = SystemConfig(8, n_rx=2, n_beams=2, n_slots=2, rho=1.0, threshold=1.0)
    stat = simulator.decision_samples(cfg, Scheme.ORP_AS_MPG, 3, 17)
    seed = substream(17, 0)
    h = randgen.channel_batch(2, 8, simulator.BLOCK_TRIALS, seed)
    p = randgen.precoder_batch(8, 4, simulator.BLOCK_TRIALS, seed)
    for t in range(3):
        v = simulator.max_sinr(ChannelMatrix(h[t]), PrecoderMatrix(p[t], 2, 2), cfg, Scheme.ORP_AS_MPG)
        assert stat[t] == pytest.approx(v, rel=1e-12)


def test_bookkeeping_identities():
    n = simulator.BLOCK_TRIALS
    a = simulator.power_block(1, 16, 6, 2, 0, n)[:, 0, :]
    amax, bmin = simulator.amax_bmin_samples(16, 6, n, 2)
    np.testing.assert_array_equal(amax, a.max(axis=1))
    np.testing.assert_allclose(amax + bmin, a.sum(axis=1), rtol=1e-14)
    assert np.all(bmin <= 5 * amax)


def test_coverage_estimate_ci():
    e = simulator.CoverageEstimate.from_count(250, 1000, 0)
    assert e.p_hat == 0.25
    assert e.ci_half_width == pytest.approx(1.96 * math.sqrt(0.25 * 0.75 / 1000))
    assert simulator.CoverageEstimate.from_count(0, 10, 0).ci_half_width == 0.0


def test_n1_closed_form():
    e = simulator.estimate_coverage(SystemConfig(32, rho=1.0, threshold=1.0), Scheme.ORP_SA, 10**6, 1)
    assert abs(e.p_hat - math.exp(-1)) < 0.0015


def test_stc_statistics():
    cfg = SystemConfig(64, rho=0.631, threshold=0.631)
    snr = simulator.stc_snr_samples(cfg, 10**6, 3)
    assert (snr / cfg.rho).mean() == pytest.approx(1.0, abs=0.005)
    p = np.mean(snr > cfg.threshold)
    assert abs(p - 0.48) <= 0.01
    assert abs(p - analytic.coverage_stc(64, 0.631, 0.631)) <= 3 * 1.96 * math.sqrt(p * (1 - p) / 10**6)
    # the STC statistic ignores D
    other = simulator.stc_snr_samples(cfg.replace(n_slots=7), 1000, 3)
    np.testing.assert_array_equal(other, snr[:1000])


def test_scheme_dominance():
    base = SystemConfig(16, n_rx=3, n_beams=2, n_slots=3, rho=1.0, threshold=0.8)
    specs = [
        (base.replace(n_rx=1, n_slots=1), Scheme.ORP_SA),
        (base.replace(n_slots=1), Scheme.ORP_AS),
        (base.replace(n_rx=1), Scheme.ORP_MPG),
        (base, Scheme.ORP_AS_MPG),
    ]
    sa, as_, mpg, both = simulator.estimate_many(specs, 20000, 8)
    assert both.p_hat >= as_.p_hat >= sa.p_hat
    assert both.p_hat >= mpg.p_hat >= sa.p_hat


def test_shared_draws_match_single_runs():
    cfg = SystemConfig(16, n_beams=3, rho=1.0, threshold=0.4)
    alone = simulator.estimate_coverage(cfg, Scheme.ORP_SA, 5000, 6)
    wide = simulator.estimate_many([(cfg, Scheme.ORP_SA), (cfg.replace(n_beams=9), Scheme.ORP_SA)], 5000, 6)[0]
    # prefix columns of a wider QR agree up to rounding, so counts agree
    assert abs(alone.p_hat - wide.p_hat) <= 2 / 5000


@pytest.mark.parametrize("threads", [2, 4])
def test_thread_independence(threads):
    cfg = SystemConfig(8, n_rx=2, n_beams=2, n_slots=2, rho=1.0, threshold=0.5)
    trials = 3 * simulator.BLOCK_TRIALS + 17
    a = simulator.decision_samples(cfg, Scheme.ORP_AS_MPG, trials, 5, threads=1)
    b = simulator.decision_samples(cfg, Scheme.ORP_AS_MPG, trials, 5, threads=threads)
    np.testing.assert_array_equal(a, b)


@given(st.integers(1, 3 * simulator.BLOCK_TRIALS))
def test_trial_prefix_stability(trials):
    cfg = SystemConfig(4, n_beams=2, rho=1.0, threshold=0.5)
    full = simulator.decision_samples(cfg, Scheme.ORP_SA, 3 * simulator.BLOCK_TRIALS, 1)
    part = simulator.decision_samples(cfg, Scheme.ORP_SA, trials, 1)
    np.testing.assert_array_equal(part, full[:trials])


def test_projected_sampler_law():
    cfg = SystemConfig(12, n_rx=3, n_beams=2, n_slots=2, rho=1.0, threshold=0.5)
    a = simulator.decision_samples(cfg, Scheme.ORP_AS_MPG, 100_000, 1, sampler="explicit")
    b = simulator.decision_samples(cfg, Scheme.ORP_AS_MPG, 100_000, 2, sampler="projected")
    assert stats.ks_2samp(a, b).pvalue > 1e-3
    p = analytic.coverage_as_mpg(cfg)
    est = simulator.estimate_coverage(cfg, Scheme.ORP_AS_MPG, 100_000, 3, sampler="projected")
    assert abs(est.p_hat - p) <= 3 * est.ci_half_width


def test_projected_beam_powers_exponential():
    a = simulator.power_block(2, 40, 30, 0, 0, 2048, sampler="projected")
    assert stats.kstest(a.ravel(), "expon").pvalue > 1e-3


def test_block_size_guard():
    with pytest.raises(ValueError):
        simulator.power_block(1, 4, 2, 0, 0, simulator.BLOCK_TRIALS + 1)


def test_unknown_sampler():
    with pytest.raises(ValueError):
        simulator.power_block(1, 4, 2, 0, 0, 10, sampler="fast")


def test_bad_trials():
    with pytest.raises(ValueError):
        simulator.estimate_coverage(SystemConfig(4), Scheme.ORP_SA, 0)
