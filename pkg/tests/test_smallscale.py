import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import j0

from rischannel.smallscale import (ChannelSeries, FadingScenario, Ray, SamplingError, SubChannels, cascaded_channel,
                                   channel_metrics, co_phased_theta, condition_number, doppler_spread,
                                   effective_rank, hardening_statistics, keyhole_channel, rayleigh_links,
                                   reciprocity_check, ring_scenario, ris_scenario, rms_delay_spread,
                                   simulate_time_varying_channel, temporal_acf, unit_links)


def cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


# --- composition --------------------------------------------------------------

def test_cascaded_scalar():
    sub = SubChannels(np.zeros((1, 1)), np.array([[2 - 1j]]), np.array([[0.5 + 3j]]), np.array([1.0]))
    assert cascaded_channel(sub)[0, 0] == pytest.approx((2 - 1j) * (0.5 + 3j))


def test_co_phasing_reaches_coherent_sum():
    rng = np.random.default_rng(0)
    Q = 32
    g, h = cn(rng, (Q, 1)), cn(rng, (1, Q))
    theta = np.exp(-1j * (np.angle(h[0]) + np.angle(g[:, 0])))
    H = cascaded_channel(SubChannels(np.zeros((1, 1)), g, h, theta))
    assert abs(H[0, 0]) == pytest.approx(np.sum(np.abs(h[0]) * np.abs(g[:, 0])), rel=1e-12)
    np.testing.assert_allclose(co_phased_theta(g[:, 0], h[0]), theta)


def test_random_phase_power_is_q():
    rng = np.random.default_rng(1)
    Q, draws = 256, 10_000
    g, h = cn(rng, (draws, Q)), cn(rng, (draws, Q))
    theta = np.exp(2j * np.pi * rng.uniform(size=(draws, Q)))
    H = np.sum(h * theta * g, axis=1)
    assert np.mean(np.abs(H) ** 2) == pytest.approx(Q, rel=0.05)


def test_subchannel_validation():
    with pytest.raises(ValueError):
        SubChannels(np.zeros((2, 2)), np.zeros((3, 2)), np.zeros((2, 4)), np.ones(3))
    with pytest.raises(ValueError):
        SubChannels(np.zeros((1, 1)), np.zeros((2, 1)), np.zeros((1, 2)), np.array([1.0, 1.5]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), q=st.integers(1, 16), nt=st.integers(1, 4), nr=st.integers(1, 4))
def test_linearity_and_coherent_bound(seed, q, nt, nr):
    rng = np.random.default_rng(seed)
    hd, g, h = cn(rng, (nr, nt)), cn(rng, (q, nt)), cn(rng, (nr, q))
    ta = rng.uniform(0, 0.5, q) * np.exp(1j * rng.uniform(0, 6.3, q))
    tb = rng.uniform(0, 0.5, q) * np.exp(1j * rng.uniform(0, 6.3, q))
    Ha = cascaded_channel(SubChannels(hd, g, h, ta))
    Hb = cascaded_channel(SubChannels(hd, g, h, tb))
    Hab = cascaded_channel(SubChannels(hd, g, h, ta + tb))
    np.testing.assert_allclose(Ha + Hb - hd, Hab, atol=1e-12)
    # triangle inequality per (rx, tx) entry
    bound = np.abs(h) @ np.abs(g)
    assert np.all(np.abs(Ha - hd) <= bound + 1e-12)


def test_keyhole_ranks():
    rng = np.random.default_rng(2)
    a, b = cn(rng, (1, 4)), cn(rng, (1, 3))
    assert effective_rank(keyhole_channel(a, b, np.ones(1))) == 1
    a, b = cn(rng, (5, 4)), cn(rng, (5, 3))
    assert effective_rank(keyhole_channel(a, b, np.exp(1j * rng.uniform(0, 6, 5)))) <= 3
    a1, b1 = cn(rng, 4), cn(rng, 3)
    theta = np.exp(1j * rng.uniform(0, 6, 6))
    H = keyhole_channel(np.tile(a1, (6, 1)), np.tile(b1, (6, 1)), theta)
    np.testing.assert_allclose(H, theta.sum() * np.outer(a1, b1), atol=1e-12)
    assert effective_rank(H) == 1


def test_cascaded_reciprocity():
    rng = np.random.default_rng(3)
    sub = SubChannels(cn(rng, (3, 2)), cn(rng, (5, 2)), cn(rng, (3, 5)), np.exp(1j * rng.uniform(0, 6, 5)))
    rep = reciprocity_check(cascaded_channel, sub, sub.reversed())
    assert rep["max_abs_diff"] < 1e-12      # equal up to matmul summation order


# --- time-varying simulation ------------------------------------------------------

def test_zero_speed_is_constant():
    sc = ring_scenario(speed=0.0, runs=3, snapshots=50)
    h = simulate_time_varying_channel(sc).samples
    assert np.max(np.abs(h - h[:, :1])) == 0.0


def test_single_ray_is_a_tone():
    sc = FadingScenario(2.4e9, 20.0, (Ray(1.0, 0.7),), heading=0.2, runs=2, snapshots=100)
    s = simulate_time_varying_channel(sc)
    h = s.samples[:, :, 0, 0]
    fd = sc.max_doppler * np.cos(0.7 - 0.2)
    np.testing.assert_allclose(np.abs(h), 1.0, atol=1e-12)
    want = h[:, :1] * np.exp(2j * np.pi * fd * s.times)[None, :]
    np.testing.assert_allclose(h, want, atol=1e-9)


def test_sampling_guard():
    with pytest.raises(SamplingError):
        simulate_time_varying_channel(ring_scenario(speed=30.0, sample_interval=1e-3))


def test_bit_for_bit_reproducible():
    a = simulate_time_varying_channel(ris_scenario(runs=20, snapshots=64, seed=9)).samples
    b = simulate_time_varying_channel(ris_scenario(runs=20, snapshots=64, seed=9)).samples
    c = simulate_time_varying_channel(ris_scenario(runs=20, snapshots=64, seed=10)).samples
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()


def test_energy_matches_weights():
    sc = ris_scenario(runs=500, snapshots=64, seed=4)
    h = simulate_time_varying_channel(sc).samples
    assert np.mean(np.abs(h) ** 2) == pytest.approx(sum(r.power for r in sc.rays), rel=0.02)


def test_k_factor_split_and_validation():
    sc = ris_scenario(k_factor=3.0)
    los = sum(r.power for r in sc.rays if r.los)
    assert los == pytest.approx(0.75)
    with pytest.raises(ValueError):
        ris_scenario(k_factor=-1.0)


def test_ring_acf_matches_bessel():
    sc = ring_scenario(runs=500, snapshots=200, seed=2)
    acf = temporal_acf(simulate_time_varying_channel(sc), 80)     # lags up to f_d tau = 5
    tau = np.arange(81) * sc.sample_interval
    assert np.max(np.abs(np.abs(acf) - np.abs(j0(2 * np.pi * sc.max_doppler * tau)))) < 0.05


def test_acf_basics():
    s = simulate_time_varying_channel(ring_scenario(runs=4, snapshots=40, seed=1))
    assert temporal_acf(s, 10)[0] == 1.0
    with pytest.raises(ValueError):
        temporal_acf(s, 40)
    t = np.arange(64) * 1e-3
    tone = ChannelSeries(np.exp(2j * np.pi * 37.0 * t)[None, :, None, None], 1e-3)
    np.testing.assert_allclose(np.abs(temporal_acf(tone, 63)), 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        temporal_acf(ChannelSeries(np.zeros((1, 8, 1, 1), complex), 1e-3), 3)


def test_tracking_raises_acf():
    on = simulate_time_varying_channel(ris_scenario(runs=200, snapshots=300, seed=5, ris_tracking=True))
    off = simulate_time_varying_channel(ris_scenario(runs=200, snapshots=300, seed=5))
    a, b = np.abs(temporal_acf(on, 150)), np.abs(temporal_acf(off, 150))
    assert np.all(a[1:] > b[1:])
    assert doppler_spread(on) < doppler_spread(off)


def test_acf_variance_halves_with_double_runs():
    lags = (10, 30, 60)
    est = {n: [] for n in (40, 80)}
    for rep in range(60):
        for n in est:
            s = simulate_time_varying_channel(ring_scenario(runs=n, snapshots=128, seed=1000 * n + rep))
            est[n].append(np.abs(temporal_acf(s, 60))[list(lags)])
    v1, v2 = (np.var(np.array(est[n]), axis=0) for n in (40, 80))
    ratio = v2 / v1
    # var of the mean halves; 60 repetitions give roughly +-35 % slack on each ratio
    assert np.all((ratio > 0.25) & (ratio < 0.9)), ratio


# --- metrics ---------------------------------------------------------------------

def test_delay_spread():
    assert rms_delay_spread([3e-7], [1.0]) == 0.0
    assert rms_delay_spread([0.0, 2e-7], [1.0, 1.0]) == pytest.approx(1e-7)


def test_rank_improvement():
    rng = np.random.default_rng(8)
    a_los, b_los = np.exp(1j * np.pi * np.sin(0.2) * np.arange(2)), np.exp(1j * np.pi * np.sin(-0.4) * np.arange(2))
    H_los = np.outer(a_los, b_los)
    a_ris, b_ris = np.exp(1j * np.pi * np.sin(1.0) * np.arange(2)), np.exp(1j * np.pi * np.sin(0.7) * np.arange(2))
    H = H_los + 0.3 * np.exp(1j * rng.uniform(0, 6)) * np.outer(a_ris, b_ris)
    s = np.linalg.svd(H, compute_uv=False)
    assert s[1] >= 1e-3 * s[0]
    m = channel_metrics(matrix=H)
    assert m["effective_rank"] == 2
    assert m["condition_number"] == pytest.approx(s[0] / s[1])
    assert channel_metrics(matrix=H_los)["effective_rank"] == 1
    assert condition_number(H_los) > 1e12


def test_doppler_spread_of_ring():
    sc = ring_scenario(runs=100, snapshots=512, seed=1)
    # isotropic scattering: RMS Doppler spread f_d / sqrt(2)
    assert doppler_spread(simulate_time_varying_channel(sc)) == pytest.approx(sc.max_doppler / np.sqrt(2), rel=0.05)
    with pytest.raises(ValueError):
        doppler_spread(ChannelSeries(np.ones((1, 1, 1, 1), complex), 1e-3))
    with pytest.raises(ValueError):
        channel_metrics()


# --- hardening ---------------------------------------------------------------------

def test_unit_links_are_deterministic():
    for s in hardening_statistics([4, 16, 64], runs=100, generator=unit_links):
        assert s["snr_over_q2"] == pytest.approx(1.0)
        assert s["var_ratio"] == 0.0


def test_hardening_rayleigh_cophased():
    stats = hardening_statistics([256, 1024, 4096], runs=1000, seed=1)
    r = [s["snr_over_q2"] for s in stats]
    assert abs(r[-1] - r[0]) / r[0] < 0.05
    # E|h||g| = pi/4 for unit-variance Rayleigh links
    assert r[-1] == pytest.approx((np.pi / 4) ** 2, rel=0.02)
    v = [s["var_ratio"] for s in stats]
    assert v[0] > v[1] > v[2]


def test_hardening_random_phases_grow_linearly():
    stats = hardening_statistics([64, 256, 1024], runs=2000, phases="random", seed=2)
    q = np.array([s["Q"] for s in stats], float)
    m = np.array([s["mean_snr"] for s in stats])
    slope = np.polyfit(np.log(q), np.log(m), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.1)
    assert stats[-1]["snr_over_q2"] < stats[0]["snr_over_q2"]


def test_hardening_guards():
    with pytest.raises(ValueError):
        hardening_statistics([8], runs=50)
    with pytest.raises(ValueError):
        hardening_statistics([8], phases="bogus")
