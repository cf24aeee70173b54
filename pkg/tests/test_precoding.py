import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from conftest import random_channel
from risdim.errors import RankDeficientError
from risdim.precoding import (
    LinkBudget,
    db_to_linear,
    dbm_to_watts,
    snr_closed,
    snr_direct,
    uniform_power,
    waterfill,
    zf_precoder,
)


def budget(k, p=1.0, noise=1.0, alloc=None):
    return LinkBudget(p, noise, uniform_power(k) if alloc is None else alloc)


def test_identity_channel():
    pre = zf_precoder(np.eye(2))
    np.testing.assert_allclose(pre.W, np.eye(2))
    np.testing.assert_allclose(pre.V, np.eye(2))
    np.testing.assert_allclose(snr_closed(np.eye(2), budget(2, p=8.0)), [2.0, 2.0])


def test_diagonal_channel():
    G = np.diag([2.0, 3.0])
    pre = zf_precoder(G)
    np.testing.assert_allclose(pre.V, np.diag([0.5, 1 / 3]))
    np.testing.assert_allclose(pre.W, np.eye(2))
    np.testing.assert_allclose(snr_closed(G, budget(2)), [1.0, 2.25])
    np.testing.assert_allclose(snr_direct(G, pre.W, budget(2)), [1.0, 2.25])


@pytest.mark.parametrize("k", [1, 3, 6])
def test_identity_snr_direct(k):
    rho = 7.0
    g = snr_direct(np.eye(k), zf_precoder(np.eye(k)).W, budget(k, p=rho))
    np.testing.assert_allclose(g, rho / k**2)


def test_rank_deficient_names_ratio():
    G = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]])
    with pytest.raises(RankDeficientError, match="ratio"):
        zf_precoder(G)


def test_dimension_mismatch():
    rng = np.random.default_rng(0)
    G = random_channel(rng, 2, 3)
    with pytest.raises(ValueError):
        snr_direct(G, np.ones((2, 2)), budget(2))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(0, 8), st.integers(0, 2**32 - 1))
def test_direct_equals_closed(k, extra, seed):
    rng = np.random.default_rng(seed)
    G = random_channel(rng, k, k + extra)
    b = budget(k)
    pre = zf_precoder(G)
    direct, closed = snr_direct(G, pre.W, b), snr_closed(G, b)
    np.testing.assert_allclose(direct, closed, rtol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(pre.W, axis=0), 1.0, rtol=1e-12)
    GW = G @ pre.W
    off = GW - np.diag(np.diag(GW))
    assert np.max(np.abs(off), initial=0.0) < 1e-9 * np.linalg.norm(G)


def test_stacked_channels_match_single():
    rng = np.random.default_rng(3)
    Gs = np.stack([random_channel(rng, 3, 5) for _ in range(4)])
    b = budget(3)
    stacked = snr_closed(Gs, b)
    for i in range(4):
        np.testing.assert_allclose(stacked[i], snr_closed(Gs[i], b), rtol=1e-13)


@given(st.floats(1e-3, 1e3), st.integers(0, 1000))
def test_scale_covariance(c, seed):
    rng = np.random.default_rng(seed)
    G = random_channel(rng, 2, 4)
    np.testing.assert_allclose(snr_closed(c * G, budget(2)), c**2 * snr_closed(G, budget(2)), rtol=1e-9)


def test_power_linearity():
    G = random_channel(np.random.default_rng(1), 3, 4)
    W = zf_precoder(G).W
    np.testing.assert_allclose(snr_direct(G, W, budget(3, p=2.0)), 2 * snr_direct(G, W, budget(3)), rtol=1e-14)


# ---- link budget

def test_dbm_conversions():
    assert dbm_to_watts(46) == pytest.approx(39.8107, rel=1e-5)
    assert dbm_to_watts(-96) == pytest.approx(2.51189e-13, rel=1e-5)
    assert db_to_linear(0) == 1.0


def test_budget_validation():
    with pytest.raises(ValueError):
        LinkBudget(1.0, 1.0, [0.5, 0.4])
    with pytest.raises(ValueError):
        LinkBudget(0.0, 1.0, [1.0])
    with pytest.raises(ValueError):
        LinkBudget(1.0, 1.0, [1.5, -0.5])


@given(st.integers(1, 64))
def test_uniform_power(k):
    p = uniform_power(k)
    assert p.shape == (k,) and np.all(p == 1.0 / k)
    assert abs(p.sum() - 1) < 1e-12


def test_uniform_power_examples():
    np.testing.assert_array_equal(uniform_power(1), [1.0])
    np.testing.assert_allclose(uniform_power(5), [0.2] * 5)


# ---- water-filling

def sum_rate(alloc, gains, snr):
    k = len(gains)
    return float(np.sum(np.log2(1 + snr * np.asarray(alloc) * gains / k)))


def test_waterfill_equal_gains():
    np.testing.assert_allclose(waterfill([2.0, 2.0, 2.0], 10.0, 1.0), 1 / 3)


def test_waterfill_zero_gain_gets_nothing():
    np.testing.assert_allclose(waterfill([1.0, 0.0], 10.0, 1.0), [1.0, 0.0])


def test_waterfill_weak_user_dropped():
    alloc = waterfill([1.0, 1e-6], 10.0, 1.0)
    np.testing.assert_allclose(alloc, [1.0, 0.0])


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(0.01, 100))
def test_waterfill_two_user_grid_oracle(g1, g2, snr):
    gains = np.array([g1, g2])
    grid = np.linspace(0, 1, 10_001)
    rates = np.log2(1 + snr * grid * g1 / 2) + np.log2(1 + snr * (1 - grid) * g2 / 2)
    best = grid[np.argmax(rates)]
    alloc = waterfill(gains, snr, 1.0)
    assert sum_rate(alloc, gains, snr) >= rates.max() - 1e-9


@pytest.mark.parametrize("gains,snr", [((1.0, 0.5), 4.0), ((3.0, 0.2), 20.0), ((1.0, 1.1), 0.5), ((5.0, 0.01), 2.0)])
def test_waterfill_two_user_allocation_matches_grid(gains, snr):
    grid = np.linspace(0, 1, 10_001)
    rates = np.log2(1 + snr * grid * gains[0] / 2) + np.log2(1 + snr * (1 - grid) * gains[1] / 2)
    assert abs(waterfill(gains, snr, 1.0)[0] - grid[np.argmax(rates)]) < 1e-3


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(float, st.integers(1, 8), elements=st.floats(1e-4, 1e4)), st.floats(1e-2, 1e3))
def test_waterfill_kkt_and_dominance(gains, snr):
    alloc = waterfill(gains, snr, 1.0)
    assert np.all(alloc >= 0) and abs(alloc.sum() - 1) < 1e-12
    assert sum_rate(alloc, gains, snr) >= sum_rate(uniform_power(len(gains)), gains, snr) - 1e-12
    # active users share one water level; inactive floors lie above it
    k = len(gains)
    floors = k / (snr * gains)
    active = alloc > 0
    levels = alloc[active] + floors[active]
    np.testing.assert_allclose(levels, levels[0], rtol=1e-9)
    if np.any(~active):
        assert np.all(floors[~active] >= levels[0] * (1 - 1e-9))


def test_waterfill_rejects_bad_gains():
    with pytest.raises(ValueError):
        waterfill([0.0, 0.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        waterfill([1.0, -1.0], 1.0, 1.0)
