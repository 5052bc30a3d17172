from __future__ import annotations

import math

import numpy as np
import pytest

from slicesim import radio
from slicesim.matching import Matching
from slicesim.radio import PowerAssignment, as_power_table


def _assignment(powers, rbs):
    return PowerAssignment(
        power_mw=np.asarray(powers, dtype=float),
        rb_choice=np.asarray(rbs, dtype=int),
    )


@pytest.fixture
def duo(topo_builder):
    """Two stations of one operator, two slices, hand-picked gains.

    Noise is set to exactly 1 mW so SINR arithmetic in the tests is exact.
    """
    gain = np.zeros((2, 2, 2))
    gain[0, 0] = [3.0, 1.0]  # direct, station 0
    gain[1, 1] = [2.0, 4.0]  # direct, station 1
    gain[0, 1] = [0.5, 0.25]  # station 0 interfering at station 1's user
    gain[1, 0] = [1.5, 0.75]  # station 1 interfering at station 0's user
    return topo_builder(gain, num_mnos=1, noise_dbm=0.0)


def test_sinr_no_interference(topo_builder):
    gain = np.full((1, 1, 1), 1e-6)
    topo = topo_builder(gain, noise_dbm=-120.0)
    pa = _assignment([10.0], [0])
    assert radio.sinr(0, 0, pa, topo) == pytest.approx(1e7, rel=1e-12)


def test_sinr_with_equal_interferer(duo):
    pa = _assignment([1.0, 1.0], [0, 0])  # both on slice 0
    # station 0: direct 3, interference 1.5, noise 1
    assert radio.sinr(0, 0, pa, duo) == pytest.approx(3.0 / 2.5, rel=1e-12)
    # station 1: direct 2, interference 0.5, noise 1
    assert radio.sinr(1, 0, pa, duo) == pytest.approx(2.0 / 1.5, rel=1e-12)


def test_sinr_idle_station_contributes_nothing(duo):
    pa = _assignment([1.0, 0.0], [0, 0])
    assert radio.sinr(0, 0, pa, duo) == pytest.approx(3.0, rel=1e-12)
    assert radio.sinr(1, 0, pa, duo) == 0.0


def test_sinr_different_slices_do_not_interfere(duo):
    pa = _assignment([1.0, 1.0], [0, 1])
    assert radio.sinr(0, 0, pa, duo) == pytest.approx(3.0, rel=1e-12)
    assert radio.sinr(1, 1, pa, duo) == pytest.approx(4.0, rel=1e-12)


def test_rate_fixed_values(duo):
    pa = _assignment([1.0, 1.0], [0, 1])
    # SINR 3 -> 2 bits, SINR 4 -> log2(5)
    assert radio.rate_fixed(0, 0, pa, duo) == pytest.approx(2.0, rel=1e-12)
    assert radio.rate_fixed(1, 1, pa, duo) == pytest.approx(math.log2(5.0), rel=1e-12)
    idle = _assignment([0.0, 1.0], [0, 1])
    assert radio.rate_fixed(0, 0, idle, duo) == 0.0


def test_as_power_table_shapes():
    table = as_power_table(2.0, 3)
    assert table.shape == (3, 2)
    assert np.all(table == 2.0)

    per_station = as_power_table([1.0, 2.0, 3.0], 3)
    assert np.array_equal(per_station[:, 0], [1.0, 2.0, 3.0])
    assert np.array_equal(per_station[:, 0], per_station[:, 1])

    full = as_power_table([[0.0, 1.0], [2.0, 3.0]], 2)
    assert full.shape == (2, 2)
    assert full[1, 0] == 2.0


def test_as_power_table_rejects_bad_input():
    with pytest.raises(ValueError):
        as_power_table([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        as_power_table(-1.0, 2)
    with pytest.raises(ValueError):
        as_power_table(np.ones((2, 3)), 2)


def _expected_rates_by_hand(duo):
    """Longhand enumeration of the four equally likely slice choices."""
    noise = 1.0
    g = duo.gain
    rates = np.zeros((4, 2))
    combos = [(0, 0), (0, 1), (1, 0), (1, 1)]
    for i, (l0, l1) in enumerate(combos):
        inter0 = g[1, 0, l0] if l1 == l0 else 0.0
        inter1 = g[0, 1, l1] if l0 == l1 else 0.0
        rates[i, 0] = math.log2(1.0 + g[0, 0, l0] / (inter0 + noise))
        rates[i, 1] = math.log2(1.0 + g[1, 1, l1] / (inter1 + noise))
    return rates.mean(axis=0)


def test_exact_rates_match_hand_enumeration(duo):
    m = Matching(np.array([0, 0]))  # operator 0 holds both slices
    expected = _expected_rates_by_hand(duo)
    got = radio.mno_rates_exact(0, m, 1.0, duo)
    np.testing.assert_allclose(got, expected, rtol=1e-12)


def test_monte_carlo_tracks_exact_within_noise(duo):
    m = Matching(np.array([0, 0]))
    expected = _expected_rates_by_hand(duo)
    draws = 400
    samples = radio.rate_samples(
        0, m, 1.0, duo, num_draws=draws, rng=np.random.default_rng(123)
    )
    assert samples.shape == (draws,)
    mean0 = radio.rate_expected(
        0, m, 1.0, duo, num_draws=draws, rng=np.random.default_rng(123)
    )
    se = samples.std(ddof=1) / math.sqrt(draws)
    assert abs(mean0 - expected[0]) <= 3.0 * se + 1e-12


def test_rate_expected_single_slice_is_deterministic(topo_builder):
    gain = np.full((1, 1, 1), 3.0)
    topo = topo_builder(gain, noise_dbm=0.0)
    m = Matching(np.array([0]))
    got = radio.rate_expected(0, m, 1.0, topo, num_draws=16, rng=np.random.default_rng(0))
    assert got == pytest.approx(2.0, rel=1e-12)


def test_rate_expected_symmetric_stations(topo_builder):
    # Mirror-symmetric gains: with a shared draw stream both stations see
    # statistically identical worlds, so a common seed gives equal rates.
    gain = np.zeros((2, 2, 2))
    gain[0, 0] = [2.0, 2.0]
    gain[1, 1] = [2.0, 2.0]
    gain[0, 1] = [0.5, 0.5]
    gain[1, 0] = [0.5, 0.5]
    topo = topo_builder(gain, num_mnos=1, noise_dbm=0.0)
    m = Matching(np.array([0, 0]))
    r0 = radio.rate_expected(0, m, 1.0, topo, num_draws=64, rng=np.random.default_rng(5))
    r1 = radio.rate_expected(1, m, 1.0, topo, num_draws=64, rng=np.random.default_rng(5))
    assert r0 == pytest.approx(r1, rel=1e-12)


def test_rate_expected_requires_rng_for_sampling(duo):
    m = Matching(np.array([0, 0]))
    with pytest.raises(ValueError):
        radio.rate_expected(0, m, 1.0, duo, num_draws=8, rng=None)


def test_unassigned_operator_has_zero_rate(duo):
    m = Matching.empty(2)
    report = radio.rate_report(m, 1.0, duo, num_draws=8, rng=np.random.default_rng(1))
    assert report.rate_per_mno[0] == 0.0
    assert np.all(report.rate_per_sbs == 0.0)


def test_rate_report_exact_consistency(duo):
    m = Matching(np.array([0, 0]))
    report = radio.rate_report(m, 1.0, duo, exact=True)
    np.testing.assert_allclose(
        report.rate_per_mno[0], report.rate_per_sbs.sum(), rtol=1e-12
    )
    np.testing.assert_allclose(
        report.rate_per_sbs, _expected_rates_by_hand(duo), rtol=1e-12
    )


def test_more_interferers_lower_rates(topo_builder):
    # One operator, three stations, one slice: every station collides with
    # the others, and zeroing a rival's power can only help the rest.
    rng = np.random.default_rng(17)
    gain = rng.uniform(0.1, 2.0, size=(3, 3, 1))
    topo = topo_builder(gain, num_mnos=1, noise_dbm=0.0)
    m = Matching(np.array([0]))
    busy = radio.rate_report(m, [1.0, 1.0, 1.0], topo, exact=True).rate_per_sbs
    quiet = radio.rate_report(m, [1.0, 1.0, 0.0], topo, exact=True).rate_per_sbs
    assert quiet[0] > busy[0]
    assert quiet[1] > busy[1]


def test_mno_expected_rates_masks_other_operators(topo_builder):
    gain = np.ones((2, 2, 2)) * 0.5
    topo = topo_builder(gain, num_mnos=2, capacities=(1, 1), noise_dbm=0.0)
    m = Matching(np.array([0, 1]))
    rates = radio.mno_expected_rates(
        0, m, 1.0, topo, num_draws=8, rng=np.random.default_rng(2)
    )
    assert rates.shape == (2,)
    assert rates[1] == 0.0
    assert rates[0] > 0.0


def test_exact_enumeration_guard(topo_builder):
    # 9 stations with 5 slices each: 5**9 joint choices exceeds the cap.
    gain = np.full((9, 9, 5), 0.1)
    topo = topo_builder(gain, num_mnos=1, noise_dbm=0.0)
    m = Matching(np.array([0] * 5))
    with pytest.raises(ValueError):
        radio.mno_rates_exact(0, m, 1.0, topo)


def test_monte_carlo_variance_shrinks_with_draws(duo):
    m = Matching(np.array([0, 0]))
    seeds = range(160)

    def spread(num_draws):
        means = [
            radio.rate_expected(
                0, m, 1.0, duo, num_draws=num_draws, rng=np.random.default_rng(1000 + s)
            )
            for s in seeds
        ]
        return np.var(means)

    ratio = spread(32) / spread(128)
    # iid averaging: quadrupling the draws should cut the variance ~4x.
    assert 2.0 < ratio < 8.0
