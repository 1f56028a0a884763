"""Channel model: pathloss, gains, SIC, rates, max-min allocation, link budget."""
import math

import numpy as np
import pytest

from nomasched.channel import (
    ChannelParams,
    RateModel,
    derive_tx_power_budget,
    load_staircase,
    maxmin_pair_sinr,
    maxmin_power_allocation,
    pathloss_db,
    rate,
    sample_channel_gain,
    sic_interference_sets,
    sinr,
    virtual_user_rate,
)


def test_pathloss_reference_points():
    assert pathloss_db(100.0) == pytest.approx(90.5, abs=1e-9)
    assert pathloss_db(1000.0) == pytest.approx(128.1, abs=1e-12)
    assert pathloss_db(20.0) == pytest.approx(128.1 + 37.6 * math.log10(0.02), abs=1e-9)


def test_pathloss_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        pathloss_db(0.0)
    with pytest.raises(ValueError):
        pathloss_db(np.array([10.0, -1.0]))


def test_gain_degenerate_is_pure_pathloss():
    params = ChannelParams(shadowing_sigma_db=0.0, fading=False)
    rng = np.random.default_rng(0)
    gain = sample_channel_gain(1000.0, params, rng)
    assert gain == pytest.approx(10.0 ** (-12.81), rel=1e-12)


def test_fading_is_unit_mean():
    params = ChannelParams(shadowing_sigma_db=0.0)
    rng = np.random.default_rng(1)
    gains = sample_channel_gain(1000.0, params, rng, size=1_000_000)
    fading = gains / 10.0 ** (-12.81)
    assert abs(fading.mean() - 1.0) <= 0.01


def test_shadowing_std_matches_parameter():
    params = ChannelParams(fading=False)
    rng = np.random.default_rng(2)
    gains = sample_channel_gain(1000.0, params, rng, size=1_000_000)
    shadow_db = -10.0 * np.log10(gains) - 128.1
    assert abs(shadow_db.std() - 8.0) <= 0.05


def test_sic_sets_two_members():
    assert sic_interference_sets([1.0, 4.0]) == [[1], []]


def test_sic_sets_singleton():
    assert sic_interference_sets([2.5]) == [[]]


def test_sic_sets_three_members():
    assert sic_interference_sets([3.0, 1.0, 2.0]) == [[], [0, 2], [0]]


def test_sic_gain_tie_ranks_lower_index_stronger():
    assert sic_interference_sets([2.0, 2.0]) == [[], [0]]


def test_sinr_reference_cases():
    assert sinr(0, [1.0], [1.0], 1.0) == pytest.approx(1.0)
    assert sinr(0, [2.0, 1.0], [1.0, 4.0], 1.0) == pytest.approx(0.4)
    assert sinr(1, [2.0, 1.0], [1.0, 4.0], 1.0) == pytest.approx(4.0)
    assert sinr(0, [0.0, 1.0], [1.0, 4.0], 1.0) == 0.0
    with pytest.raises(ValueError):
        sinr(0, [1.0], [1.0], 0.0)


def test_rate_models():
    shannon = RateModel(kind="shannon")
    truncated = RateModel(kind="truncated", gamma_max=6.0)
    stairs = RateModel(kind="staircase", thresholds=(1.0, 3.0), rates=(1.0, 2.0))
    assert rate(1.0, shannon) == pytest.approx(1.0)
    assert rate(2.0**10 - 1, truncated) == pytest.approx(6.0)
    assert rate(2.5, stairs) == 1.0
    assert rate(0.5, stairs) == 0.0
    assert rate(3.0, stairs) == 2.0
    with pytest.raises(ValueError):
        RateModel(kind="staircase", thresholds=(), rates=())
    with pytest.raises(ValueError):
        RateModel(kind="staircase", thresholds=(2.0, 1.0), rates=(1.0, 2.0))


def test_staircase_file_loader(tmp_path):
    path = tmp_path / "stairs.txt"
    path.write_text("# thr_db rate\n0.0 1.0\n4.7712125 2.0\n")
    model = load_staircase(path)
    assert model.thresholds[0] == pytest.approx(1.0)
    assert model.thresholds[1] == pytest.approx(3.0, rel=1e-6)
    assert rate(2.5, model) == 1.0
    bad = tmp_path / "bad.txt"
    bad.write_text("3.0 1.0\n1.0 2.0\n")
    with pytest.raises(ValueError):
        load_staircase(bad)
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(ValueError):
        load_staircase(empty)


def test_maxmin_singleton_uses_full_budget():
    alloc = maxmin_power_allocation([2.0], 3.0, 1.0)
    assert alloc.powers == (3.0,)
    assert alloc.common_rate == pytest.approx(math.log2(1.0 + 6.0))


def test_maxmin_pair_matches_closed_form():
    s_star = (-1.25 + math.sqrt(13.5625)) / 2.0
    alloc = maxmin_power_allocation([1.0, 4.0], 3.0, 1.0, tol=1e-12)
    assert alloc.common_sinr == pytest.approx(s_star, abs=1e-9)
    assert alloc.powers[1] == pytest.approx(s_star / 4.0, abs=1e-9)
    assert alloc.powers[0] == pytest.approx(s_star * (s_star + 1.0), abs=1e-8)
    assert maxmin_pair_sinr(4.0, 1.0, 3.0, 1.0) == pytest.approx(s_star, rel=1e-12)


def test_maxmin_budget_vanishes():
    alloc = maxmin_power_allocation([1.0, 4.0], 1e-12, 1.0)
    assert alloc.common_rate <= 1e-10
    assert all(p <= 1e-10 for p in alloc.powers)


def test_maxmin_rejects_bad_inputs():
    with pytest.raises(ValueError):
        maxmin_power_allocation([1.0], 0.0, 1.0)
    with pytest.raises(ValueError):
        maxmin_power_allocation([0.0], 1.0, 1.0)


def test_maxmin_bracket_invariance():
    rng = np.random.default_rng(5)
    for _ in range(50):
        gains = rng.exponential(1.0, size=2) + 1e-6
        a = maxmin_power_allocation(gains, 3.0, 1.0, tol=1e-10)
        expect = maxmin_pair_sinr(max(gains), min(gains), 3.0, 1.0)
        assert a.common_sinr == pytest.approx(expect, abs=1e-8)


def test_maxmin_balances_rates_and_saturates_budget():
    rng = np.random.default_rng(6)
    noise = 1.0
    for _ in range(300):
        k = rng.integers(2, 5)
        gains = rng.exponential(1.0, size=k) + 1e-9
        alloc = maxmin_power_allocation(gains, 3.0, noise, tol=1e-12)
        rates = [math.log2(1.0 + sinr(i, alloc.powers, gains, noise)) for i in range(k)]
        assert max(rates) - min(rates) <= 1e-6
        total = sum(alloc.powers)
        assert 0.0 <= 3.0 - total <= 1e-6


def test_strongest_member_denominator_is_noise_only():
    rng = np.random.default_rng(7)
    for _ in range(200):
        gains = rng.exponential(1.0, size=3) + 1e-9
        powers = rng.uniform(0.1, 1.0, size=3)
        strongest = int(np.argmax(gains))
        expect = powers[strongest] * gains[strongest] / 1.0
        assert sinr(strongest, powers, gains, 1.0) == pytest.approx(expect)


def test_rate_degrades_when_interferer_power_rises():
    gains = [1.0, 4.0, 2.5]
    powers = [1.0, 0.5, 0.8]
    base = sinr(0, powers, gains, 1.0)
    powers_up = [1.0, 0.9, 0.8]
    assert sinr(0, powers_up, gains, 1.0) < base


def test_virtual_user_rate_examples():
    model = RateModel(kind="shannon")
    # singleton reduces to the member rate
    assert virtual_user_rate([3.0], [2.0], 1.0, model) == pytest.approx(math.log2(7.0))
    # equal-SINR allocation gives k * common rate
    alloc = maxmin_power_allocation([1.0, 4.0], 3.0, 1.0, tol=1e-12)
    pair = virtual_user_rate(alloc.powers, [1.0, 4.0], 1.0, model)
    assert pair == pytest.approx(2.0 * alloc.common_rate, abs=1e-6)
    assert pair == pytest.approx(2.296, abs=2e-3)


def test_truncated_bound_holds_for_sampled_vectors():
    model = RateModel(kind="truncated", gamma_max=6.0)
    assert model.vuser_bound(2) == 12.0
    rng = np.random.default_rng(8)
    for _ in range(100):
        gains = rng.exponential(10.0, size=2) + 1e-9
        alloc = maxmin_power_allocation(gains, 3.0, 1e-3)
        total = virtual_user_rate(alloc.powers, gains, 1e-3, model)
        assert total <= 12.0 + 1e-9


def test_link_budget_reference_values():
    params = ChannelParams()
    assert params.noise_power_dbm() == pytest.approx(-95.0, abs=1e-9)
    assert derive_tx_power_budget(params) == pytest.approx(5.5, abs=1e-9)
    assert params.tx_power_budget_dbm() == pytest.approx(5.5, abs=1e-9)
    explicit = ChannelParams(tx_power_dbm=20.0)
    assert explicit.tx_power_budget_dbm() == 20.0
    # zero pathloss, zero target -> budget equals the noise power
    flat = ChannelParams(
        outer_radius_m=1000.0, target_edge_snr_db=0.0
    )
    assert derive_tx_power_budget(flat) == pytest.approx(flat.noise_power_dbm() + 128.1)


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(inner_radius_m=200.0)
    with pytest.raises(ValueError):
        ChannelParams(bandwidth_hz=0.0)
