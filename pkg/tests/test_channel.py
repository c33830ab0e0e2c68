import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iamac_sim.channel import (LinkModel, dbm_to_mw, expected_prr, sinr_db,
                               transitional_region)


@pytest.fixture
def model():
    return LinkModel()


def test_path_loss_reference_distance(model):
    assert model.path_loss(1.0) == pytest.approx(55.0)


def test_path_loss_decade(model):
    assert model.path_loss(10.0) == pytest.approx(55.0 + 40.0)


def test_path_loss_shadow_shift(model):
    assert model.path_loss(model.d0, shadow=7.5) == pytest.approx(62.5)


def test_path_loss_rejects_nonpositive_distance(model):
    with pytest.raises(ValueError):
        model.path_loss(0.0)


def test_snr_closed_forms(model):
    assert model.snr(0.0, 1.0) == pytest.approx(50.0)
    assert model.snr(-8.0, 1.0) == pytest.approx(42.0)


def test_snr_linear_in_tx_power(model):
    base = model.snr(0.0, 7.3)
    assert model.snr(4.0, 7.3) == pytest.approx(base + 4.0)


def test_ber_limits(model):
    assert model.bit_error_rate(80.0) == 0.0
    assert model.bit_error_rate(-300.0) == pytest.approx(0.5)


def test_ber_monotone_sampled(model):
    assert model.bit_error_rate(10.0) > model.bit_error_rate(20.0)


def test_prr_perfect_channel(model):
    assert model.packet_reception_prob(90.0, 500) == 1.0


def test_prr_closed_form():
    # pick the SNR realizing pb = 1e-3 and check (1-1e-3)^360
    m = LinkModel()
    snr_lin = 2.0 * math.log(0.5 / 1e-3) / m.bandwidth_to_rate
    snr = 10.0 * math.log10(snr_lin)
    assert m.packet_reception_prob(snr, 45) == pytest.approx((1 - 1e-3) ** 360, rel=1e-6)


def test_prr_shorter_packets_never_worse(model):
    for snr in (-5.0, 5.0, 10.0, 15.0):
        assert (model.packet_reception_prob(snr, 18)
                >= model.packet_reception_prob(snr, 28))


def test_prr_rejects_zero_length(model):
    with pytest.raises(ValueError):
        model.packet_reception_prob(10.0, 0)


def test_prr_against_bit_flip_oracle(model):
    """Monte-Carlo: flip 8L independent bits at rate pb, compare the
    all-clean frequency within three standard errors."""
    length = 45
    snr = 9.0
    pb = model.bit_error_rate(snr)
    assert 0.0 < pb < 0.1
    rng = np.random.default_rng(42)
    trials = 100_000
    clean = (rng.random((trials, 8 * length)) >= pb).all(axis=1).mean()
    p = model.packet_reception_prob(snr, length)
    se = math.sqrt(p * (1 - p) / trials)
    assert abs(clean - p) < 3 * se + 1e-12


def test_sinr_no_interferers_equals_snr(model):
    wanted = dbm_to_mw(-80.0)
    assert sinr_db(wanted, 0.0, model.noise_mw) == pytest.approx(-80.0 + 105.0)


def test_sinr_equal_power_interferer_hand_sum(model):
    wanted = dbm_to_mw(-80.0)
    expected = -80.0 - 10.0 * math.log10(model.noise_mw + wanted)
    assert sinr_db(wanted, wanted, model.noise_mw) == pytest.approx(expected)
    # wanted and interferer balance: the ratio sits essentially at 0 dB
    assert sinr_db(wanted, wanted, model.noise_mw) == pytest.approx(0.0, abs=0.02)


def test_sinr_noise_equal_interferer_costs_three_db(model):
    wanted = dbm_to_mw(-80.0)
    clean = sinr_db(wanted, 0.0, model.noise_mw)
    degraded = sinr_db(wanted, model.noise_mw, model.noise_mw)
    assert clean - degraded == pytest.approx(10.0 * math.log10(2.0))


def test_sinr_vanishing_interferer_limit(model):
    wanted = dbm_to_mw(-80.0)
    assert sinr_db(wanted, 1e-30, model.noise_mw) == pytest.approx(
        sinr_db(wanted, 0.0, model.noise_mw))


def test_sinr_strictly_below_snr_with_interference(model):
    wanted = dbm_to_mw(-80.0)
    assert sinr_db(wanted, dbm_to_mw(-100.0), model.noise_mw) < sinr_db(
        wanted, 0.0, model.noise_mw)


@given(st.floats(min_value=0.5, max_value=80.0),
       st.floats(min_value=1.0, max_value=100.0))
@settings(max_examples=80, deadline=None)
def test_prr_monotone_in_distance_and_power(power_margin, d):
    m = LinkModel(shadowing_sigma=0.0)
    tx = power_margin - 40.0
    p_near = m.packet_reception_prob(m.snr(tx, d), 45)
    p_far = m.packet_reception_prob(m.snr(tx, d * 1.3), 45)
    p_loud = m.packet_reception_prob(m.snr(tx + 2.0, d), 45)
    assert p_far <= p_near + 1e-12
    assert p_loud >= p_near - 1e-12


def test_transitional_region_zero_sigma_matches_closed_form():
    m = LinkModel(shadowing_sigma=0.0)
    length = 45
    begin, end = transitional_region(m, 0.0, length)

    def crossing(level):
        pb = 1.0 - level ** (1.0 / (8 * length))
        snr_lin = 2.0 * math.log(0.5 / pb) / m.bandwidth_to_rate
        snr = 10.0 * math.log10(snr_lin)
        # snr = tx - pl_d0 - 10 eta log10(d) - noise
        return 10.0 ** ((0.0 - m.pl_d0 - m.noise_floor - snr)
                        / (10.0 * m.path_loss_exponent))

    assert begin == pytest.approx(crossing(0.9), rel=1e-3)
    assert end == pytest.approx(crossing(0.1), rel=1e-3)
    assert begin <= end


def test_transitional_region_degenerate_everything_connected():
    m = LinkModel(shadowing_sigma=0.0)
    begin, end = transitional_region(m, 60.0, 45, d_max=50.0)
    assert begin == end == 50.0


def test_transitional_region_width_recorded():
    """The achieved default-region width is a recorded artifact property."""
    m = LinkModel()
    begin, end = transitional_region(m, 0.0, 45)
    assert 0.0 < begin < end < 40.0


def test_expected_prr_marginalizes_shadowing():
    m = LinkModel(shadowing_sigma=4.0)
    mid = 0.5 * sum(transitional_region(m, 0.0, 45))
    val = expected_prr(m, 0.0, mid, 45)
    assert 0.0 < val < 1.0
    # quadrature against plain Monte-Carlo over shadow draws
    rng = np.random.default_rng(7)
    draws = rng.normal(0.0, m.shadowing_sigma, 20_000)
    mc = np.mean([m.packet_reception_prob(m.snr(0.0, mid, s), 45) for s in draws])
    assert val == pytest.approx(mc, abs=0.01)
