import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavbs.channel import (PRESETS, SPEED_OF_LIGHT, AtgEnvironment, RadioConfig, coverage_radius,
                           elevation_angle, fspl, mean_path_loss, p_los, preset, shannon_rate,
                           snr_db)
from uavbs.errors import ConfigError, DomainError

URBAN = AtgEnvironment(9.61, 0.16, 1.0, 20.0, "urban")


def fspl_oracle(d, f):
    return 20 * math.log10(d) + 20 * math.log10(f) + 20 * math.log10(4 * math.pi / 299792458.0)


def test_elevation_angle():
    assert elevation_angle(100, 100) == pytest.approx(45.0)
    assert elevation_angle(100, 0) == pytest.approx(90.0)
    assert elevation_angle(100, 100 * math.sqrt(3)) == pytest.approx(30.0)
    with pytest.raises(DomainError):
        elevation_angle(0, 0)


def test_p_los_values():
    assert p_los(9.61, URBAN) == pytest.approx(1 / (1 + 9.61), abs=1e-12)
    assert p_los(90.0, URBAN) >= 0.9999


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 89.9), st.floats(0.01, 10), st.sampled_from(sorted(PRESETS)))
def test_p_los_monotone_bounded(t, dt, name):
    env = PRESETS[name]
    a, b = p_los(t, env), p_los(min(t + dt, 90.0), env)
    assert 0 < a <= b <= 1
    if b < 1 - 1e-12:  # strict until the sigmoid saturates in float64
        assert a < b


def test_fspl_values():
    assert fspl(1000, 2e9) == pytest.approx(98.46, abs=0.01)
    assert fspl(1000, 2e9) == pytest.approx(fspl_oracle(1000, 2e9), abs=1e-9)
    assert fspl(SPEED_OF_LIGHT / (4 * math.pi * 2e9), 2e9) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(DomainError):
        fspl(0, 2e9)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 1e5), st.floats(1e8, 1e11))
def test_fspl_doubling(d, f):
    assert fspl(2 * d, f) - fspl(d, f) == pytest.approx(20 * math.log10(2), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(1, 1000), st.floats(0, 5000), st.floats(0, 40))
def test_mean_loss_collapses_when_etas_equal(h, r, eta):
    env = AtgEnvironment(9.61, 0.16, eta, eta)
    assert mean_path_loss(h, r, env, 2e9) == pytest.approx(fspl(math.hypot(h, r), 2e9) + eta,
                                                           abs=1e-9)


def test_mean_loss_directly_below():
    p = 1 / (1 + 9.61 * math.exp(-0.16 * (90 - 9.61)))
    want = fspl_oracle(100, 2e9) + p * 1.0 + (1 - p) * 20.0
    assert mean_path_loss(100, 0, URBAN, 2e9) == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_mean_loss_increases_with_range(name):
    vals = mean_path_loss(100.0, np.arange(1.0, 5001.0), PRESETS[name], 2e9)
    assert np.all(np.diff(vals) > 0)


def test_snr_and_rate():
    assert shannon_rate(1e6, 0.0) == pytest.approx(1e6)
    assert shannon_rate(0.0, 25.0) == 0.0
    radio = RadioConfig(tx_power=30, noise_power=-90)
    s = snr_db(100.0, radio)
    assert s == pytest.approx(20.0)
    assert shannon_rate(1e6, s) == pytest.approx(1e6 * math.log2(101), rel=1e-12)
    assert shannon_rate(1e6, s) == pytest.approx(6.658e6, rel=1e-3)


def test_radio_validation():
    with pytest.raises(ConfigError):
        RadioConfig(bandwidth=-1)
    with pytest.raises(ConfigError):
        AtgEnvironment(1, 0, 1, 2)
    with pytest.raises(ConfigError):
        AtgEnvironment(1, 1, 3, 2)
    with pytest.raises(ConfigError):
        preset("nowhere")


def test_radio_defaults_carry_backhaul_constants():
    r = RadioConfig()
    assert r.backhaul_cap == 950e6
    assert r.backhaul_rtt_budget == 5.0


def test_radius_zero_when_threshold_too_tight():
    radio = RadioConfig(pl_threshold=fspl(100, 2e9) - 1)
    assert coverage_radius(100, URBAN, radio) == 0.0


def test_radius_free_space_inverse():
    env = AtgEnvironment(9.61, 0.16, 0.0, 0.0)
    radio = RadioConfig(pl_threshold=fspl(math.hypot(100, 200), 2e9))
    assert coverage_radius(100, env, radio) == pytest.approx(200, abs=0.1)


@pytest.mark.parametrize("name,h,thr", [("urban", 100, 100), ("suburban", 300, 105),
                                        ("high-rise", 500, 110), ("dense-urban", 50, 95)])
def test_radius_matches_radial_scan(name, h, thr):
    env, radio = PRESETS[name], RadioConfig(pl_threshold=thr)
    r = coverage_radius(h, env, radio)
    # 0.05 m scan oracle, loss is increasing in r so the feasible set is [0, r*]
    grid = np.arange(0.0, 20000.0, 0.05)
    ok = grid[mean_path_loss(h, grid, env, radio.carrier) <= thr]
    scan = ok.max() if ok.size else 0.0
    assert abs(r - scan) <= 0.2


@settings(max_examples=60, deadline=None)
@given(st.floats(10, 1000), st.sampled_from(sorted(PRESETS)), st.floats(85, 120))
def test_radius_consistency(h, name, thr):
    env, radio = PRESETS[name], RadioConfig(pl_threshold=thr)
    r = coverage_radius(h, env, radio)
    if r > 0:
        assert mean_path_loss(h, r, env, radio.carrier) <= thr + 0.01
        assert mean_path_loss(h, r + 1.0, env, radio.carrier) > thr - 0.01
