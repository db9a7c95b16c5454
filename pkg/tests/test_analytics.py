"""Closed-form kickback statistics against their sampling oracles."""
import numpy as np
import pytest

from phasekick import derive_rng
from phasekick.analytics import (
    dampened_p1,
    exact_parallel_p1,
    forecast,
    mc_parallel_kickback,
    mc_parallel_p1,
    mc_persistent_walk,
    mc_serial_kickback,
    n_eff,
    parallel_moments,
    serial_expected_kickback,
    serial_lowdepth_p1,
    serial_lowdepth_p1_continuous,
    walk_forecast,
)

THETA_DEMO = 0.328827220074  # arcsin(sqrt(0.104286)), the 3-qubit demo model


def test_serial_kickback_zero_noise_is_linear():
    assert serial_expected_kickback(25, 0.0, 0.3) == pytest.approx(2 * 0.3 * 25)


def test_serial_kickback_asymptote_four_effective_operators():
    # 20% noise caps the chain at 4 effective operators
    limit = serial_expected_kickback(10 ** 6, 0.2, 0.3)
    assert limit / (2 * 0.3) == pytest.approx(4.0, abs=1e-6)
    assert n_eff(0.2, "serial") == pytest.approx(4.0)


def test_serial_kickback_against_monte_carlo():
    got = serial_expected_kickback(20, 0.15, 0.3)
    mc = mc_serial_kickback(20, 0.15, 0.3, 10 ** 6, derive_rng(100, 0))
    assert got == pytest.approx(mc, rel=0.02)


def test_serial_kickback_monotone_and_bounded():
    for p in (0.05, 0.1, 0.2, 0.3):
        values = [serial_expected_kickback(n, p, 0.3) for n in range(1, 60)]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
        assert values[-1] <= 2 * 0.3 * (1 - p) / p + 1e-12


def test_n_eff_values():
    assert n_eff(0.2, "parallel", 100) == pytest.approx(80.0)
    assert n_eff(0.0, "parallel", 7) == 7.0
    with pytest.raises(ValueError):
        n_eff(0.0, "serial")
    with pytest.raises(ValueError):
        n_eff(0.1, "sideways")


def test_parallel_moments_zero_noise():
    mean, var = parallel_moments(12, 0.0, 0.4)
    assert mean == pytest.approx(2 * 0.4 * 12)
    assert var == 0.0


def test_parallel_moments_against_monte_carlo():
    mean, var = parallel_moments(50, 0.2, THETA_DEMO)
    mc_mean, mc_var = mc_parallel_kickback(50, 0.2, THETA_DEMO, 10 ** 6,
                                           derive_rng(101, 0))
    assert mean == pytest.approx(mc_mean, rel=0.01)
    assert var == pytest.approx(mc_var, rel=0.01)
    # the retained linear-theta form is far outside what sampling allows
    _, var_linear = parallel_moments(50, 0.2, THETA_DEMO,
                                     variance_form="linear-theta")
    assert abs(var_linear - mc_var) / mc_var > 0.2


def test_parallel_mean_slope():
    slope = [parallel_moments(n, 0.2, THETA_DEMO)[0] for n in (10, 20, 40)]
    assert slope[1] - slope[0] == pytest.approx(2 * THETA_DEMO * 0.8 * 10, abs=1e-12)
    assert slope[2] == pytest.approx(2 * slope[1], abs=1e-9)


def test_dampened_p1_zero_noise_reduces_to_sin_squared():
    for n in (1, 5, 9):
        assert dampened_p1(n, 0.0, 0.41) == pytest.approx(
            np.sin(n * 0.41) ** 2, abs=1e-12)


def test_dampened_p1_against_exact_sum():
    # gap frozen from the exact-sum oracle: 3.24e-3 at (N=30, p=0.2)
    got = dampened_p1(30, 0.2, THETA_DEMO)
    exact = exact_parallel_p1(30, 0.2, THETA_DEMO)
    assert abs(got - exact) == pytest.approx(3.240e-3, abs=2e-4)
    # the plain-exponent form misses the exact sum by far more
    plain = dampened_p1(30, 0.2, THETA_DEMO, exponent_form="plain")
    assert abs(plain - exact) > 10 * abs(got - exact)


def test_dampened_p1_quality_envelope():
    # the skewness of the binomial drifts the oscillation phase by
    # ~kappa_3 (2 theta)^3 / 6, so the approximation quality depends on the
    # angle: tight for small kickback angles, percent-level at the demo
    # model's angle. Both regimes are pinned here.
    small = max(abs(dampened_p1(n, p, 0.08) - exact_parallel_p1(n, p, 0.08))
                for p in (0.05, 0.1, 0.2, 0.3) for n in range(1, 101))
    assert small < 5e-3
    demo = max(abs(dampened_p1(n, p, THETA_DEMO)
                   - exact_parallel_p1(n, p, THETA_DEMO))
               for p in (0.05, 0.1, 0.2, 0.3) for n in range(1, 101))
    assert 0.02 < demo < 0.05


def test_exact_sum_against_monte_carlo():
    exact = exact_parallel_p1(25, 0.15, THETA_DEMO)
    mc = mc_parallel_p1(25, 0.15, THETA_DEMO, 10 ** 6, derive_rng(102, 0))
    assert exact == pytest.approx(mc, abs=3 * np.sqrt(0.25 / 10 ** 6) + 1e-4)


def test_serial_lowdepth_p1_edges():
    assert serial_lowdepth_p1(9, 0.0, 0.37) == pytest.approx(
        np.sin(9 * 0.37) ** 2, abs=1e-12)
    assert serial_lowdepth_p1(9, 1.0, 0.37) == 0.0


def test_serial_lowdepth_continuous_approximates_sum():
    # discretizing the geometric sum as an integral leaves a few-percent
    # offset; the continuous form is a shape reference, not an oracle
    for n in (40, 80, 200):
        exact = serial_lowdepth_p1(n, 0.15, 0.24)
        cont = serial_lowdepth_p1_continuous(n, 0.15, 0.24)
        assert cont == pytest.approx(exact, abs=0.05)
    # at small angles the two agree tightly
    assert serial_lowdepth_p1_continuous(60, 0.1, 0.02) == pytest.approx(
        serial_lowdepth_p1(60, 0.1, 0.02), abs=5e-3)


def test_forecast_bundle():
    f = forecast(30, 0.2, THETA_DEMO, "parallel")
    assert f.mean_angle == pytest.approx(2 * THETA_DEMO * 0.8 * 30)
    assert f.mu == pytest.approx(24.0)
    assert f.sigma == pytest.approx(np.sqrt(30 * 0.16))
    s = forecast(30, 0.2, THETA_DEMO, "serial")
    assert s.n_effective == pytest.approx(4.0)


def test_walk_reduction_at_half():
    f = walk_forecast(10 ** 4, 0.5)
    assert f.d_tilde == pytest.approx(f.d, abs=1e-12)
    with pytest.raises(ValueError):
        walk_forecast(100, 0.0)


def test_walk_drift_zero_at_half():
    assert walk_forecast(50, 0.5, theta=0.3).drift_1q == pytest.approx(0.0)


def test_persistent_walk_against_monte_carlo():
    f = walk_forecast(10 ** 4, 0.1)
    mc = mc_persistent_walk(10 ** 4, 0.1, 20000, derive_rng(103, 0))
    assert f.d_tilde == pytest.approx(mc, rel=0.05)
