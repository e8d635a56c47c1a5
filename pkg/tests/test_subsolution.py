import numpy as np
import pytest

from flimks.problem import make_setup
from flimks.profile import ConstraintViolation, PhiProfile, Side
from flimks.subsolution import (ExtinctionReached, SubsolutionParams, B_of_t, coeffs,
                                gradient_witness, matching_residuals, w_lower, w_lower_s,
                                w_lower_ss, w_lower_t)


@pytest.fixture
def simple_params():
    setup = make_setup(1, 1.0, 2.0, 2.0)
    params = SubsolutionParams.build(PhiProfile(0.9), K=2.0, delta=0.1, B0=0.04,
                                     kappa=0.1, c1=0.2, setup=setup)
    return params, setup


def test_extinction_time(simple_params):
    params, _ = simple_params
    assert params.T_ext == pytest.approx(4.0, rel=1e-14)
    B, _ = B_of_t(params, 1, 0.0)
    assert B == pytest.approx(0.04, rel=1e-15)


def test_B_solves_its_ode(params_1d, params_2d):
    for params in (params_1d, params_2d):
        n = params.n
        t = np.linspace(0.0, 0.9, 1000) * params.T_ext
        B, Bprime = B_of_t(params, n, t)
        assert np.max(np.abs(Bprime + params.kappa * B ** (1.0 - 1.0 / (2 * n)))) <= 1e-12 * params.kappa
        h = 1e-4 * params.T_ext
        mid = t[1:-1]
        fd = (B_of_t(params, n, mid + h)[0] - B_of_t(params, n, mid - h)[0]) / (2 * h)
        assert np.allclose(fd, Bprime[1:-1], rtol=1e-5)


def test_extinction_is_reported(simple_params):
    params, setup = simple_params
    with pytest.raises(ExtinctionReached):
        B_of_t(params, 1, params.T_ext)
    with pytest.raises(ExtinctionReached):
        coeffs(params, setup, np.array([0.0, 5.0]))
    with pytest.raises(ValueError):
        B_of_t(params, 1, -1.0)


def test_build_reports_violations():
    setup = make_setup(1, 1.0, 2.0, 2.0)
    with pytest.raises(ConstraintViolation) as info:
        SubsolutionParams.build(PhiProfile(0.5), K=0.9, delta=0.1, B0=0.5, kappa=0.1, c1=0.1, setup=setup)
    names = [row[0] for row in info.value.report]
    assert "K > 1" in names
    with pytest.raises(ValueError):
        SubsolutionParams.build(PhiProfile(0.5), K=2.0, delta=0.1, B0=0.01, kappa=0.0, c1=0.1, setup=setup)


def test_mismatched_setup_rejected(params_1d):
    with pytest.raises(ValueError, match="does not match"):
        coeffs(params_1d, make_setup(1, 1.0, 2.0, 3.0), 0.0)


@pytest.mark.parametrize("which", ["1d", "2d"])
def test_coefficient_identities(which, request):
    params = request.getfixturevalue(f"params_{which}")
    setup = request.getfixturevalue(f"setup_{which}")
    t = np.linspace(0.0, 0.99, 1000) * params.T_ext
    tc = coeffs(params, setup, t)
    assert np.allclose(tc.E + setup.R_n * tc.D, setup.mass_level, rtol=1e-12)
    assert np.all(tc.N > 0)
    assert np.all(tc.Aprime <= 0)
    assert np.all(tc.A >= params.A_T * (1.0 - 1e-12))
    assert np.all(tc.A <= setup.mass_level)


def test_A_tends_to_A_T(params_2d, setup_2d):
    tc = coeffs(params_2d, setup_2d, params_2d.T_ext * (1.0 - 1e-9))
    assert tc.A == pytest.approx(params_2d.A_T, rel=1e-6)


@pytest.mark.parametrize("which", ["1d", "2d"])
def test_time_derivatives_match_finite_differences(which, request):
    params = request.getfixturevalue(f"params_{which}")
    setup = request.getfixturevalue(f"setup_{which}")
    t = np.linspace(0.1, 0.8, 50) * params.T_ext
    h = 1e-4 * params.T_ext
    tc = coeffs(params, setup, t)
    plus = coeffs(params, setup, t + h)
    minus = coeffs(params, setup, t - h)
    assert np.allclose((plus.A - minus.A) / (2 * h), tc.Aprime, rtol=1e-6)
    assert np.allclose((plus.D - minus.D) / (2 * h), tc.Dprime, rtol=1e-6)


@pytest.mark.parametrize("which", ["1d", "2d"])
def test_boundary_and_junction_values(which, request):
    params = request.getfixturevalue(f"params_{which}")
    setup = request.getfixturevalue(f"setup_{which}")
    for frac in (0.0, 0.3, 0.9):
        t = frac * params.T_ext
        tc = coeffs(params, setup, t)
        assert w_lower(params, setup, 0.0, t) == 0.0
        assert w_lower(params, setup, setup.R_n, t) == pytest.approx(setup.mass_level, rel=1e-12)
        assert w_lower(params, setup, tc.B, t) == pytest.approx(params.lam * tc.A, rel=1e-12)


def test_lower_profile_is_monotone(params_2d, setup_2d):
    s = np.linspace(0.0, setup_2d.R_n, 20001)
    for frac in (0.0, 0.5, 0.95):
        w = w_lower(params_2d, setup_2d, s, frac * params_2d.T_ext)
        assert np.all(np.diff(w) >= 0)
        assert np.all(w_lower_s(params_2d, setup_2d, s, frac * params_2d.T_ext) >= 0)


@pytest.mark.parametrize("which", ["1d", "2d"])
def test_branches_match_at_junction(which, request):
    params = request.getfixturevalue(f"params_{which}")
    setup = request.getfixturevalue(f"setup_{which}")
    t = np.linspace(0.0, 0.99, 100) * params.T_ext
    value, slope, tderiv = matching_residuals(params, setup, t)
    assert np.max(value) <= 1e-12
    assert np.max(slope) <= 1e-12
    assert np.max(tderiv) <= 1e-8


def test_second_derivative_side_at_kinks(params_2d, setup_2d):
    t = 0.2 * params_2d.T_ext
    tc = coeffs(params_2d, setup_2d, t)
    left = w_lower_ss(params_2d, setup_2d, tc.B, t, Side.LEFT)
    right = w_lower_ss(params_2d, setup_2d, tc.B, t, Side.RIGHT)
    assert left > 0 > right
    s_join = params_2d.K * np.sqrt(tc.B)
    assert w_lower_ss(params_2d, setup_2d, s_join, t, Side.RIGHT) == 0.0
    assert w_lower_ss(params_2d, setup_2d, s_join, t, Side.LEFT) < 0


def test_time_derivative_matches_finite_differences(params_2d, setup_2d):
    t = 0.4 * params_2d.T_ext
    h = 1e-5 * params_2d.T_ext
    tc = coeffs(params_2d, setup_2d, t)
    # stay clear of the kink lines, which move with t
    s = np.concatenate([tc.B * np.linspace(0.1, 0.8, 8),
                        tc.B * np.geomspace(1.5, 0.5 * params_2d.K / np.sqrt(tc.B), 8),
                        np.linspace(0.1, 0.9, 8)])
    fd = (w_lower(params_2d, setup_2d, s, t + h) - w_lower(params_2d, setup_2d, s, t - h)) / (2 * h)
    assert np.allclose(fd, w_lower_t(params_2d, setup_2d, s, t), rtol=1e-5, atol=1e-12)


def test_gradient_witness_grows(params_1d, setup_1d):
    t = np.linspace(0.0, 0.99, 200) * params_1d.T_ext
    witness = gradient_witness(params_1d, setup_1d, t)
    assert np.all(np.diff(witness) > 0)


def test_pointwise_needs_scalar_time(params_1d, setup_1d):
    with pytest.raises(ValueError):
        w_lower(params_1d, setup_1d, 0.1, np.array([0.0, 0.1]))
    with pytest.raises(ValueError):
        w_lower(params_1d, setup_1d, 1.5, 0.0)
