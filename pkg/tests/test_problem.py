import math

import numpy as np
import pytest

from flimks.problem import (RadialState, accumulate, make_setup, quadrature_mass,
                            reconstruct_u_v, surface_measure, total_mass)
from flimks.subsolution import w_lower, w_lower_s


def test_surface_measure_low_dimensions():
    assert surface_measure(1) == pytest.approx(2.0, rel=1e-14)
    assert surface_measure(2) == pytest.approx(2.0 * math.pi, rel=1e-14)
    assert surface_measure(3) == pytest.approx(4.0 * math.pi, rel=1e-14)


@pytest.mark.parametrize("n, R, chi, m", [(1, 1.0, 2.0, 2.0), (2, 1.0, 2.0, 0.5), (3, 2.0, 1.5, 7.0)])
def test_setup_mass_identity(n, R, chi, m):
    setup = make_setup(n, R, chi, m)
    assert setup.mu * setup.omega_n * R ** n / n == pytest.approx(m, rel=1e-12)
    assert setup.mass_level * setup.omega_n == pytest.approx(m, rel=1e-14)
    assert setup.mu * setup.volume == pytest.approx(m, rel=1e-14)


def test_setup_examples():
    setup = make_setup(2, 1.0, 2.0, 0.5)
    assert setup.omega_n == pytest.approx(2.0 * math.pi)
    assert setup.mu == pytest.approx(0.5 / math.pi, rel=1e-12)
    assert make_setup(1, 1.0, 2.0, 1.0).m_crit == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-12)
    assert make_setup(1, 1.0, 0.5, 1.0).m_crit == math.inf


@pytest.mark.parametrize("args", [(0, 1.0, 2.0, 1.0), (1.5, 1.0, 2.0, 1.0), (1, 0.0, 2.0, 1.0),
                                  (1, 1.0, -1.0, 1.0), (1, 1.0, 2.0, 0.0)])
def test_setup_rejects_bad_values(args):
    with pytest.raises(ValueError):
        make_setup(*args)


def test_with_mass_keeps_geometry():
    setup = make_setup(2, 1.5, 2.0, 0.5).with_mass(0.75)
    assert (setup.n, setup.R, setup.chi, setup.m) == (2, 1.5, 2.0, 0.75)


@pytest.mark.parametrize("n", [1, 2])
def test_accumulate_constant_density_is_linear(n):
    setup = make_setup(n, 1.0, 2.0, 0.5)
    r = np.linspace(0.0, 1.0, 201)
    state = accumulate(r, np.full_like(r, setup.mu), setup)
    expected = setup.mass_level * state.s_grid / setup.R_n
    assert np.max(np.abs(state.w - expected)) <= 1e-12 * setup.mass_level
    ok, error = state.check_pins(setup)
    assert ok, error


def test_accumulate_zero_leading_interval():
    setup = make_setup(2, 1.0, 2.0, 0.5)
    r = np.linspace(0.0, 1.0, 101)
    u = np.where(r <= 0.3, 0.0, 1.0)
    state = accumulate(r, u, setup)
    assert np.all(state.w[r <= 0.3] == 0.0)
    assert state.w[-1] == setup.mass_level
    assert state.is_monotone()


def test_accumulate_rejects_negative_density():
    setup = make_setup(1, 1.0, 2.0, 2.0)
    r = np.linspace(0.0, 1.0, 11)
    u = np.ones_like(r)
    u[4] = -1e-3
    with pytest.raises(ValueError, match="negative density"):
        accumulate(r, u, setup)


def test_accumulate_rejects_short_cover():
    setup = make_setup(1, 1.0, 2.0, 2.0)
    r = np.linspace(0.0, 0.9, 11)
    with pytest.raises(ValueError):
        accumulate(r, np.ones_like(r), setup)


def test_state_validation():
    with pytest.raises(ValueError):
        RadialState(s_grid=[0.0, 0.5, 0.4], w=[0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        RadialState(s_grid=[0.0, 0.5], w=[0.0, 1.0, 2.0])
    state = RadialState(s_grid=[0.0, 0.5, 1.0], w=[0.0, 1.0, 2.0])
    assert not state.w.flags.writeable


def test_reconstruct_linear_profile():
    setup = make_setup(2, 1.0, 2.0, 0.5)
    s = np.linspace(0.0, 1.0, 65)
    state = RadialState.pinned(s, setup.mass_level * s, 0.0, setup)
    r, u, v = reconstruct_u_v(state, setup)
    assert np.allclose(r, np.sqrt(s), rtol=0, atol=1e-15)
    assert np.allclose(u, setup.mu, rtol=1e-12)
    assert np.max(np.abs(v)) <= 1e-14
    assert v[-1] == 0.0


def test_reconstruct_needs_three_nodes():
    setup = make_setup(1, 1.0, 2.0, 2.0)
    state = RadialState.pinned([0.0, 1.0], [0.0, 1.0], 0.0, setup)
    with pytest.raises(ValueError, match="at least 3"):
        reconstruct_u_v(state, setup)


def test_mass_is_conserved_by_pinning():
    setup = make_setup(2, 1.0, 2.0, 0.5)
    s = np.linspace(0.0, 1.0, 2001)
    w = setup.mass_level * (s + 0.3 * np.sin(math.pi * s) / math.pi)
    state = RadialState.pinned(s, w, 0.0, setup)
    assert total_mass(state, setup) == pytest.approx(setup.m, rel=1e-14)
    assert quadrature_mass(state, setup) == pytest.approx(setup.m, rel=1e-8)


def test_quadrature_mass_error_is_second_order():
    # w'' differs at the two ends, so the h^2 term survives
    setup = make_setup(1, 1.0, 2.0, 2.0)
    errors = []
    for nodes in (501, 1001):
        s = np.linspace(0.0, 1.0, nodes)
        w = setup.mass_level * (s + 0.2 * s ** 2 * (1.0 - s))
        state = RadialState.pinned(s, w, 0.0, setup)
        errors.append(abs(quadrature_mass(state, setup) - setup.m) / setup.m)
    assert errors[1] == pytest.approx(0.3e-6, rel=1e-2)
    assert math.log2(errors[0] / errors[1]) >= 1.9


def test_accumulate_after_reconstruct_is_idempotent():
    setup = make_setup(2, 1.0, 2.0, 0.5)
    gaps = []
    for nodes in (1001, 2001, 4001):
        r = np.linspace(0.0, setup.R, nodes)
        state = accumulate(r, 1.0 + 0.5 * np.cos(math.pi * r), setup)
        r_back, u_back, _ = reconstruct_u_v(state, setup)
        again = accumulate(r_back, u_back, setup, s_grid=state.s_grid)
        assert again.check_pins(setup) == (True, None)
        gaps.append(np.max(np.abs(again.w - state.w)) / setup.mass_level)
    assert gaps[-1] <= 1e-6
    orders = [math.log2(coarse / fine) for coarse, fine in zip(gaps, gaps[1:])]
    assert min(orders) >= 1.5, gaps


def test_lower_profile_round_trip(setup_2d, params_2d):
    # cubic grading resolves the inner parabola of width sqrt(B0)
    r = setup_2d.R * np.linspace(0.0, 1.0, 20001) ** 3
    r[-1] = setup_2d.R
    s = np.minimum(r ** 2, setup_2d.R_n)
    u0 = setup_2d.n * w_lower_s(params_2d, setup_2d, s, 0.0)
    state = accumulate(r, u0, setup_2d)
    target = w_lower(params_2d, setup_2d, state.s_grid, 0.0)
    assert np.max(np.abs(state.w - target)) <= 1e-4 * setup_2d.mass_level
