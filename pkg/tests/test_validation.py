from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import fd_gradient
from mixed_stokes.errors import InvalidArgumentError
from mixed_stokes.solver import solve
from mixed_stokes.validation import (ASYMPTOTIC_COLUMNS, TEST_FUNCTIONS, ChannelParams,
                                     asymptotic_study, asymptotic_table, channel_problem,
                                     compare_to_poiseuille, interpolated_poiseuille_solution,
                                     limit_moments, normal_stress_bc, poiseuille,
                                     poiseuille_shear, poiseuille_traction, reflection_defect,
                                     solve_channel)

params_st = st.builds(ChannelParams, L=st.floats(0.5, 4), H=st.floats(0.2, 2),
                      p_in=st.floats(-3, 3), p_out=st.floats(-3, 3), mu=st.floats(0.1, 5))


def test_poiseuille_values(params):
    u, p = poiseuille([[1.0, 0.5], [0.0, 0.0], [2.0, 1.0]], params)
    np.testing.assert_allclose(u[:, 0], [0.0625, 0.0, 0.0])
    np.testing.assert_allclose(u[:, 1], 0.0)
    np.testing.assert_allclose(p, [0.5, 1.0, 0.0])
    # flux through a cross-section: dp H^3 / (12 mu L)
    y, w = np.polynomial.legendre.leggauss(4)
    y, w = 0.5 * (y + 1), 0.5 * w
    ux = poiseuille(np.column_stack([np.ones(4), y]), params)[0][:, 0]
    assert w @ ux == pytest.approx(1 / 24, rel=1e-14)


@settings(max_examples=20, deadline=None)
@given(p=params_st, seed=st.integers(0, 2**16))
def test_poiseuille_satisfies_stokes_equations(p, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform([0, 0], [p.L, p.H], (100, 2))
    vel = lambda y: poiseuille(y, p)[0]
    g = fd_gradient(vel, x)
    assert np.abs(g[:, 0, 0] + g[:, 1, 1]).max() < 1e-8

    def stress(y):
        gy = fd_gradient(vel, y)
        s = p.mu * (gy + np.swapaxes(gy, 1, 2))
        s[:, 0, 0] -= poiseuille(y, p)[1]
        s[:, 1, 1] -= poiseuille(y, p)[1]
        return s

    h = 1e-3
    div = np.zeros((len(x), 2))
    for d in range(2):
        e = np.zeros(2)
        e[d] = h
        div += (stress(x + e)[:, :, d] - stress(x - e)[:, :, d]) / (2 * h)
    scale = abs(p.p_in - p.p_out) / p.L + 1.0
    assert np.abs(div).max() < 1e-6 * scale


@settings(max_examples=20, deadline=None)
@given(p=params_st)
def test_traction_is_stress_times_normal(p):
    x2 = np.linspace(0, p.H, 7)
    left = np.column_stack([np.zeros(7), x2])
    t = poiseuille_traction(left, np.tile([-1.0, 0.0], (7, 1)), p)
    np.testing.assert_allclose(t[:, 0], p.p_in, atol=1e-12 * (1 + abs(p.p_in)))
    np.testing.assert_allclose(t[:, 1], -poiseuille_shear(x2, p), atol=1e-12)
    # shear matches mu du1/dx2
    g = fd_gradient(lambda y: poiseuille(y, p)[0], left + [p.L / 2, 0], step=1e-5)
    np.testing.assert_allclose(p.mu * g[:, 0, 1], poiseuille_shear(x2, p),
                               atol=1e-8 * (1 + abs(p.p_in - p.p_out)))


def test_traction_examples(params):
    def t(x, n):
        return poiseuille_traction([x], [n], params)[0]
    np.testing.assert_allclose(t((0, 0.5), (-1, 0)), (1.0, 0.0), atol=1e-15)
    np.testing.assert_allclose(t((0, 0), (-1, 0)), (1.0, -0.25), atol=1e-15)
    np.testing.assert_allclose(t((1, 1), (0, 1)), (-0.25, -0.5), atol=1e-15)


def test_normal_stress_bc(params):
    x = np.array([[0.0, 0.3], [2.0, 0.9]])
    np.testing.assert_allclose(normal_stress_bc(x, params), [[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(InvalidArgumentError):
        normal_stress_bc([[1.0, 0.0]], params)


def test_channel_params_validation():
    with pytest.raises(InvalidArgumentError):
        ChannelParams(L=0.0)
    with pytest.raises(InvalidArgumentError):
        ChannelParams(mu=-1.0)
    assert ChannelParams().pressure_gradient == -0.5


def test_comparison_of_interpolant_with_itself(params):
    sol = interpolated_poiseuille_solution(params, 8, 4)
    cmp = compare_to_poiseuille(sol, params)
    assert cmp.velocity_l2 < 1e-12 and cmp.pressure_l2 < 1e-12
    assert cmp.max_sample_difference < 1e-12
    assert max(cmp.pressure_band_deviation) < 1e-12
    np.testing.assert_allclose(cmp.wall_shear[:, 1], cmp.wall_shear[:, 2], atol=1e-12)


def test_hydrostatic_shift_only_moves_pressure(params):
    a = solve_channel(params, 8, 4)
    b = solve_channel(replace(params, p_in=params.p_in + 3.0, p_out=params.p_out + 3.0), 8, 4)
    np.testing.assert_allclose(b.u, a.u, atol=1e-12)
    np.testing.assert_allclose(b.p, a.p + 3.0, atol=1e-12)


def test_equal_pressures_give_rest(params):
    sol = solve_channel(replace(params, p_in=0.7, p_out=0.7), 8, 4)
    assert np.abs(sol.u).max() < 1e-12
    np.testing.assert_allclose(sol.p, 0.7, atol=1e-12)


def test_midplane_reflection_on_mirrored_mesh(params):
    sol = solve_channel(params, 16, 8, diagonal="mirrored")
    assert reflection_defect(sol, params) < 1e-10


def test_point_symmetry_fixes_center_pressure(params):
    # u(x) = u(L - x1, H - x2), p - 1/2 odd about the centre; the "/" mesh
    # is invariant under that rotation, so p(L/2, H/2) = 1/2 exactly
    sol = solve_channel(params, 8, 4)
    x = sol.dofmap.velocity_nodes
    rot = np.column_stack([params.L - x[:, 0], params.H - x[:, 1]])
    np.testing.assert_allclose(sol.velocity(rot), sol.nodal_velocity, atol=1e-12)
    assert sol.pressure([[1.0, 0.5]])[0] == pytest.approx(0.5, abs=1e-12)


@pytest.mark.slow
def test_center_pressure_richardson(params):
    vals = [solve_channel(params, nx, ny).pressure([[1.0, 0.5]])[0]
            for nx, ny in ((16, 8), (32, 16), (64, 32))]
    d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
    assert d2 <= d1 + 1e-12
    extrapolated = vals[2] + (vals[2] - vals[1]) / 3
    assert abs(extrapolated - 0.5) < 0.02
    assert abs(vals[2] - 0.5) < 0.02


def test_normal_stress_flow_differs_from_poiseuille_near_ends(params):
    cmp = compare_to_poiseuille(solve_channel(params, 32, 16), params)
    left, middle, right = cmp.pressure_band_deviation
    assert left > middle and right > middle
    assert cmp.velocity_l2_relative < 0.15
    assert cmp.samples.shape[1] == 8


@pytest.mark.parametrize("phi,u,p", [("1", 1 / 12, 0.5), ("y1", 1 / 24, 1 / 6),
                                     ("y2", 1 / 24, 0.25), ("y1y2", 1 / 48, 1 / 12)])
def test_limit_moments_closed_form(params, phi, u, p):
    lu, lp = limit_moments(params, TEST_FUNCTIONS[phi])
    assert lu[0] == pytest.approx(u, rel=1e-14) and lu[1] == 0.0
    assert lp == pytest.approx(p, rel=1e-14)


def test_asymptotic_study_small(params):
    rows = asymptotic_study((0.5, 0.25), params, ny=4)
    assert len(rows) == 2 * len(TEST_FUNCTIONS)
    table = asymptotic_table(rows)
    assert all(len(r) == len(ASYMPTOTIC_COLUMNS) for r in table)
    one = [r for r in rows if r.phi == "1"]
    assert one[1].discrepancy_u < one[0].discrepancy_u


@pytest.mark.parametrize("H_list", [(), (0.5, 0.5), (0.25, 0.5), (0.5, -0.1)])
def test_asymptotic_study_rejects_bad_heights(H_list):
    with pytest.raises(InvalidArgumentError):
        asymptotic_study(H_list)


def test_poiseuille_preset_in_channel_problem(params):
    prob = channel_problem(params, 4, 2, traction="poiseuille",
                           h=lambda x: poiseuille(x, params)[0])
    sol = solve(prob)
    assert compare_to_poiseuille(sol, params).max_sample_difference < 1e-12
    with pytest.raises(InvalidArgumentError):
        channel_problem(params, 4, 2, traction="bogus")
