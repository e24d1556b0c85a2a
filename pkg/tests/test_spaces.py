import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_dofmap, oracle_fields
from mixed_stokes.errors import EvaluationError
from mixed_stokes.spaces import (evaluate_pressure, evaluate_velocity, interpolate_boundary_velocity,
                                 interpolate_velocity, rigid_modes)
from mixed_stokes.validation import poiseuille_velocity


@pytest.mark.parametrize("nx,ny,nvel,npre", [(1, 1, 18, 4), (2, 1, 30, 6)])
def test_dof_counts(nx, ny, nvel, npre):
    d = make_dofmap(nx, ny, {3, 4})
    assert (d.n_vel_dofs, d.n_pre_dofs) == (nvel, npre)
    m = d.mesh
    assert d.n_vel_dofs == 2 * (m.n_vertices + m.n_edges)
    assert d.cell_vel_dofs.min() >= 0 and d.cell_vel_dofs.max() < d.n_vel_dofs
    assert d.cell_pre_dofs.max() < d.n_pre_dofs


def test_full_dirichlet_leaves_one_interior_node():
    d = make_dofmap(1, 1, {1, 2, 3, 4})
    assert len(d.free_dofs) == 2
    # the only interior node is the midpoint of the diagonal
    free_nodes = np.unique(d.free_dofs // 2)
    np.testing.assert_allclose(d.velocity_nodes[free_nodes], [[1.0, 0.5]])


def test_constrained_nodes_are_exactly_the_dirichlet_ones():
    d = make_dofmap(4, 2, {3})
    x = d.velocity_nodes
    on_bottom = np.flatnonzero(np.abs(x[:, 1]) < 1e-14)
    np.testing.assert_array_equal(np.sort(d.dirichlet_nodes), on_bottom)
    # corners of the bottom side belong to Gamma_D even though they touch Gamma_N
    assert {0, 4} <= set(d.dirichlet_nodes.tolist())


def test_boundary_interpolation_examples(params):
    d = make_dofmap(4, 2, {3, 4})
    zero = interpolate_boundary_velocity(d, lambda x: np.zeros((len(x), 2)))
    assert not zero.any()
    pois = interpolate_boundary_velocity(d, poiseuille_velocity(params))
    assert np.abs(pois).max() < 1e-15

    d = make_dofmap(4, 1, {4}, L=2.0, H=1.0)
    vals = interpolate_boundary_velocity(d, lambda x: np.column_stack([x[:, 1], 0 * x[:, 0]]))
    np.testing.assert_allclose(vals.reshape(-1, 2), np.tile([1.0, 0.0], (len(vals) // 2, 1)))


def test_boundary_interpolation_reports_undefined_data():
    d = make_dofmap(2, 1, {3})
    with pytest.raises(EvaluationError):
        with np.errstate(divide="ignore"):
            interpolate_boundary_velocity(d, lambda x: np.column_stack([1 / x[:, 0], x[:, 1]]))
    with pytest.raises(EvaluationError):
        interpolate_boundary_velocity(d, lambda x: np.zeros(3))


def test_rigid_modes():
    d = make_dofmap(2, 1, set())
    r = rigid_modes(d)
    assert len(r) == 3
    assert np.linalg.matrix_rank(r.vectors) == 3
    pts = np.array([[2.0, 1.0], [0.3, 0.7]])
    np.testing.assert_allclose(evaluate_velocity(d, r.vectors[0], pts), [[1, 0], [1, 0]])
    np.testing.assert_allclose(evaluate_velocity(d, r.vectors[2], pts[:1]), [[-1.0, 2.0]])


@settings(max_examples=20, deadline=None)
@given(coef=st.lists(st.floats(-3, 3), min_size=12, max_size=12))
def test_quadratic_fields_are_reproduced(coef):
    c = np.array(coef).reshape(6, 2)

    def field(x):
        m = np.column_stack([np.ones(len(x)), x[:, 0], x[:, 1], x[:, 0]**2, x[:, 0] * x[:, 1],
                             x[:, 1]**2])
        return m @ c

    d = make_dofmap(3, 2, {3})
    u = interpolate_velocity(d, field)
    vals, _, _, pts = oracle_fields(d, u)
    assert np.abs(vals - field(pts.reshape(-1, 2)).reshape(vals.shape)).max() < 1e-12
    got = evaluate_velocity(d, u, pts.reshape(-1, 2))
    assert np.abs(got - field(pts.reshape(-1, 2))).max() < 1e-12


def test_pressure_evaluation_is_linear_interpolation():
    d = make_dofmap(3, 2, set())
    p = 2.0 + 3.0 * d.mesh.vertices[:, 0] - d.mesh.vertices[:, 1]
    pts = np.array([[0.1, 0.2], [1.9, 0.95], [1.0, 0.5]])
    np.testing.assert_allclose(evaluate_pressure(d, p, pts), 2 + 3 * pts[:, 0] - pts[:, 1])


def test_point_constraints_extend_the_dirichlet_set():
    d = make_dofmap(2, 1, set())
    d2 = d.with_constrained_nodes([0])
    assert set(d2.dirichlet_dofs.tolist()) == {0, 1}
    assert len(d2.free_dofs) == d.n_vel_dofs - 2
    assert len(d.dirichlet_dofs) == 0
