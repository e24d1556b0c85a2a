"""Sparse assembly of the Stokes saddle-point blocks and load vectors.

Unknowns (u, p) satisfy

    a(u, v) + b(v, p) = <g, v>_{Gamma_N} - (f, v)
    b(u, q)           = 0

with a(u, v) = 2 mu (e(u), e(v)) and b(v, q) = -(q, div v). Because e(u) is
symmetric, (e(u), grad v) = (e(u), e(v)) and the viscous block is assembled
from the symmetric form directly.
"""
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import EvaluationError, InvalidArgumentError
from .mesh import boundary_rule
from .quadrature import TRI_BARY, TRI_WEIGHTS
from .spaces import p2_gradients, p2_values, physical_points

ZERO_TOL = 1e-30


def to_csr(rows, cols, vals, shape):
    """Sum duplicate triplets into a CSR matrix with sorted, unique columns."""
    m = sp.coo_matrix((np.ravel(vals), (np.ravel(rows), np.ravel(cols))), shape=shape).tocsr()
    m.sum_duplicates()
    m.data[np.abs(m.data) < ZERO_TOL] = 0.0
    m.eliminate_zeros()
    m.sort_indices()
    return m


def _weights(mesh):
    return mesh.areas[:, None] * TRI_WEIGHTS[None, :]


def _vector_form(dofmap, local):
    """Assemble a (T, 6, 2, 6, 2) local tensor into the velocity space."""
    T = len(local)
    loc = local.reshape(T, 12, 12)
    d = dofmap.cell_vel_dofs
    rows = np.repeat(d[:, :, None], 12, axis=2)
    cols = np.repeat(d[:, None, :], 12, axis=1)
    n = dofmap.n_vel_dofs
    return to_csr(rows, cols, loc, (n, n))


def assemble_viscous(mesh, dofmap, mu):
    """Matrix of a(u, v) = int 2 mu e(u):e(v) dx over all velocity DOFs."""
    if not mu > 0:
        raise InvalidArgumentError(f"viscosity must be positive, got {mu}")
    grad = p2_gradients(mesh, TRI_BARY)
    w = _weights(mesh)
    # 2 mu * 1/2 (delta_cd grad_a.grad_b + d_d phi_a d_c phi_b)
    dot = np.einsum("tq,tqad,tqbd->tab", w, grad, grad)
    cross = np.einsum("tq,tqad,tqbc->tacbd", w, grad, grad)
    local = cross.copy()
    for c in range(2):
        local[:, :, c, :, c] += dot
    return _vector_form(dofmap, mu * local)


def assemble_strain_gram(mesh, dofmap):
    """int e(u):e(v) dx."""
    return assemble_viscous(mesh, dofmap, 0.5)


def assemble_gradient_gram(mesh, dofmap):
    """int grad u : grad v dx."""
    grad = p2_gradients(mesh, TRI_BARY)
    dot = np.einsum("tq,tqad,tqbd->tab", _weights(mesh), grad, grad)
    local = np.zeros((mesh.n_triangles, 6, 2, 6, 2))
    for c in range(2):
        local[:, :, c, :, c] = dot
    return _vector_form(dofmap, local)


def assemble_velocity_mass(mesh, dofmap):
    phi = p2_values(TRI_BARY)
    mass = np.einsum("tq,qa,qb->tab", _weights(mesh), phi, phi)
    local = np.zeros((mesh.n_triangles, 6, 2, 6, 2))
    for c in range(2):
        local[:, :, c, :, c] = mass
    return _vector_form(dofmap, local)


def assemble_h1_gram(mesh, dofmap):
    return (assemble_velocity_mass(mesh, dofmap) + assemble_gradient_gram(mesh, dofmap)).tocsr()


def assemble_pressure_mass(mesh, dofmap):
    w = _weights(mesh)
    local = np.einsum("tq,qi,qj->tij", w, TRI_BARY, TRI_BARY)
    d = dofmap.cell_pre_dofs
    n = dofmap.n_pre_dofs
    return to_csr(np.repeat(d[:, :, None], 3, 2), np.repeat(d[:, None, :], 3, 1), local, (n, n))


def assemble_divergence(mesh, dofmap):
    """B[j, i] = -int q_j div(phi_i) dx, shape (n_pre, n_vel)."""
    grad = p2_gradients(mesh, TRI_BARY)
    local = -np.einsum("tq,qj,tqac->tjac", _weights(mesh), TRI_BARY, grad).reshape(-1, 3, 12)
    rows = np.repeat(dofmap.cell_pre_dofs[:, :, None], 12, axis=2)
    cols = np.repeat(dofmap.cell_vel_dofs[:, None, :], 3, axis=1)
    return to_csr(rows, cols, local, (dofmap.n_pre_dofs, dofmap.n_vel_dofs))


def _eval(func, what, *args):
    try:
        vals = np.asarray(func(*args), dtype=float)
    except Exception as exc:
        raise EvaluationError(f"{what} could not be evaluated: {exc}") from exc
    n = len(args[0])
    if vals.shape in ((2,), (1, 2)):
        vals = np.broadcast_to(vals, (n, 2))
    if vals.shape != (n, 2) or not np.all(np.isfinite(vals)):
        raise EvaluationError(f"{what} returned invalid values (shape {vals.shape})")
    return vals


def volume_load(mesh, dofmap, f):
    """Vector of int f . phi_i dx."""
    out = np.zeros(dofmap.n_vel_dofs)
    if f is None:
        return out
    x = physical_points(mesh, TRI_BARY)
    fx = _eval(f, "body force f", x.reshape(-1, 2)).reshape(mesh.n_triangles, -1, 2)
    phi = p2_values(TRI_BARY)
    local = np.einsum("tq,qa,tqc->tac", _weights(mesh), phi, fx).reshape(-1, 12)
    np.add.at(out, dofmap.cell_vel_dofs, local)
    return out


def boundary_p2_values(t):
    """P2 trace basis along an edge at parameter t: (start, end, midpoint)."""
    t = np.asarray(t)
    return np.column_stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)])


def boundary_nodes(mesh, edge_ids):
    """P2 node indices (start, end, midpoint) for each edge."""
    e = mesh.edges[edge_ids]
    return np.column_stack([e[:, 0], e[:, 1], mesh.n_vertices + np.asarray(edge_ids)])


def traction_load(mesh, dofmap, g, tags, order=2):
    """Vector of int_{tags} g . phi_i dS, with g(points, normals) -> (n, 2)."""
    out = np.zeros(dofmap.n_vel_dofs)
    if g is None or not tags:
        return out
    rule = boundary_rule(mesh, tags, order)
    gx = _eval(g, "traction g", rule.points, rule.normals)
    phi = boundary_p2_values(rule.t)
    nodes = boundary_nodes(mesh, rule.edge_ids)
    for c in range(2):
        np.add.at(out, 2 * nodes + c, (rule.weights * gx[:, c])[:, None] * phi)
    return out


def assemble_loads(mesh, dofmap, f, g, order=2):
    """(rhs_vel, rhs_pre) for the data f on the domain and g on Gamma_N."""
    rhs_vel = traction_load(mesh, dofmap, g, dofmap.partition.neumann_tags, order) \
        - volume_load(mesh, dofmap, f)
    return rhs_vel, np.zeros(dofmap.n_pre_dofs)


@dataclass
class SaddleSystem:
    """Blocks of [[A, B^T], [B, 0]] and right-hand sides.

    Before ``apply_dirichlet_lift`` the blocks act on all velocity DOFs and
    ``free`` is None. Afterwards they act on ``free`` only and ``lift`` is
    the full-length vector holding the prescribed values.
    """
    A: sp.csr_matrix
    B: sp.csr_matrix
    rhs_vel: np.ndarray
    rhs_pre: np.ndarray
    regime: object
    n_vel_total: int
    free: np.ndarray = None
    lift: np.ndarray = None
    pin_vel: np.ndarray = None     # (k, n_vel) rows
    pin_pre: np.ndarray = None     # (k, n_pre) rows
    extras: dict = field(default_factory=dict)

    @property
    def n_pins(self):
        for c in (self.pin_vel, self.pin_pre):
            if c is not None:
                return len(c)
        return 0

    def full_velocity(self, u_free):
        if self.free is None:
            return np.asarray(u_free, dtype=float).copy()
        u = self.lift.copy()
        u[self.free] = u_free
        return u


def assemble_system(dofmap, mu, f=None, g=None, order=2):
    mesh = dofmap.mesh
    rhs_vel, rhs_pre = assemble_loads(mesh, dofmap, f, g, order)
    return SaddleSystem(
        A=assemble_viscous(mesh, dofmap, mu),
        B=assemble_divergence(mesh, dofmap),
        rhs_vel=rhs_vel,
        rhs_pre=rhs_pre,
        regime=dofmap.regime,
        n_vel_total=dofmap.n_vel_dofs,
    )


def apply_dirichlet_lift(system, dofmap, values):
    """Eliminate the constrained velocity DOFs symmetrically."""
    values = np.asarray(values, dtype=float)
    d, free = dofmap.dirichlet_dofs, dofmap.free_dofs
    if values.shape != d.shape:
        raise InvalidArgumentError(f"expected {len(d)} constraint values, got {values.shape}")
    lift = np.zeros(system.n_vel_total)
    lift[d] = values
    A = system.A.tocsc()
    B = system.B.tocsc()
    rhs_vel = system.rhs_vel[free] - A[:, d][free] @ values
    rhs_pre = system.rhs_pre - B[:, d] @ values
    pin_vel = None if system.pin_vel is None else system.pin_vel[:, free]
    return replace(
        system,
        A=A[:, free].tocsr()[free].tocsr(),
        B=B[:, free].tocsr(),
        rhs_vel=rhs_vel,
        rhs_pre=rhs_pre,
        free=free,
        lift=lift,
        pin_vel=pin_vel,
    )


def write_matrix_market(path, matrix, comment=""):
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment, precision=17)
