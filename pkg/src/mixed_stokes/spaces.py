"""Taylor-Hood P2/P1 spaces: DOF numbering, constraints, evaluation."""
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, InvalidArgumentError

# Local P2 node order: vertices 0,1,2 then midpoints of local edges 0,1,2
# (edge k joins vertices k and k+1).
_EDGE_ENDS = ((0, 1), (1, 2), (2, 0))


def p2_values(bary):
    """P2 shape functions at barycentric points, shape (nq, 6)."""
    l = np.atleast_2d(bary)
    out = np.empty((len(l), 6))
    for k in range(3):
        out[:, k] = l[:, k] * (2 * l[:, k] - 1)
    for k, (i, j) in enumerate(_EDGE_ENDS):
        out[:, 3 + k] = 4 * l[:, i] * l[:, j]
    return out


def p2_bary_derivs(bary):
    """Derivatives of the P2 shape functions w.r.t. each barycentric
    coordinate, shape (nq, 6, 3)."""
    l = np.atleast_2d(bary)
    d = np.zeros((len(l), 6, 3))
    for k in range(3):
        d[:, k, k] = 4 * l[:, k] - 1
    for k, (i, j) in enumerate(_EDGE_ENDS):
        d[:, 3 + k, i] = 4 * l[:, j]
        d[:, 3 + k, j] = 4 * l[:, i]
    return d


def bary_gradients(mesh):
    """Gradients of the barycentric coordinates, shape (T, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    g1 = np.column_stack([d2[:, 1], -d2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-d1[:, 1], d1[:, 0]]) / det[:, None]
    return np.stack([-g1 - g2, g1, g2], axis=1)


def p2_gradients(mesh, bary):
    """Physical gradients of the P2 shape functions, shape (T, nq, 6, 2)."""
    return np.einsum("qak,tkd->tqad", p2_bary_derivs(bary), bary_gradients(mesh))


def physical_points(mesh, bary):
    """Quadrature points mapped to every triangle, shape (T, nq, 2)."""
    return np.einsum("qk,tkd->tqd", np.atleast_2d(bary), mesh.vertices[mesh.triangles])


class DofMap:
    """P2 velocity / P1 pressure numbering on a mesh.

    Velocity nodes are the mesh vertices followed by the edge midpoints;
    velocity DOF ``2*node + c`` is component ``c`` at ``node``. Pressure
    DOFs are the vertices.
    """

    def __init__(self, mesh, partition):
        self.mesh = mesh
        self.partition = partition
        nv = mesh.n_vertices
        mid = mesh.vertices[mesh.edges].mean(axis=1)
        self.velocity_nodes = np.vstack([mesh.vertices, mid])
        self.velocity_nodes.setflags(write=False)
        self.n_nodes = len(self.velocity_nodes)
        self.n_vel_dofs = 2 * self.n_nodes
        self.n_pre_dofs = nv

        cn = np.empty((mesh.n_triangles, 6), dtype=np.int64)
        cn[:, :3] = mesh.triangles
        cn[:, 3:] = nv + mesh.tri_edges
        self.cell_nodes = cn
        cd = np.empty((mesh.n_triangles, 12), dtype=np.int64)
        cd[:, 0::2] = 2 * cn
        cd[:, 1::2] = 2 * cn + 1
        self.cell_vel_dofs = cd
        self.cell_pre_dofs = mesh.triangles

        on_d = np.isin(mesh.boundary_tags, list(partition.dirichlet_tags))
        d_edges = mesh.boundary_edges[on_d]
        nodes = np.union1d(mesh.edges[d_edges].ravel(), nv + d_edges)
        self.dirichlet_nodes = nodes.astype(np.int64)
        self.dirichlet_dofs = np.sort(np.concatenate([2 * nodes, 2 * nodes + 1])).astype(np.int64)
        mask = np.ones(self.n_vel_dofs, dtype=bool)
        mask[self.dirichlet_dofs] = False
        self.free_dofs = np.flatnonzero(mask)
        for a in (self.cell_nodes, self.cell_vel_dofs, self.dirichlet_nodes,
                  self.dirichlet_dofs, self.free_dofs):
            a.setflags(write=False)

    @property
    def regime(self):
        return self.partition.regime

    def with_constrained_nodes(self, nodes):
        """Copy of this map with extra velocity nodes treated as Dirichlet
        (used for point constraints that no edge tag can express)."""
        other = object.__new__(DofMap)
        other.__dict__.update(self.__dict__)
        nodes = np.union1d(self.dirichlet_nodes, np.asarray(nodes, dtype=np.int64))
        other.dirichlet_nodes = nodes
        other.dirichlet_dofs = np.sort(np.concatenate([2 * nodes, 2 * nodes + 1]))
        mask = np.ones(self.n_vel_dofs, dtype=bool)
        mask[other.dirichlet_dofs] = False
        other.free_dofs = np.flatnonzero(mask)
        return other

    def split(self, u):
        """Velocity vector -> (n_nodes, 2) nodal array."""
        return np.asarray(u).reshape(-1, 2)

    def __repr__(self):
        return (f"DofMap(n_vel_dofs={self.n_vel_dofs}, n_pre_dofs={self.n_pre_dofs}, "
                f"constrained={len(self.dirichlet_dofs)})")


def build_taylor_hood(mesh, partition):
    return DofMap(mesh, partition)


def _call_field(func, points, what):
    try:
        vals = np.asarray(func(points), dtype=float)
    except Exception as exc:
        raise EvaluationError(f"{what} could not be evaluated: {exc}") from exc
    vals = np.broadcast_to(vals, (len(points), 2)) if vals.shape in ((2,), (1, 2)) else vals
    if vals.shape != (len(points), 2):
        raise EvaluationError(f"{what} returned shape {vals.shape}, expected ({len(points)}, 2)")
    if not np.all(np.isfinite(vals)):
        bad = points[~np.all(np.isfinite(vals), axis=1)][0]
        raise EvaluationError(f"{what} is undefined at {tuple(bad)}")
    return np.array(vals)


def interpolate_velocity(dofmap, func):
    """Nodal P2 interpolant of a vector field ``func(points) -> (n, 2)``."""
    return _call_field(func, dofmap.velocity_nodes, "velocity field").ravel()


def interpolate_pressure(dofmap, func):
    try:
        vals = np.asarray(func(dofmap.mesh.vertices), dtype=float)
    except Exception as exc:
        raise EvaluationError(f"pressure field could not be evaluated: {exc}") from exc
    return np.array(np.broadcast_to(vals, (dofmap.n_pre_dofs,)))


def interpolate_boundary_velocity(dofmap, h):
    """Values of ``h`` at the constrained DOFs, aligned with
    ``dofmap.dirichlet_dofs``."""
    if len(dofmap.dirichlet_nodes) == 0:
        return np.zeros(0)
    vals = _call_field(h, dofmap.velocity_nodes[dofmap.dirichlet_nodes], "boundary velocity h")
    full = np.zeros((dofmap.n_nodes, 2))
    full[dofmap.dirichlet_nodes] = vals
    return full.ravel()[dofmap.dirichlet_dofs]


@dataclass(frozen=True)
class RigidModes:
    """Coefficient vectors of the translations e1, e2 and the rotation
    (-x2, x1), shape (3, n_vel_dofs)."""
    vectors: np.ndarray

    def __iter__(self):
        return iter(self.vectors)

    def __len__(self):
        return len(self.vectors)


def rigid_modes(dofmap):
    x = dofmap.velocity_nodes
    one, zero = np.ones(len(x)), np.zeros(len(x))
    modes = np.stack([
        np.column_stack([one, zero]).ravel(),
        np.column_stack([zero, one]).ravel(),
        np.column_stack([-x[:, 1], x[:, 0]]).ravel(),
    ])
    modes.setflags(write=False)
    return RigidModes(modes)


def locate_points(mesh, points, chunk=256):
    """Triangle index and barycentric coordinates of each point.

    Points outside the mesh (beyond a small tolerance) raise
    InvalidArgumentError.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    p = mesh.vertices[mesh.triangles]
    g = bary_gradients(mesh)
    cells = np.empty(len(points), dtype=np.int64)
    bary = np.empty((len(points), 3))
    for s in range(0, len(points), chunk):
        x = points[s:s + chunk]
        d = x[:, None, :] - p[None, :, 0, :]
        l12 = np.einsum("ptd,tkd->ptk", d, g[:, 1:, :])
        l = np.concatenate([1 - l12.sum(axis=2, keepdims=True), l12], axis=2)
        worst = l.min(axis=2)
        best = worst.argmax(axis=1)
        if np.any(worst[np.arange(len(x)), best] < -1e-10):
            raise InvalidArgumentError("point outside the mesh")
        cells[s:s + chunk] = best
        bary[s:s + chunk] = l[np.arange(len(x)), best]
    return cells, bary


def evaluate_velocity(dofmap, u, points):
    cells, bary = locate_points(dofmap.mesh, points)
    phi = p2_values(bary)
    nodal = dofmap.split(u)[dofmap.cell_nodes[cells]]
    return np.einsum("pa,pad->pd", phi, nodal)


def evaluate_pressure(dofmap, p, points):
    cells, bary = locate_points(dofmap.mesh, points)
    return np.einsum("pk,pk->p", bary, np.asarray(p)[dofmap.cell_pre_dofs[cells]])
