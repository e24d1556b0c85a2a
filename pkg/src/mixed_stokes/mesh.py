"""Conforming triangular meshes with tagged boundary edges."""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidArgumentError
from .quadrature import gauss_legendre

# Side tags of the rectangle (0,L)x(0,H).
LEFT, RIGHT, BOTTOM, TOP = 1, 2, 3, 4


class Regime(str, Enum):
    DIRICHLET = "i"    # Gamma_N has zero measure
    NEUMANN = "ii"     # Gamma_D has zero measure
    MIXED = "iii"


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


class TriMesh:
    """Immutable triangulation of a polygon.

    Local edge k of a triangle joins local vertices k and (k+1) % 3.
    Boundary edges carry integer tags and outward unit normals.
    """

    def __init__(self, vertices, triangles, boundary):
        vertices = np.asarray(vertices, dtype=float)
        triangles = np.array(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise InvalidArgumentError("vertices must have shape (n, 2)")
        if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
            raise InvalidArgumentError("triangles must have shape (m, 3), m >= 1")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise InvalidArgumentError("triangle references an unknown vertex")

        area = _signed_areas(vertices, triangles)
        scale = np.ptp(vertices, axis=0).max() ** 2
        if np.any(np.abs(area) <= 1e-14 * scale):
            raise InvalidArgumentError("degenerate triangle")
        flip = area < 0
        triangles[flip] = triangles[flip][:, [0, 2, 1]]

        local = np.stack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=1)
        keys = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        if counts.max() > 2:
            raise InvalidArgumentError("non-manifold edge shared by more than two triangles")

        edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
        owner = np.repeat(np.arange(len(triangles)), 3)
        order = np.argsort(inverse, kind="stable")
        first = np.ones(len(order), dtype=bool)
        first[1:] = inverse[order][1:] != inverse[order][:-1]
        edge_tris[inverse[order][first], 0] = owner[order][first]
        edge_tris[inverse[order][~first], 1] = owner[order][~first]

        bnd_idx = np.flatnonzero(edge_tris[:, 1] < 0)
        lookup = {tuple(e): k for k, e in enumerate(edges[bnd_idx])}
        tags = np.zeros(len(bnd_idx), dtype=np.int64)
        seen = np.zeros(len(bnd_idx), dtype=bool)
        for i, j, tag in boundary:
            key = (min(i, j), max(i, j))
            if key not in lookup:
                raise InvalidArgumentError(f"tagged edge {key} is not a boundary edge")
            tags[lookup[key]] = int(tag)
            seen[lookup[key]] = True
        if not seen.all():
            missing = [tuple(e) for e in edges[bnd_idx][~seen]]
            raise InvalidArgumentError(f"untagged boundary edges: {missing[:5]}")

        self.vertices = _frozen(vertices, float)
        self.triangles = _frozen(triangles, np.int64)
        self.edges = _frozen(edges, np.int64)
        self.tri_edges = _frozen(inverse.reshape(-1, 3), np.int64)
        self.edge_tris = _frozen(edge_tris, np.int64)
        self.boundary_edges = _frozen(bnd_idx, np.int64)
        self.boundary_tags = _frozen(tags, np.int64)
        self.boundary_normals = _frozen(self._normals(), float)
        self.areas = _frozen(np.abs(area), float)

    def _normals(self):
        e = self.edges[self.boundary_edges]
        t = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        n = np.column_stack([t[:, 1], -t[:, 0]])
        n /= np.linalg.norm(n, axis=1)[:, None]
        centroid = self.vertices[self.triangles[self.edge_tris[self.boundary_edges, 0]]].mean(axis=1)
        midpoint = self.vertices[e].mean(axis=1)
        n[np.einsum("ij,ij->i", n, midpoint - centroid) < 0] *= -1
        return n

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def tags(self):
        return frozenset(int(t) for t in self.boundary_tags)

    @property
    def h_max(self):
        v = self.vertices[self.edges]
        return float(np.linalg.norm(v[:, 1] - v[:, 0], axis=1).max())

    def edge_lengths(self, edge_ids=None):
        e = self.edges if edge_ids is None else self.edges[edge_ids]
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    def boundary_triples(self):
        """(i, j, tag) rows for every boundary edge."""
        e = self.edges[self.boundary_edges]
        return np.column_stack([e, self.boundary_tags])

    def retag(self, boundary_positions, tag):
        """New mesh with the given boundary edges (positions into
        ``boundary_edges``) assigned ``tag``."""
        triples = self.boundary_triples().copy()
        triples[np.asarray(boundary_positions, dtype=np.int64), 2] = int(tag)
        return TriMesh(self.vertices, self.triangles, triples)

    def __repr__(self):
        return (f"TriMesh(vertices={self.n_vertices}, triangles={self.n_triangles}, "
                f"edges={self.n_edges}, tags={sorted(self.tags)})")


def _signed_areas(vertices, triangles):
    a, b, c = (vertices[triangles[:, k]] for k in range(3))
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def build_rect_mesh(L, H, nx, ny, diagonal="right"):
    """Uniform mesh of (0,L)x(0,H). Sides are tagged LEFT=1, RIGHT=2,
    BOTTOM=3, TOP=4.

    With ``diagonal="right"`` every cell is cut from its bottom-left to its
    top-right corner. ``diagonal="mirrored"`` (ny even) flips the cut in the
    upper half so the mesh is symmetric about x2 = H/2.
    """
    if not (L > 0 and H > 0):
        raise InvalidArgumentError(f"rectangle dimensions must be positive, got L={L}, H={H}")
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise InvalidArgumentError(f"subdivisions must be positive integers, got nx={nx}, ny={ny}")
    nx, ny = int(nx), int(ny)
    if diagonal not in ("right", "mirrored"):
        raise InvalidArgumentError(f"unknown diagonal option {diagonal!r}")
    if diagonal == "mirrored" and ny % 2:
        raise InvalidArgumentError("a mirrored mesh needs an even ny")
    xs = np.linspace(0.0, L, nx + 1)
    ys = np.linspace(0.0, H, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    v00 = idx[:-1, :-1].ravel()
    v10 = idx[:-1, 1:].ravel()
    v11 = idx[1:, 1:].ravel()
    v01 = idx[1:, :-1].ravel()
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([v00, v10, v11])
    triangles[1::2] = np.column_stack([v00, v11, v01])
    if diagonal == "mirrored":
        upper = np.repeat(np.arange(ny) >= ny // 2, nx)
        cut = np.flatnonzero(upper)
        triangles[2 * cut] = np.column_stack([v00, v10, v01])[cut]
        triangles[2 * cut + 1] = np.column_stack([v10, v11, v01])[cut]

    boundary = []
    for j in range(ny):
        boundary.append((idx[j, 0], idx[j + 1, 0], LEFT))
        boundary.append((idx[j, nx], idx[j + 1, nx], RIGHT))
    for i in range(nx):
        boundary.append((idx[0, i], idx[0, i + 1], BOTTOM))
        boundary.append((idx[ny, i], idx[ny, i + 1], TOP))
    return TriMesh(vertices, triangles, boundary)


@dataclass(frozen=True)
class BoundaryPartition:
    dirichlet_tags: frozenset
    neumann_tags: frozenset
    dirichlet_measure: float
    neumann_measure: float

    @property
    def regime(self):
        if self.neumann_measure == 0.0:
            return Regime.DIRICHLET
        if self.dirichlet_measure == 0.0:
            return Regime.NEUMANN
        return Regime.MIXED

    @property
    def perimeter(self):
        return self.dirichlet_measure + self.neumann_measure


def partition_boundary(mesh, dirichlet_tags):
    """Split the boundary tags into Dirichlet and Neumann parts."""
    dirichlet_tags = frozenset(int(t) for t in dirichlet_tags)
    unknown = dirichlet_tags - mesh.tags
    if unknown:
        raise InvalidArgumentError(f"unknown boundary tags: {sorted(unknown)}")
    lengths = mesh.edge_lengths(mesh.boundary_edges)
    on_d = np.isin(mesh.boundary_tags, list(dirichlet_tags))
    return BoundaryPartition(
        dirichlet_tags=dirichlet_tags,
        neumann_tags=mesh.tags - dirichlet_tags,
        dirichlet_measure=float(lengths[on_d].sum()),
        neumann_measure=float(lengths[~on_d].sum()),
    )


@dataclass(frozen=True)
class BoundaryRule:
    """Quadrature on a set of boundary edges.

    ``t`` is the parameter along each edge, measured from ``edges[:, 0]``
    (the first vertex of the stored, sorted edge) to ``edges[:, 1]``.
    """
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    edge_ids: np.ndarray
    t: np.ndarray
    tags: np.ndarray

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(zip(self.points, self.weights, self.normals))


def boundary_rule(mesh, tags, order):
    """Gauss-Legendre rule on all boundary edges whose tag is in ``tags``."""
    if isinstance(tags, (int, np.integer)):
        tags = {int(tags)}
    tags = set(int(t) for t in tags)
    unknown = tags - mesh.tags
    if unknown:
        raise InvalidArgumentError(f"unknown boundary tags: {sorted(unknown)}")
    s, w = gauss_legendre(order)
    pos = np.flatnonzero(np.isin(mesh.boundary_tags, list(tags)))
    eids = mesh.boundary_edges[pos]
    a = mesh.vertices[mesh.edges[eids, 0]]
    b = mesh.vertices[mesh.edges[eids, 1]]
    length = np.linalg.norm(b - a, axis=1)
    nq = len(s)
    points = (a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)
    return BoundaryRule(
        points=points,
        weights=(length[:, None] * w[None, :]).ravel(),
        normals=np.repeat(mesh.boundary_normals[pos], nq, axis=0),
        edge_ids=np.repeat(eids, nq),
        t=np.tile(s, len(eids)),
        tags=np.repeat(mesh.boundary_tags[pos], nq),
    )


def boundary_quadrature(mesh, tag, order):
    """List of (point, weight, outward normal) on the edges tagged ``tag``."""
    if int(tag) not in mesh.tags:
        raise InvalidArgumentError(f"unknown boundary tag {tag}")
    return list(boundary_rule(mesh, {tag}, order))
