"""Discrete functional-analytic constants and divergence right-inverses.

All eigenproblems run with a fixed-seed start vector so repeated calls
return identical numbers.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly
from .errors import IncompatibleDataError, PreconditionError
from .mesh import Regime, build_rect_mesh, partition_boundary
from .spaces import DofMap, interpolate_boundary_velocity, interpolate_pressure

log = logging.getLogger("mixed_stokes")

SEED = 20240611
DENSE_LIMIT = 600
EIG_TOL = 1e-12


@dataclass
class ConstantReport:
    quantity: str           # korn1 | korn3 | infsup | lambda1
    value: float
    eigenvalue: float
    extremal: np.ndarray    # full-length coefficient vector
    h_max: float
    mesh_level: int = 0


def _dofmap(dofmap, partition):
    if partition is None or partition == dofmap.partition:
        return dofmap
    return DofMap(dofmap.mesh, partition)


def _sub(m, idx):
    m = m.tocsr()
    return m[idx][:, idx].tocsc()


def _start(n):
    return np.random.default_rng(SEED).standard_normal(n)


def _smallest_pair(K, M):
    """Smallest eigenpair of K x = lam M x, K and M SPD."""
    n = K.shape[0]
    if n <= DENSE_LIMIT:
        w, v = la.eigh(K.toarray(), M.toarray(), subset_by_index=[0, 0])
        return float(w[0]), v[:, 0]
    w, v = spla.eigsh(K, k=1, M=M, sigma=0.0, which="LM", v0=_start(n), tol=EIG_TOL)
    return float(w[0]), v[:, 0]


def _largest_pair(K, M):
    n = K.shape[0]
    if n <= DENSE_LIMIT:
        w, v = la.eigh(K.toarray(), M.toarray(), subset_by_index=[n - 1, n - 1])
        return float(w[0]), v[:, 0]
    lu = spla.splu(M.tocsc())
    Minv = spla.LinearOperator((n, n), matvec=lu.solve)
    w, v = spla.eigsh(K, k=1, M=M, Minv=Minv, which="LA", v0=_start(n), tol=EIG_TOL)
    return float(w[0]), v[:, 0]


def _expand(dofmap, free, x):
    out = np.zeros(dofmap.n_vel_dofs)
    out[free] = x
    return out


def korn_constant(dofmap, partition=None, level=0):
    """K with ||v||_H1 <= K ||e(v)||_L2 for v vanishing on Gamma_D."""
    dofmap = _dofmap(dofmap, partition)
    if dofmap.partition.dirichlet_measure <= 0:
        raise PreconditionError(
            "korn3 needs Gamma_D of positive length; with Gamma_D empty the rigid "
            "motions make the constant infinite")
    mesh, free = dofmap.mesh, dofmap.free_dofs
    E = _sub(assembly.assemble_strain_gram(mesh, dofmap), free)
    G = _sub(assembly.assemble_h1_gram(mesh, dofmap), free)
    lam, x = _smallest_pair(E, G)
    return ConstantReport("korn3", 1.0 / np.sqrt(lam), lam, _expand(dofmap, free, x),
                          mesh.h_max, level)


def korn_first_constant(dofmap, level=0):
    """K with ||grad v||_L2 <= K (||v||^2 + ||e(v)||^2)^(1/2), no boundary conditions."""
    mesh = dofmap.mesh
    G = assembly.assemble_gradient_gram(mesh, dofmap).tocsc()
    N = (assembly.assemble_velocity_mass(mesh, dofmap)
         + assembly.assemble_strain_gram(mesh, dofmap)).tocsc()
    lam, x = _largest_pair(G, N)
    return ConstantReport("korn1", float(np.sqrt(lam)), lam, x, mesh.h_max, level)


def _saddle_operator(E, Bf, pin=None):
    """LU of [[E, B^T], [B, 0]] (+ a pressure gauge row)."""
    blocks = [[E, Bf.T], [Bf, None]]
    if pin is not None:
        c = sp.csr_matrix(pin[None, :])
        blocks[0].append(None)
        blocks[1].append(c.T)
        blocks.append([None, c, None])
    return spla.splu(sp.bmat(blocks, format="csc"))


def lambda1(dofmap, partition=None, level=0):
    """inf a(v, v) / ||v||_L2^2 over discretely divergence-free v with zero
    trace on Gamma_D, a(u, v) = int e(u):e(v)."""
    dofmap = _dofmap(dofmap, partition)
    regime = dofmap.regime
    if regime == Regime.NEUMANN:
        raise PreconditionError("lambda1 needs Gamma_D of positive length (rigid modes give 0)")
    mesh, free = dofmap.mesh, dofmap.free_dofs
    Bf = assembly.assemble_divergence(mesh, dofmap).tocsc()[:, free].tocsr()
    nf, npre = len(free), Bf.shape[0]
    empty = nf == 0 or (nf <= DENSE_LIMIT and nf <= np.linalg.matrix_rank(Bf.toarray()))
    if empty:
        raise PreconditionError("no discretely divergence-free velocity with zero trace on Gamma_D")
    E = _sub(assembly.assemble_strain_gram(mesh, dofmap), free)
    M = _sub(assembly.assemble_velocity_mass(mesh, dofmap), free)
    pin = None
    if regime == Regime.DIRICHLET:
        Mp = assembly.assemble_pressure_mass(mesh, dofmap)
        pin = Mp @ np.ones(npre)
    lu = _saddle_operator(E, Bf, pin)
    extra = 0 if pin is None else 1

    def project_solve(b):
        return lu.solve(np.concatenate([b, np.zeros(npre + extra)]))[:nf]

    op = spla.LinearOperator((nf, nf), matvec=lambda x: M @ project_solve(M @ x))
    Mlu = spla.splu(M)
    Minv = spla.LinearOperator((nf, nf), matvec=Mlu.solve)
    w, v = spla.eigsh(op, k=1, M=M, Minv=Minv, which="LA", v0=_start(nf), tol=EIG_TOL)
    lam = 1.0 / float(w[0])
    x = project_solve(M @ v[:, 0])
    x /= np.sqrt(x @ (M @ x))
    return ConstantReport("lambda1", lam, lam, _expand(dofmap, free, x), mesh.h_max, level)


def infsup_constant(dofmap, partition=None, exclude_constants=False, level=0):
    """beta = sqrt of the smallest eigenvalue of B A^-1 B^T against the
    pressure mass, with A the H1 Gram matrix on the free velocity DOFs.

    In the mixed regime the whole pressure space is used. In the Dirichlet
    regime constants lie in the kernel of B^T; pass ``exclude_constants``
    to restrict to zero-mean pressures.
    """
    dofmap = _dofmap(dofmap, partition)
    mesh, free = dofmap.mesh, dofmap.free_dofs
    Bf = assembly.assemble_divergence(mesh, dofmap).tocsc()[:, free]
    A = _sub(assembly.assemble_h1_gram(mesh, dofmap), free)
    Mp = assembly.assemble_pressure_mass(mesh, dofmap).toarray()
    X = spla.splu(A).solve(Bf.T.toarray())
    S = Bf @ X
    S = 0.5 * (S + S.T)
    w, v = la.eigh(S, Mp)
    scale = max(w[-1], 1e-300)
    if dofmap.regime == Regime.DIRICHLET:
        if not exclude_constants:
            raise PreconditionError(
                f"zero inf-sup eigenvalue detected ({w[0]:.3e}): constant pressures are in "
                "the kernel of the discrete gradient when Gamma_D is the whole boundary; "
                "exclude them (zero-mean pressures)")
        ones = np.ones(len(w))
        const = np.abs(v.T @ (Mp @ ones)) / np.sqrt(ones @ Mp @ ones)
        keep = np.flatnonzero(const < 0.5)
        w, v = w[keep], v[:, keep]
    if w[0] <= 1e-12 * scale:
        raise PreconditionError(f"inf-sup eigenvalue {w[0]:.3e} is zero: unstable pair")
    return ConstantReport("infsup", float(np.sqrt(w[0])), float(w[0]), v[:, 0], mesh.h_max, level)


def rigid_kernel(dofmap, partition=None, extra_nodes=(), rtol=1e-9):
    """Dimension and basis of the strain-free velocities with zero trace on
    Gamma_D (plus any ``extra_nodes`` held fixed)."""
    dofmap = _dofmap(dofmap, partition)
    if len(extra_nodes):
        dofmap = dofmap.with_constrained_nodes(extra_nodes)
    mesh, free = dofmap.mesh, dofmap.free_dofs
    if len(free) == 0:
        return 0, np.zeros((0, dofmap.n_vel_dofs))
    E = _sub(assembly.assemble_strain_gram(mesh, dofmap), free)
    M = _sub(assembly.assemble_velocity_mass(mesh, dofmap), free)
    n = len(free)
    if n <= 2000:
        w, v = la.eigh(E.toarray(), M.toarray())
        top = w[-1]
        w, v = w[:4], v[:, :4]
    else:
        top = float(spla.eigsh(E, k=1, M=M, which="LA", v0=_start(n),
                               Minv=spla.LinearOperator((n, n), matvec=spla.splu(M).solve))[0][0])
        w, v = spla.eigsh(E, k=4, M=M, sigma=-1.0, which="LM", v0=_start(n))
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    keep = np.flatnonzero(w < rtol * top)
    basis = np.array([_expand(dofmap, free, v[:, k]) for k in keep]).reshape(-1, dofmap.n_vel_dofs)
    return len(keep), basis


# ------------------------------------------------ divergence right-inverse

@dataclass
class RightInverse:
    u: np.ndarray           # full velocity coefficients
    h1_norm: float
    data_norm: float        # ||f||_L2 (or of the lifted data)
    bound: float            # h1_norm / data_norm


def _min_norm_with_divergence(dofmap, rhs):
    """Least-H1-norm velocity with zero trace on Gamma_D and D u = rhs,
    where D = -B is the discrete divergence tested against P1."""
    mesh, free = dofmap.mesh, dofmap.free_dofs
    G = _sub(assembly.assemble_h1_gram(mesh, dofmap), free)
    Df = (-assembly.assemble_divergence(mesh, dofmap)).tocsc()[:, free].tocsr()
    pin = None
    if dofmap.regime == Regime.DIRICHLET:
        pin = np.ones(dofmap.n_pre_dofs)
    lu = _saddle_operator(G, Df, pin)
    extra = 0 if pin is None else 1
    sol = lu.solve(np.concatenate([np.zeros(len(free)), rhs, np.zeros(extra)]))
    return _expand(dofmap, free, sol[:len(free)])


def _pressure_coefficients(dofmap, f):
    if callable(f):
        return interpolate_pressure(dofmap, f)
    f = np.asarray(f, dtype=float)
    return np.full(dofmap.n_pre_dofs, float(f)) if f.ndim == 0 else f


def bogovskii_solve(dofmap, partition=None, f=0.0):
    """Velocity of least H1 norm with div u = f (tested against P1) and
    u = 0 on Gamma_D. ``f`` is a P1 coefficient vector, a scalar or a
    callable on the vertices."""
    dofmap = _dofmap(dofmap, partition)
    mesh = dofmap.mesh
    fc = _pressure_coefficients(dofmap, f)
    Mp = assembly.assemble_pressure_mass(mesh, dofmap)
    rhs = Mp @ fc
    f_l2 = float(np.sqrt(max(fc @ rhs, 0.0)))
    if dofmap.regime == Regime.DIRICHLET:
        total = float(rhs.sum())
        area = float(mesh.areas.sum())
        if abs(total) > 1e-10 * max(f_l2 * np.sqrt(area), 1e-300):
            raise IncompatibleDataError(
                f"∫ f dx = {total:.6g} ≠ 0: a divergence with zero boundary trace "
                "everywhere must have zero mean", defects=(total,))
    if not np.any(rhs):
        return RightInverse(np.zeros(dofmap.n_vel_dofs), 0.0, 0.0, 0.0)
    u = _min_norm_with_divergence(dofmap, rhs)
    norm = float(np.sqrt(u @ (assembly.assemble_h1_gram(mesh, dofmap) @ u)))
    return RightInverse(u, norm, f_l2, norm / f_l2)


def lift_divergence_free(dofmap, partition=None, h=None):
    """Discretely divergence-free velocity with trace h on Gamma_D.

    Starts from the least-H1 extension v of h and subtracts the
    right-inverse correction w with div w = div v, w = 0 on Gamma_D.
    """
    from .solver import minimal_h1_extension
    dofmap = _dofmap(dofmap, partition)
    if dofmap.regime != Regime.MIXED:
        raise PreconditionError("lift_divergence_free needs both Gamma_D and Gamma_N nonempty")
    mesh = dofmap.mesh
    zero = lambda x: np.zeros((len(x), 2))
    values = interpolate_boundary_velocity(dofmap, h or zero)
    gram = assembly.assemble_h1_gram(mesh, dofmap)
    v = minimal_h1_extension(dofmap, values, gram)
    if not np.any(v):
        return RightInverse(v, 0.0, 0.0, 0.0)
    div_v = -(assembly.assemble_divergence(mesh, dofmap) @ v)
    u = v - _min_norm_with_divergence(dofmap, div_v)
    u[dofmap.dirichlet_dofs] = values
    norm = float(np.sqrt(u @ (gram @ u)))
    data = float(np.sqrt(v @ (gram @ v)))
    return RightInverse(u, norm, data, norm / data)


# ---------------------------------------------------------------- sweeps

SWEEP_COLUMNS = ("level", "h_max", "quantity", "value")


def constant_sweep(quantities, levels=(0, 1, 2), L=2.0, H=1.0, nx0=8, ny0=4,
                   dirichlet_tags=(3, 4)):
    """Rows (level, h_max, quantity, value) on meshes nx0*2^k by ny0*2^k."""
    rows = []
    for k in levels:
        mesh = build_rect_mesh(L, H, nx0 * 2**k, ny0 * 2**k)
        dm = DofMap(mesh, partition_boundary(mesh, dirichlet_tags))
        for q in quantities:
            if q == "korn3":
                r = korn_constant(dm, level=k)
            elif q == "korn1":
                r = korn_first_constant(dm, level=k)
            elif q == "lambda1":
                r = lambda1(dm, level=k)
            elif q == "infsup":
                r = infsup_constant(dm, exclude_constants=dm.regime == Regime.DIRICHLET, level=k)
            else:
                raise ValueError(f"unknown quantity {q!r}")
            log.info("event=constant quantity=%s level=%d value=%.12g", q, k, r.value)
            rows.append((k, mesh.h_max, q, r.value))
    return rows
