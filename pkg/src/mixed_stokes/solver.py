"""Solvers for the three boundary regimes of the Stokes problem.

* mixed (iii): Gamma_D and Gamma_N both have positive length; (u, p) is unique.
* Dirichlet (i): p is unique up to a constant; pinned to zero mean.
* traction (ii): u is unique up to a rigid motion; pinned to be
  H1-orthogonal to the rigid modes.

Gauge conditions are imposed with Lagrange multiplier rows appended to the
symmetric saddle matrix.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly
from .errors import IncompatibleDataError, NumericalBreakdownError, PreconditionError
from .mesh import Regime, boundary_rule
from .quadrature import TRI_BARY
from .spaces import (DofMap, evaluate_pressure, evaluate_velocity, interpolate_boundary_velocity,
                     p2_gradients, physical_points, rigid_modes)

log = logging.getLogger("mixed_stokes")

DEFAULT_TOL = 1e-10
DIRECT_LIMIT = 200_000
COMPAT_TOL = 1e-8
PIVOT_RATIO = 1e-13


@dataclass
class StokesProblem:
    """Data of the boundary value problem.

    ``f(points)`` is the body force, ``g(points, normals)`` the traction on
    Gamma_N and ``h(points)`` the velocity on Gamma_D; all return (n, 2)
    arrays. ``None`` means zero.
    """
    mesh: object
    partition: object
    mu: float = 1.0
    f: object = None
    g: object = None
    h: object = None

    @cached_property
    def dofmap(self):
        return DofMap(self.mesh, self.partition)

    @property
    def regime(self):
        return self.partition.regime

    def with_data(self, **changes):
        new = StokesProblem(self.mesh, self.partition, self.mu, self.f, self.g, self.h)
        for k, v in changes.items():
            setattr(new, k, v)
        new.__dict__["dofmap"] = self.dofmap
        return new


@dataclass
class Solution:
    dofmap: DofMap
    mu: float
    u: np.ndarray
    p: np.ndarray
    regime: Regime
    residual_norm: float
    divergence_residual: float
    stability_report: dict = field(default_factory=dict)
    multipliers: np.ndarray = None
    iterations: int = 0

    def velocity(self, points):
        return evaluate_velocity(self.dofmap, self.u, points)

    def pressure(self, points):
        return evaluate_pressure(self.dofmap, self.p, points)

    @property
    def nodal_velocity(self):
        return self.u.reshape(-1, 2)

    def strain_rate_at_vertices(self):
        """e(grad u) at the vertices, averaged over adjacent triangles,
        shape (V, 2, 2)."""
        mesh = self.dofmap.mesh
        corners = np.eye(3)
        grads = p2_gradients(mesh, corners)                     # (T, 3, 6, 2)
        nodal = self.nodal_velocity[self.dofmap.cell_nodes]     # (T, 6, 2)
        gu = np.einsum("tkad,tac->tkcd", grads, nodal)           # du_c/dx_d
        e = 0.5 * (gu + np.swapaxes(gu, 2, 3))
        out = np.zeros((mesh.n_vertices, 2, 2))
        count = np.zeros(mesh.n_vertices)
        np.add.at(out, mesh.triangles, e)
        np.add.at(count, mesh.triangles, 1.0)
        return out / count[:, None, None]

    def viscous_stress_at_vertices(self):
        return 2.0 * self.mu * self.strain_rate_at_vertices()

    def stress_at_vertices(self):
        s = self.viscous_stress_at_vertices()
        s[:, 0, 0] -= self.p
        s[:, 1, 1] -= self.p
        return s


# ---------------------------------------------------------------- norms

def h1_norm(dofmap, u, gram=None):
    gram = assembly.assemble_h1_gram(dofmap.mesh, dofmap) if gram is None else gram
    return float(np.sqrt(max(u @ (gram @ u), 0.0)))


def l2_pressure_norm(dofmap, p, mass=None):
    mass = assembly.assemble_pressure_mass(dofmap.mesh, dofmap) if mass is None else mass
    return float(np.sqrt(max(p @ (mass @ p), 0.0)))


def l2_norm_of(func, mesh):
    """L2 norm over the domain of a vector field given as a callable."""
    if func is None:
        return 0.0
    x = physical_points(mesh, TRI_BARY).reshape(-1, 2)
    vals = assembly._eval(func, "body force f", x).reshape(mesh.n_triangles, -1, 2)
    w = assembly._weights(mesh)
    return float(np.sqrt(np.einsum("tq,tqc,tqc->", w, vals, vals)))


def boundary_l2_norm_of(g, mesh, tags, order=5):
    if g is None or not tags:
        return 0.0
    rule = boundary_rule(mesh, tags, order)
    vals = assembly._eval(g, "traction g", rule.points, rule.normals)
    return float(np.sqrt(np.sum(rule.weights * np.sum(vals**2, axis=1))))


def minimal_h1_extension(dofmap, values, gram=None):
    """Velocity of least H1 norm whose constrained DOFs equal ``values``.

    Its H1 norm is the discrete counterpart of the trace quotient norm of
    the boundary data.
    """
    gram = assembly.assemble_h1_gram(dofmap.mesh, dofmap) if gram is None else gram
    d, free = dofmap.dirichlet_dofs, dofmap.free_dofs
    u = np.zeros(dofmap.n_vel_dofs)
    u[d] = values
    if len(d) and len(free) and np.any(values):
        G = gram.tocsc()
        u[free] = spla.spsolve(G[:, free].tocsr()[free].tocsc(), -(G[:, d].tocsr()[free] @ values))
    return u


# ---------------------------------------------------------- linear solve

def saddle_matrix(system):
    """Sparse symmetric [[A, B^T, Cv^T], [B, 0, Cp^T], [Cv, Cp, 0]]."""
    nv, npre, k = system.A.shape[0], system.B.shape[0], system.n_pins
    blocks = [[system.A, system.B.T], [system.B, None]]
    if k:
        cv = np.zeros((k, nv)) if system.pin_vel is None else system.pin_vel
        cp = np.zeros((k, npre)) if system.pin_pre is None else system.pin_pre
        blocks[0].append(sp.csr_matrix(cv).T)
        blocks[1].append(sp.csr_matrix(cp).T)
        blocks.append([sp.csr_matrix(cv), sp.csr_matrix(cp), None])
    return sp.bmat(blocks, format="csc")


def _rhs(system):
    return np.concatenate([system.rhs_vel, system.rhs_pre, np.zeros(system.n_pins)])


def _direct(K, b, tol):
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise NumericalBreakdownError(f"factorization failed: {exc}",
                                      diagnostics={"n": K.shape[0]}) from exc
    piv = np.abs(lu.U.diagonal())
    ratio = piv.min() / piv.max()
    if ratio < PIVOT_RATIO:
        raise NumericalBreakdownError(
            "saddle matrix is numerically singular; a nullspace is not pinned",
            diagnostics={"pivot_ratio": ratio, "n": K.shape[0]})
    x = lu.solve(b)
    history = []
    bnorm = np.linalg.norm(b)
    for _ in range(3):
        r = b - K @ x
        history.append(np.linalg.norm(r) / bnorm)
        if history[-1] <= tol:
            break
        x += lu.solve(r)
    return x, history


def _block_preconditioner(system, mu):
    """Block-diagonal preconditioner: ILU of A for velocity, the pressure
    mass matrix scaled by 1/(2 mu) for pressure, and a scalar Schur
    estimate for each gauge row."""
    nv, npre, k = system.A.shape[0], system.B.shape[0], system.n_pins
    ilu = spla.spilu(system.A.tocsc(), drop_tol=1e-5, fill_factor=20)
    mp = system.extras.get("pressure_mass")
    mp_lu = spla.splu((mp / (2.0 * mu)).tocsc())
    pin_scale = np.ones(k)
    if k:
        cv = np.zeros((k, nv)) if system.pin_vel is None else system.pin_vel
        cp = np.zeros((k, npre)) if system.pin_pre is None else system.pin_pre
        pin_scale = np.maximum(np.sum(cv**2, axis=1) + np.sum(cp**2, axis=1), 1e-300)

    def apply(x):
        y = np.empty_like(x)
        y[:nv] = ilu.solve(x[:nv])
        y[nv:nv + npre] = mp_lu.solve(x[nv:nv + npre])
        y[nv + npre:] = x[nv + npre:] / pin_scale
        return y

    n = nv + npre + k
    return spla.LinearOperator((n, n), matvec=apply)


def _iterative(K, b, tol, system, mu, maxiter):
    history = []
    bnorm = np.linalg.norm(b)

    def callback(xk):
        history.append(np.linalg.norm(b - K @ xk) / bnorm)

    M = _block_preconditioner(system, mu)
    x, info = spla.gmres(K, b, rtol=tol, atol=0.0, restart=200, maxiter=maxiter, M=M,
                         callback=callback, callback_type="x")
    res = np.linalg.norm(b - K @ x) / bnorm
    if info != 0 or res > tol:
        raise NumericalBreakdownError(
            f"Krylov solve did not reach tol={tol:g} (residual {res:.3e})",
            history=history, diagnostics={"info": info, "n": K.shape[0]})
    return x, history


def linear_solve(system, tol=DEFAULT_TOL, method="auto", mu=1.0, maxiter=50):
    """Solve the (reduced, possibly pinned) saddle system.

    Returns ``(u_free, p, multipliers, residual, iterations)``.
    """
    K = saddle_matrix(system)
    b = _rhs(system)
    nv, npre = system.A.shape[0], system.B.shape[0]
    if not np.any(b):
        return np.zeros(nv), np.zeros(npre), np.zeros(system.n_pins), 0.0, 0
    if method == "auto":
        method = "direct" if K.shape[0] < DIRECT_LIMIT else "iterative"
    if method == "direct":
        x, history = _direct(K, b, tol)
    elif method == "iterative":
        x, history = _iterative(K, b, tol, system, mu, maxiter)
    else:
        raise ValueError(f"unknown linear solver method {method!r}")
    res = float(np.linalg.norm(b - K @ x) / np.linalg.norm(b))
    if not np.isfinite(res) or res > tol:
        raise NumericalBreakdownError(f"linear solve residual {res:.3e} exceeds tol={tol:g}",
                                      history=history, diagnostics={"method": method})
    log.debug("event=linear_solve method=%s n=%d residual=%.3e iterations=%d",
              method, K.shape[0], res, len(history))
    return x[:nv], x[nv:nv + npre], x[nv + npre:], res, len(history)


# -------------------------------------------------------------- regimes

def _constrained_system(problem, order=2):
    dofmap = problem.dofmap
    system = assembly.assemble_system(dofmap, problem.mu, problem.f, problem.g, order)
    zero = (lambda x: np.zeros((len(x), 2)))
    values = interpolate_boundary_velocity(dofmap, problem.h or zero)
    system = assembly.apply_dirichlet_lift(system, dofmap, values)
    system.extras["pressure_mass"] = assembly.assemble_pressure_mass(dofmap.mesh, dofmap)
    system.extras["dirichlet_values"] = values
    return system


def _require(problem, regime, name):
    if problem.regime != regime:
        raise PreconditionError(
            f"{name} needs regime ({regime.value}), got regime ({problem.regime.value})")


def _finish(problem, system, tol, method):
    dofmap = problem.dofmap
    u_free, p, lam, res, its = linear_solve(system, tol, method, problem.mu)
    u = system.full_velocity(u_free)
    div_res = float(np.linalg.norm(system.B @ u_free - system.rhs_pre))
    sol = Solution(dofmap=dofmap, mu=problem.mu, u=u, p=p, regime=problem.regime,
                   residual_norm=res, divergence_residual=div_res,
                   multipliers=lam, iterations=its)
    sol.stability_report = stability_report(problem, sol, system.extras["dirichlet_values"])
    log.info("event=solve regime=%s n_vel=%d n_pre=%d residual=%.3e ratio=%.6g",
             problem.regime.value, dofmap.n_vel_dofs, dofmap.n_pre_dofs, res,
             sol.stability_report["ratio"])
    return sol


def stability_report(problem, solution, dirichlet_values):
    """Solution norms against data norms.

    The traction is measured in L2(Gamma_N) and the boundary velocity by
    the H1 norm of its least-norm discrete extension.
    """
    dofmap = problem.dofmap
    mesh = dofmap.mesh
    gram = assembly.assemble_h1_gram(mesh, dofmap)
    u_h1 = h1_norm(dofmap, solution.u, gram)
    p_l2 = l2_pressure_norm(dofmap, solution.p)
    f_l2 = l2_norm_of(problem.f, mesh)
    g_l2 = boundary_l2_norm_of(problem.g, mesh, problem.partition.neumann_tags)
    lift = minimal_h1_extension(dofmap, dirichlet_values, gram)
    h_h1 = h1_norm(dofmap, lift, gram)
    lhs = 2.0 * problem.mu * u_h1 + p_l2
    data = f_l2 + g_l2 + h_h1
    ratio = lhs / data if data > 0 else (0.0 if lhs == 0 else float("inf"))
    return {"u_h1": u_h1, "p_l2": p_l2, "f_l2": f_l2, "g_l2": g_l2, "h_lift_h1": h_h1,
            "solution_norm": lhs, "data_norm": data, "ratio": ratio}


def solve(problem, tol=DEFAULT_TOL, method="auto"):
    """Mixed regime: unique (u, p), no gauge conditions."""
    _require(problem, Regime.MIXED, "solve")
    system = _constrained_system(problem)
    return _finish(problem, system, tol, method)


def boundary_flux(problem, order=5):
    """int_{dOmega} h . n dS for the Dirichlet data."""
    if problem.h is None:
        return 0.0, 0.0
    rule = boundary_rule(problem.mesh, problem.mesh.tags, order)
    vals = assembly._eval(problem.h, "boundary velocity h", rule.points)
    flux = float(np.sum(rule.weights * np.einsum("ij,ij->i", vals, rule.normals)))
    scale = float(np.sqrt(np.sum(rule.weights * np.sum(vals**2, axis=1))))
    return flux, scale


def solve_dirichlet(problem, tol=DEFAULT_TOL, method="auto"):
    """Dirichlet regime: checks zero net boundary flux and returns the
    zero-mean pressure representative."""
    _require(problem, Regime.DIRICHLET, "solve_dirichlet")
    flux, scale = boundary_flux(problem)
    if abs(flux) > COMPAT_TOL * max(scale, 1.0):
        raise IncompatibleDataError(
            f"incompatible Dirichlet data: ∫ h·n̂ dS = {flux:.6g} ≠ 0",
            defects=(flux,))
    system = _constrained_system(problem)
    mass = system.extras["pressure_mass"]
    system.pin_pre = (mass @ np.ones(mass.shape[0]))[None, :]
    sol = _finish(problem, system, tol, method)
    sol.stability_report["flux"] = flux
    return sol


def rigid_defects(problem, order=2):
    """(force_x, force_y, torque) = int f.r dx - int g.r dS for each rigid mode r."""
    dofmap = problem.dofmap
    modes = rigid_modes(dofmap).vectors
    load = assembly.volume_load(dofmap.mesh, dofmap, problem.f) \
        - assembly.traction_load(dofmap.mesh, dofmap, problem.g, problem.mesh.tags, order)
    return modes @ load


def solve_neumann(problem, tol=DEFAULT_TOL, method="auto"):
    """Traction regime: checks force and torque balance and returns the
    velocity representative H1-orthogonal to the rigid modes."""
    _require(problem, Regime.NEUMANN, "solve_neumann")
    mesh = problem.mesh
    defects = rigid_defects(problem)
    diam = float(np.ptp(mesh.vertices, axis=0).max())
    scale = (l2_norm_of(problem.f, mesh) + boundary_l2_norm_of(problem.g, mesh, mesh.tags)) \
        * (1.0 + diam)
    if np.any(np.abs(defects) > COMPAT_TOL * max(scale, 1.0)):
        raise IncompatibleDataError(
            "incompatible traction data: net force/torque "
            f"(Fx, Fy, M) = ({defects[0]:.6g}, {defects[1]:.6g}, {defects[2]:.6g}) ≠ 0",
            defects=defects)
    system = _constrained_system(problem)
    dofmap = problem.dofmap
    gram = assembly.assemble_h1_gram(mesh, dofmap)
    system.pin_vel = np.asarray((gram @ rigid_modes(dofmap).vectors.T).T)[:, dofmap.free_dofs]
    sol = _finish(problem, system, tol, method)
    sol.stability_report["defects"] = tuple(float(d) for d in defects)
    return sol


def solve_problem(problem, tol=DEFAULT_TOL, method="auto"):
    """Dispatch on the boundary regime."""
    return {Regime.MIXED: solve, Regime.DIRICHLET: solve_dirichlet,
            Regime.NEUMANN: solve_neumann}[problem.regime](problem, tol, method)


@dataclass
class SuperpositionReport:
    u_h1: float
    p_l2: float
    parts: dict


def superposition_check(problem, tol=DEFAULT_TOL, method="auto"):
    """Solve for f, g and h separately and compare the sum with the full solve."""
    _require(problem, Regime.MIXED, "superposition_check")
    parts = {
        "f": solve(problem.with_data(g=None, h=None), tol, method),
        "g": solve(problem.with_data(f=None, h=None), tol, method),
        "h": solve(problem.with_data(f=None, g=None), tol, method),
    }
    full = solve(problem, tol, method)
    du = full.u - sum(s.u for s in parts.values())
    dp = full.p - sum(s.p for s in parts.values())
    parts["full"] = full
    return SuperpositionReport(h1_norm(problem.dofmap, du),
                               l2_pressure_norm(problem.dofmap, dp), parts)


def saddle_nullity(problem, pinned=False, rtol=1e-10):
    """Dimension of the kernel of the constrained saddle matrix (dense; for
    coarse meshes)."""
    system = _constrained_system(problem)
    if pinned and problem.regime == Regime.DIRICHLET:
        mass = system.extras["pressure_mass"]
        system.pin_pre = (mass @ np.ones(mass.shape[0]))[None, :]
    elif pinned and problem.regime == Regime.NEUMANN:
        dofmap = problem.dofmap
        gram = assembly.assemble_h1_gram(dofmap.mesh, dofmap)
        system.pin_vel = np.asarray((gram @ rigid_modes(dofmap).vectors.T).T)[:, dofmap.free_dofs]
    K = saddle_matrix(system).toarray()
    s = np.linalg.svd(K, compute_uv=False)
    return int(np.sum(s <= rtol * s[0]))
