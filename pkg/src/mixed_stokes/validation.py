"""Channel-flow experiment: Poiseuille reference, normal-stress data,
comparison metrics and the thin-channel limit study."""
from dataclasses import dataclass, replace

import numpy as np

from . import assembly
from .errors import InvalidArgumentError
from .mesh import BOTTOM, LEFT, RIGHT, TOP, build_rect_mesh, partition_boundary
from .quadrature import TRI_BARY
from .solver import StokesProblem, solve
from .spaces import p2_values, physical_points


@dataclass(frozen=True)
class ChannelParams:
    L: float = 2.0
    H: float = 1.0
    p_in: float = 1.0
    p_out: float = 0.0
    mu: float = 1.0

    def __post_init__(self):
        if not (self.L > 0 and self.H > 0 and self.mu > 0):
            raise InvalidArgumentError(f"invalid channel parameters {self}")

    @property
    def pressure_gradient(self):
        return (self.p_out - self.p_in) / self.L


def poiseuille(x, params):
    """Parabolic velocity and linear pressure at points ``x`` (n, 2)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    dp = params.pressure_gradient
    u = np.zeros_like(x)
    u[:, 0] = -x[:, 1] * (params.H - x[:, 1]) / (2 * params.mu) * dp
    p = params.p_out * x[:, 0] / params.L + params.p_in * (1 - x[:, 0] / params.L)
    return u, p


def poiseuille_velocity(params):
    return lambda x: poiseuille(x, params)[0]


def poiseuille_pressure(params):
    return lambda x: poiseuille(x, params)[1]


def poiseuille_shear(x2, params):
    """Off-diagonal entry of 2 mu e(grad u~): (H - 2 x2)(p_in - p_out) / (2L)."""
    return (params.H - 2 * np.asarray(x2)) * (params.p_in - params.p_out) / (2 * params.L)


def poiseuille_traction(x, normal, params):
    """(-p~ I + 2 mu e(grad u~)) n at boundary points."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = np.atleast_2d(np.asarray(normal, dtype=float))
    _, p = poiseuille(x, params)
    tau = poiseuille_shear(x[:, 1], params)
    return np.column_stack([-p * n[:, 0] + tau * n[:, 1], tau * n[:, 0] - p * n[:, 1]])


def normal_stress_bc(x, params, normal=None, tol=1e-12):
    """-p_in n on the inlet x1 = 0 and -p_out n on the outlet x1 = L."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    scale = tol * max(params.L, 1.0)
    inlet = np.abs(x[:, 0]) <= scale
    outlet = np.abs(x[:, 0] - params.L) <= scale
    if not np.all(inlet | outlet):
        raise InvalidArgumentError("normal-stress data are defined on the inlet and outlet only")
    if normal is None:
        normal = np.where(inlet[:, None], [-1.0, 0.0], [1.0, 0.0])
    p = np.where(inlet, params.p_in, params.p_out)
    return -p[:, None] * np.atleast_2d(normal)


def channel_problem(params, nx, ny, traction="normal_stress", h=None, diagonal="right"):
    """Rectangle with no-slip walls (tags 3, 4) and traction on tags 1, 2."""
    mesh = build_rect_mesh(params.L, params.H, nx, ny, diagonal)
    part = partition_boundary(mesh, {BOTTOM, TOP})
    if traction == "normal_stress":
        g = lambda x, n: normal_stress_bc(x, params, n)
    elif traction == "poiseuille":
        g = lambda x, n: poiseuille_traction(x, n, params)
    else:
        raise InvalidArgumentError(f"unknown traction preset {traction!r}")
    return StokesProblem(mesh, part, params.mu, f=None, g=g, h=h)


def solve_channel(params, nx=64, ny=32, tol=1e-10, diagonal="right"):
    return solve(channel_problem(params, nx, ny, diagonal=diagonal), tol)


def reflection_defect(solution, params):
    """Largest violation over the velocity and pressure nodes of
    u1(x1, H-x2) = u1, u2(x1, H-x2) = -u2, p(x1, H-x2) = p."""
    x = solution.dofmap.velocity_nodes
    mirror = np.column_stack([x[:, 0], params.H - x[:, 1]])
    um = solution.velocity(mirror)
    n = solution.nodal_velocity
    v = solution.dofmap.mesh.vertices
    pm = solution.pressure(np.column_stack([v[:, 0], params.H - v[:, 1]]))
    return float(max(np.abs(n[:, 0] - um[:, 0]).max(), np.abs(n[:, 1] + um[:, 1]).max(),
                     np.abs(solution.p - pm).max()))


# ------------------------------------------------------------ comparison

COMPARISON_COLUMNS = ("x1", "x2", "u1", "u2", "p", "ut1", "ut2", "pt")


@dataclass
class Comparison:
    samples: np.ndarray             # rows follow COMPARISON_COLUMNS
    velocity_l2: float              # ||u - u~||_L2
    velocity_l2_relative: float
    pressure_l2: float
    pressure_band_deviation: tuple  # mean |p - p~| in the left, middle, right thirds
    centerline: np.ndarray          # (x1, p(x1, H/2), p~(x1))
    wall_shear: np.ndarray          # (x1, tau on bottom wall, tau~)
    max_sample_difference: float


def sample_grid(params, nx=41, ny=21):
    xs = np.linspace(0, params.L, nx)
    ys = np.linspace(0, params.H, ny)
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()])


def compare_to_poiseuille(solution, params, points=None):
    dofmap = solution.dofmap
    mesh = dofmap.mesh
    points = sample_grid(params) if points is None else np.asarray(points, dtype=float)
    u = solution.velocity(points)
    p = solution.pressure(points)
    ut, pt = poiseuille(points, params)
    samples = np.column_stack([points, u, p, ut, pt])

    x = physical_points(mesh, TRI_BARY)
    w = assembly._weights(mesh)
    phi = p2_values(TRI_BARY)
    uq = np.einsum("qa,tac->tqc", phi, solution.nodal_velocity[dofmap.cell_nodes])
    pq = np.einsum("qk,tk->tq", TRI_BARY, solution.p[dofmap.cell_pre_dofs])
    utq, ptq = poiseuille(x.reshape(-1, 2), params)
    utq = utq.reshape(uq.shape)
    ptq = ptq.reshape(pq.shape)
    du2 = np.einsum("tq,tqc->", w, (uq - utq) ** 2)
    ref2 = np.einsum("tq,tqc->", w, utq ** 2)
    dp2 = np.einsum("tq,tq->", w, (pq - ptq) ** 2)

    bands = []
    for lo, hi in ((0, 1 / 3), (1 / 3, 2 / 3), (2 / 3, 1)):
        x1 = x[..., 0] / params.L
        sel = (x1 >= lo) & (x1 < hi) if hi < 1 else (x1 >= lo)
        bands.append(float(np.sum(w[sel] * np.abs(pq - ptq)[sel]) / np.sum(w[sel])))

    xs = np.linspace(0, params.L, 81)
    mid = np.column_stack([xs, np.full_like(xs, params.H / 2)])
    centerline = np.column_stack([xs, solution.pressure(mid), poiseuille(mid, params)[1]])

    verts = mesh.vertices
    bottom = np.flatnonzero(np.abs(verts[:, 1]) < 1e-12 * params.H)
    bottom = bottom[np.argsort(verts[bottom, 0])]
    tau = solution.viscous_stress_at_vertices()[bottom, 0, 1]
    wall = np.column_stack([verts[bottom, 0], tau, poiseuille_shear(verts[bottom, 1], params)])

    diff = np.abs(np.column_stack([u - ut, p - pt]))
    return Comparison(
        samples=samples,
        velocity_l2=float(np.sqrt(du2)),
        velocity_l2_relative=float(np.sqrt(du2 / ref2)) if ref2 > 0 else float(np.sqrt(du2)),
        pressure_l2=float(np.sqrt(dp2)),
        pressure_band_deviation=tuple(bands),
        centerline=centerline,
        wall_shear=wall,
        max_sample_difference=float(diff.max()),
    )


def interpolated_poiseuille_solution(params, nx, ny):
    """Solution object holding the nodal interpolant of the Poiseuille pair."""
    from .solver import Solution
    from .spaces import interpolate_pressure, interpolate_velocity
    problem = channel_problem(params, nx, ny)
    d = problem.dofmap
    return Solution(d, params.mu, interpolate_velocity(d, poiseuille_velocity(params)),
                    interpolate_pressure(d, poiseuille_pressure(params)),
                    problem.regime, 0.0, 0.0)


# ----------------------------------------------------------- asymptotics

TEST_FUNCTIONS = {
    "1": lambda y: np.ones(len(y)),
    "y1": lambda y: y[:, 0],
    "y2": lambda y: y[:, 1],
    "y1y2": lambda y: y[:, 0] * y[:, 1],
}

ASYMPTOTIC_COLUMNS = ("H", "phi", "moment_u", "moment_p", "limit_u", "limit_p",
                      "discrepancy_u", "discrepancy_p")


@dataclass
class AsymptoticRow:
    H: float
    phi: str
    moment_u: np.ndarray     # rescaled velocity moment, 2 components
    moment_p: float
    limit_u: np.ndarray
    limit_p: float

    @property
    def discrepancy_u(self):
        return float(np.linalg.norm(self.moment_u - self.limit_u))

    @property
    def discrepancy_p(self):
        return abs(self.moment_p - self.limit_p)


def limit_moments(params, phi):
    """Integrals over the unit square of the limit fields against ``phi``.

    The limit velocity is (dp y2 (1 - y2) / (2 mu), 0) with dp = p_in - p_out
    and the limit pressure p_out y1 + p_in (1 - y1); both are polynomial, so
    the degree-4 rule on a 2-triangle split of the square is exact for the
    test functions used here.
    """
    sq = build_rect_mesh(1.0, 1.0, 1, 1)
    y = physical_points(sq, TRI_BARY).reshape(-1, 2)
    w = assembly._weights(sq).ravel()
    dp = params.p_in - params.p_out
    u0 = dp * y[:, 1] * (1 - y[:, 1]) / (2 * params.mu)
    p0 = params.p_out * y[:, 0] + params.p_in * (1 - y[:, 0])
    ph = phi(y)
    return np.array([np.sum(w * u0 * ph), 0.0]), float(np.sum(w * p0 * ph))


def rescaled_moments(solution, params, phi):
    """(1/|Omega|) int (L/H^2) u phi(x1/L, x2/H) dx and the pressure analogue."""
    dofmap = solution.dofmap
    mesh = dofmap.mesh
    x = physical_points(mesh, TRI_BARY)
    w = assembly._weights(mesh)
    y = (x.reshape(-1, 2) / [params.L, params.H])
    ph = phi(y).reshape(w.shape)
    uq = np.einsum("qa,tac->tqc", p2_values(TRI_BARY), solution.nodal_velocity[dofmap.cell_nodes])
    pq = np.einsum("qk,tk->tq", TRI_BARY, solution.p[dofmap.cell_pre_dofs])
    area = params.L * params.H
    mu_ = params.L / params.H**2 * np.einsum("tq,tq,tqc->c", w, ph, uq) / area
    mp_ = float(np.einsum("tq,tq,tq->", w, ph, pq) / area)
    return mu_, mp_


def thin_channel_problem(params, ny=16, aspect=1.0):
    """Mesh policy: ny fixed, nx = round(ny L / H / aspect) so cells keep
    their shape in rescaled coordinates. Traction -p~ n on inlet/outlet."""
    nx = int(round(ny * params.L / params.H / aspect))
    mesh = build_rect_mesh(params.L, params.H, nx, ny)
    part = partition_boundary(mesh, {BOTTOM, TOP})
    g = lambda x, n: -poiseuille(x, params)[1][:, None] * n
    return StokesProblem(mesh, part, params.mu, g=g)


def asymptotic_study(H_list, params=ChannelParams(), ny=16, aspect=1.0,
                     test_functions=None, tol=1e-10):
    H_list = [float(h) for h in H_list]
    if not H_list or any(h <= 0 for h in H_list) or any(b >= a for a, b in zip(H_list, H_list[1:])):
        raise InvalidArgumentError("H_list must be positive and strictly decreasing")
    test_functions = TEST_FUNCTIONS if test_functions is None else test_functions
    rows = []
    for H in H_list:
        p = replace(params, H=H)
        try:
            sol = solve(thin_channel_problem(p, ny, aspect), tol)
        except Exception as exc:
            raise type(exc)(f"asymptotic study failed at H={H}: {exc}") from exc
        for name, phi in test_functions.items():
            mu_, mp_ = rescaled_moments(sol, p, phi)
            lu, lp = limit_moments(p, phi)
            rows.append(AsymptoticRow(H, name, mu_, mp_, lu, lp))
    return rows


def asymptotic_table(rows):
    """Rows as tuples following ASYMPTOTIC_COLUMNS (velocity: x1 component)."""
    return [(r.H, r.phi, r.moment_u[0], r.moment_p, r.limit_u[0], r.limit_p,
             r.discrepancy_u, r.discrepancy_p) for r in rows]

