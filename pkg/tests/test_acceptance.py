"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line
that conftest prints in the terminal summary."""
import numpy as np
import pytest

from conftest import random_data
from mixed_stokes import assembly
from mixed_stokes.analysis import (bogovskii_solve, infsup_constant, korn_constant, lambda1,
                                   lift_divergence_free, rigid_kernel)
from mixed_stokes.cli import monotone_discrepancies
from mixed_stokes.errors import IncompatibleDataError
from mixed_stokes.mesh import build_rect_mesh, partition_boundary
from mixed_stokes.solver import (StokesProblem, boundary_flux, saddle_nullity, solve,
                                 solve_dirichlet, solve_neumann, superposition_check)
from mixed_stokes.spaces import DofMap, interpolate_boundary_velocity
from mixed_stokes.validation import (ChannelParams, TEST_FUNCTIONS, asymptotic_study,
                                     channel_problem, compare_to_poiseuille, poiseuille,
                                     poiseuille_velocity, reflection_defect, solve_channel)

RESULTS = {}
PARAMS = ChannelParams(L=2.0, H=1.0, p_in=1.0, p_out=0.0, mu=1.0)
SEED = 20240611


def _record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def _problem(nx, ny, tags, **data):
    mesh = build_rect_mesh(PARAMS.L, PARAMS.H, nx, ny)
    return StokesProblem(mesh, partition_boundary(mesh, tags), PARAMS.mu, **data)


def _poiseuille_errors(sol):
    u, _ = poiseuille(sol.dofmap.velocity_nodes, PARAMS)
    _, p = poiseuille(sol.dofmap.mesh.vertices, PARAMS)
    return np.abs(sol.nodal_velocity - u).max(), np.abs(sol.p - p).max()


MESHES = [(1, 1), (2, 1), (3, 2), (4, 2), (8, 4), (16, 8), (32, 16), (64, 32)]


def test_criterion_01_mixed_poiseuille_exact():
    worst = 0.0
    for nx, ny in MESHES:
        prob = channel_problem(PARAMS, nx, ny, traction="poiseuille",
                               h=poiseuille_velocity(PARAMS))
        worst = max(worst, *_poiseuille_errors(solve(prob)))
    _record(1, worst < 1e-9, f"max nodal error {worst:.2e} over meshes 1x1..64x32 (tol 1e-9)")


def test_criterion_02_dirichlet_poiseuille_exact():
    worst, flux = 0.0, 0.0
    for nx, ny in [(2, 1), (8, 4), (32, 16)]:
        prob = _problem(nx, ny, {1, 2, 3, 4}, h=poiseuille_velocity(PARAMS))
        flux = max(flux, abs(boundary_flux(prob)[0]))
        sol = solve_dirichlet(prob)
        eu, _ = _poiseuille_errors(sol)
        _, p = poiseuille(prob.mesh.vertices, PARAMS)
        worst = max(worst, eu, np.abs(sol.p - (p - 0.5)).max())
    ok = worst < 1e-9 and flux < 1e-12
    _record(2, ok, f"max error {worst:.2e} (tol 1e-9); |flux| {flux:.2e} (tol 1e-12)")


def test_criterion_03_hydrostatic_exact():
    worst, defect = 0.0, 0.0
    for nx, ny in [(2, 1), (8, 4), (32, 16)]:
        for c in (1.0, -0.75, 3.0):
            sol = solve_neumann(_problem(nx, ny, set(), g=lambda x, n, c=c: -c * n))
            worst = max(worst, np.abs(sol.u).max(), np.abs(sol.p - c).max())
            defect = max(defect, np.abs(sol.stability_report["defects"]).max())
    ok = worst < 1e-9 and defect < 1e-12
    _record(3, ok, f"max error {worst:.2e} (tol 1e-9); rigid defects {defect:.2e} (tol 1e-12)")


def test_criterion_04_nullspace_dichotomy():
    got = [saddle_nullity(_problem(2, 1, tags)) for tags in ({1, 2, 3, 4}, set(), {3, 4})]
    _record(4, got == [1, 3, 0], f"nullities (i, ii, iii) on 2x1 = {got}, expected [1, 3, 0]")


@pytest.mark.slow
def test_criterion_05_normal_stress_channel():
    sol = solve_channel(PARAMS, 64, 32)
    p_mid = float(sol.pressure([[1.0, 0.5]])[0])
    coarse = [float(solve_channel(PARAMS, nx, ny).pressure([[1.0, 0.5]])[0])
              for nx, ny in ((16, 8), (32, 16))]
    richardson = p_mid + (p_mid - coarse[1]) / 3
    left, middle, right = compare_to_poiseuille(sol, PARAMS).pressure_band_deviation
    sym = reflection_defect(solve_channel(PARAMS, 64, 32, diagonal="mirrored"), PARAMS)
    ok = (abs(p_mid - 0.5) <= 0.02 and abs(richardson - 0.5) <= 0.02
          and left > middle and right > middle and sym < 1e-8)
    _record(5, ok, f"p(1,0.5)={p_mid:.12f} (Richardson {richardson:.12f}); "
                   f"band deviations {left:.4f}/{middle:.4f}/{right:.4f}; "
                   f"reflection defect {sym:.2e} (mirrored mesh)")


def test_criterion_06_superposition():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(5):
        f, g, h = random_data(rng)
        rep = superposition_check(_problem(16, 8, {3, 4}, f=f, g=g, h=h))
        worst = max(worst, rep.u_h1)
    _record(6, worst < 1e-9, f"max ||u - (u_f + u_g + u_h)||_H1 = {worst:.2e} (tol 1e-9)")


def test_criterion_07_stability_boundedness():
    rng = np.random.default_rng(SEED)
    levels = [(8, 4), (16, 8), (32, 16)]
    ratios = np.empty((20, len(levels)))
    for k in range(20):
        f, g, h = random_data(rng)
        for j, (nx, ny) in enumerate(levels):
            sol = solve(_problem(nx, ny, {3, 4}, f=f, g=g, h=h))
            ratios[k, j] = sol.stability_report["ratio"]
    per_data = float((ratios.max(axis=1) / ratios.min(axis=1)).max())
    sup = ratios.max(axis=0)
    across = float(sup.max() / sup.min())
    ok = per_data < 3 and across < 3
    _record(7, ok, f"worst per-data variation {per_data:.4f}, sup-ratio variation "
                   f"{across:.4f} across 8x4..32x16 (limit 3)")


def test_criterion_08_constants():
    levels = [(8, 4), (16, 8), (32, 16)]
    korn, beta, lam = [], [], []
    for nx, ny in levels:
        mesh = build_rect_mesh(PARAMS.L, PARAMS.H, nx, ny)
        d = DofMap(mesh, partition_boundary(mesh, {3, 4}))
        korn.append(korn_constant(d).value)
        beta.append(infsup_constant(d).value)
        lam.append(lambda1(d).value)
    kernels = {}
    for tags in (set(), {3}, {1}, {3, 4}, {1, 2, 3, 4}):
        mesh = build_rect_mesh(PARAMS.L, PARAMS.H, 4, 2)
        part = partition_boundary(mesh, tags)
        kernels[tuple(sorted(tags))] = rigid_kernel(DofMap(mesh, part))[0]
    expected = {k: (3 if not k else 0) for k in kernels}
    saturation = korn[-1] / korn[-2]
    ok = (all(b >= a for a, b in zip(korn, korn[1:])) and saturation < 1.05
          and min(beta) > 0.05 and min(lam) > 0
          and all(b <= a for a, b in zip(lam, lam[1:])) and kernels == expected)
    _record(8, ok, f"korn3 {np.round(korn, 4).tolist()} (ratio {saturation:.4f}); "
                   f"inf-sup {np.round(beta, 5).tolist()}; lambda1 {np.round(lam, 4).tolist()}; "
                   f"rigid kernels {list(kernels.values())}")


def test_criterion_09_bogovskii_and_lift():
    mesh = build_rect_mesh(PARAMS.L, PARAMS.H, 16, 8)
    mixed = DofMap(mesh, partition_boundary(mesh, {3, 4}))
    rep = bogovskii_solve(mixed, f=1.0)
    div = -(assembly.assemble_divergence(mesh, mixed) @ rep.u)
    target = assembly.assemble_pressure_mass(mesh, mixed) @ np.ones(mixed.n_pre_dofs)
    bog_ok = np.abs(div - target).max() < 1e-10
    try:
        bogovskii_solve(DofMap(mesh, partition_boundary(mesh, {1, 2, 3, 4})), f=1.0)
        raised = False
    except IncompatibleDataError:
        raised = True
    h = lambda x: np.column_stack([np.sin(np.pi * x[:, 0] / 2), x[:, 0] * x[:, 1]])
    lift = lift_divergence_free(mixed, h=h)
    bu = np.abs(assembly.assemble_divergence(mesh, mixed) @ lift.u).max()
    trace = np.array_equal(lift.u[mixed.dirichlet_dofs], interpolate_boundary_velocity(mixed, h))
    ok = bog_ok and raised and bu < 1e-10 and trace
    _record(9, ok, f"bogovskii(f=1) mixed ok={bog_ok}, full Dirichlet raises={raised}; "
                   f"lift ||Bu||={bu:.2e}, exact trace={trace}")


def test_criterion_10_asymptotics():
    rows = asymptotic_study((0.5, 0.25, 0.125), PARAMS, ny=16)
    lines, ok = [], True
    for phi in TEST_FUNCTIONS:
        sel = [r for r in rows if r.phi == phi]
        du = [r.discrepancy_u for r in sel]
        dp = [r.discrepancy_p for r in sel]
        good = monotone_discrepancies(du) and monotone_discrepancies(dp)
        ok &= good
        lines.append(f"phi={phi}: du {['%.2e' % v for v in du]} dp {['%.2e' % v for v in dp]}")
    one = [r for r in rows if r.phi == "1"][-1]
    detail = (f"velocity phi=1 moment {one.moment_u[0]:.5f} -> 1/12, pressure {one.moment_p:.6f}"
              f" -> 0.5; " + "; ".join(lines))
    _record(10, ok, detail)
