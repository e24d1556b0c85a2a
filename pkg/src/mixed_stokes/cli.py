"""Command-line front end.

Exit codes: 0 success, 2 incompatible boundary data, 1 anything else.
"""
import argparse
import logging
import os
import sys
from pathlib import Path

log = logging.getLogger("mixed_stokes")

EXIT_OK, EXIT_ERROR, EXIT_INCOMPATIBLE = 0, 1, 2


def _configure_logging():
    level = os.environ.get("STOKES_LOG", "").lower()
    if level in ("debug", "info"):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("level=%(levelname)s logger=%(name)s %(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.DEBUG if level == "debug" else logging.INFO)


def _load(args):
    from .config import load_config
    cfg = load_config(args.config) if args.config else load_config()
    if args.out:
        cfg.output.directory = args.out
    if args.tol is not None:
        cfg.solver.tol = args.tol
    return cfg


def _write_report(path, items):
    from .io import fmt17
    lines = [f"{k}={fmt17(v) if not isinstance(v, tuple) else ','.join(fmt17(x) for x in v)}"
             for k, v in items.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_solve(args):
    from .io import write_csv, write_solution_vtk
    from .mesh import Regime
    from .solver import solve_problem
    cfg = _load(args)
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    problem = cfg.problem()
    sol = solve_problem(problem, cfg.solver.tol, cfg.solver.method)
    report = {"regime": sol.regime.value, "residual_norm": sol.residual_norm,
              "divergence_residual": sol.divergence_residual}
    report.update(sol.stability_report)
    if not cfg.geometry.mesh_file:
        L, H = cfg.geometry.L, cfg.geometry.H
        report["p_center"] = float(sol.pressure([[L / 2, H / 2]])[0])
    if problem.regime == Regime.DIRICHLET:
        report["mean_pressure"] = float(problem.mesh.areas @ sol.p[problem.mesh.triangles].mean(axis=1))
    if "vtk" in cfg.output.formats:
        write_solution_vtk(out / "solution.vtk", sol)
    if "csv" in cfg.output.formats:
        V = problem.mesh.n_vertices
        rows = [(x, y, u[0], u[1], p) for (x, y), u, p in
                zip(problem.mesh.vertices, sol.nodal_velocity[:V], sol.p)]
        write_csv(out / "solution.csv", ("x1", "x2", "u1", "u2", "p"), rows)
    if "report" in cfg.output.formats:
        _write_report(out / "report.txt", report)
    print(f"solved regime ({sol.regime.value}); residual {sol.residual_norm:.3e}; "
          f"outputs in {out}")
    return EXIT_OK


def cmd_validate(args):
    """Normal-stress channel experiment compared with Poiseuille flow."""
    from .io import write_csv
    from .validation import (COMPARISON_COLUMNS, compare_to_poiseuille, reflection_defect,
                             solve_channel)
    cfg = _load(args)
    out = Path(cfg.output.directory)
    params = cfg.channel(cfg.asymptotics.p_in, cfg.asymptotics.p_out)
    sol = solve_channel(params, cfg.geometry.nx, cfg.geometry.ny, cfg.solver.tol)
    cmp = compare_to_poiseuille(sol, params)
    write_csv(out / "comparison.csv", COMPARISON_COLUMNS, cmp.samples)
    write_csv(out / "centerline.csv", ("x1", "p", "pt"), cmp.centerline)
    write_csv(out / "wall_shear.csv", ("x1", "tau", "tau_t"), cmp.wall_shear)

    L, H = params.L, params.H
    p_mid = float(sol.pressure([[L / 2, H / 2]])[0])
    p_ref = 0.5 * (params.p_in + params.p_out)
    left, middle, right = cmp.pressure_band_deviation
    ny = cfg.geometry.ny + cfg.geometry.ny % 2
    sym = reflection_defect(solve_channel(params, cfg.geometry.nx, ny, cfg.solver.tol,
                                          diagonal="mirrored"), params)
    dp = abs(params.p_in - params.p_out) or 1.0
    checks = {
        "p_center": abs(p_mid - p_ref) <= 0.02 * dp,
        "pressure_deviation_outer_gt_middle": left > middle and right > middle,
        "velocity_l2_relative_below_0.15": cmp.velocity_l2_relative < 0.15,
        "midplane_symmetry": sym < 1e-8,
    }
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    _write_report(out / "validate_report.txt", {
        "p_center": p_mid, "velocity_l2_relative": cmp.velocity_l2_relative,
        "pressure_band_deviation": cmp.pressure_band_deviation, "symmetry_defect": sym})
    return EXIT_OK if all(checks.values()) else EXIT_ERROR


def cmd_constants(args):
    from .analysis import SWEEP_COLUMNS, constant_sweep
    from .io import write_csv
    cfg = _load(args)
    a = cfg.analysis
    rows = constant_sweep(a.quantities, a.levels, cfg.geometry.L, cfg.geometry.H, a.nx0, a.ny0,
                          cfg.dirichlet_tags)
    path = write_csv(Path(cfg.output.directory) / "constants.csv", SWEEP_COLUMNS, rows)
    for r in rows:
        print(f"level={r[0]} quantity={r[2]} value={r[3]:.12g}")
    print(f"wrote {path}")
    return EXIT_OK


def monotone_discrepancies(values, floor=1e-12):
    """True if each value is strictly smaller than its predecessor; values at
    roundoff level count as already converged."""
    return all(b < a or (a <= floor and b <= floor) for a, b in zip(values, values[1:]))


def cmd_asymptotics(args):
    from .io import write_csv
    from .validation import ASYMPTOTIC_COLUMNS, asymptotic_study, asymptotic_table
    cfg = _load(args)
    a = cfg.asymptotics
    params = cfg.channel(a.p_in, a.p_out)
    rows = asymptotic_study(a.H_list, params, ny=a.ny, tol=cfg.solver.tol)
    path = write_csv(Path(cfg.output.directory) / "asymptotics.csv", ASYMPTOTIC_COLUMNS,
                     asymptotic_table(rows))
    ok = True
    for phi in dict.fromkeys(r.phi for r in rows):
        sel = [r for r in rows if r.phi == phi]
        for key in ("discrepancy_u", "discrepancy_p"):
            good = monotone_discrepancies([getattr(r, key) for r in sel])
            ok &= good
            print(f"{'PASS' if good else 'FAIL'} phi={phi} {key} decreasing")
    print(f"wrote {path}")
    return EXIT_OK if ok else EXIT_ERROR


def cmd_mesh_export(args):
    from .io import write_mesh_file, write_vtk
    cfg = _load(args)
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    mesh = cfg.build_mesh()
    write_vtk(out / "mesh.vtk", mesh)
    write_mesh_file(out / "mesh.txt", mesh)
    print(f"wrote {out / 'mesh.vtk'} and {out / 'mesh.txt'}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "validate": cmd_validate,
    "constants": cmd_constants,
    "asymptotics": cmd_asymptotics,
    "mesh-export": cmd_mesh_export,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="mixed-stokes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
        # BLAS is already loaded by the package import; limit the live pools too
        try:
            from threadpoolctl import threadpool_limits
            threadpool_limits(args.threads)
        except ImportError:
            log.debug("event=threads threadpoolctl unavailable; env vars only")
    _configure_logging()
    from .errors import IncompatibleDataError, StokesError
    try:
        return COMMANDS[args.command](args)
    except IncompatibleDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (StokesError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
