"""Command-line entry point: ``wgbrinkman {converge,solve,verify}``.

Exit codes: 0 success, 1 solver or check failure, 2 usage/config error.
"""
import argparse
import logging
import sys

import numpy as np

from . import analysis, io
from .assembly import assemble
from .benchmarks import example1_pressure, example1_problem, example1_velocity, lid_problem
from .config import load_config
from .exceptions import ConfigError, WGError
from .fespace import element_average, local_operators
from .mesh import build_structured
from .permeability import PermeabilitySpec
from .solver import solve

logger = logging.getLogger("wgbrinkman")


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text


def _common_solver_flags(p):
    p.add_argument("--config", help="key=value configuration file (flags override it)")
    p.add_argument("--order", type=int, help="velocity polynomial degree k (default 1)")
    p.add_argument("--stab-visc", dest="stab_visc", type=_on_off,
                   help="scale the stabilizer by mu (default on)")
    p.add_argument("--method", choices=("krylov_minres", "direct"))
    p.add_argument("--tol", type=float, help="relative residual tolerance (default 1e-10)")
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--preconditioner", choices=("none", "diag_A_pressure_mass"))


def build_parser():
    parser = argparse.ArgumentParser(prog="wgbrinkman",
                                     description="Weak Galerkin solver for the 2D Brinkman equations")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("converge", help="convergence study for the manufactured example")
    c.add_argument("--example", type=int, choices=(1,), default=1)
    c.add_argument("--a", type=float, help="amplitude of kappa_inv = a (sin 2 pi x + 1.1)")
    c.add_argument("--mu", type=float, help="viscosity")
    c.add_argument("--sizes", help="comma-separated mesh sizes n (h = 1/n)")
    c.add_argument("--diagonal", choices=("ne_sw", "nw_se"))
    c.add_argument("--kappa-sampling", dest="kappa_sampling", choices=("centroid", "quadrature"))
    c.add_argument("--out", help="CSV output path")
    _common_solver_flags(c)

    s = sub.add_parser("solve", help="lid-driven porous-media flow, VTK output")
    s.add_argument("--perm", help="constant:<v>, sine:<a>, raster:<path>, or a bundled raster name")
    s.add_argument("--mu", type=float, help="viscosity (default 0.01)")
    s.add_argument("--n", type=int, help="mesh size n for an n x n grid")
    s.add_argument("--lid", type=float, help="boundary speed g = (lid, 0)")
    s.add_argument("--top-only", dest="top_only", action="store_const", const="on",
                   help="apply g on y = 1 only (zero elsewhere)")
    s.add_argument("--diagonal", choices=("ne_sw", "nw_se"))
    s.add_argument("--traces", help="also write edge-midpoint trace velocities to this CSV")
    s.add_argument("--out", help="VTK output path")
    _common_solver_flags(s)

    v = sub.add_parser("verify", help="run the diagnostic suite")
    v.add_argument("--seed", type=int)
    v.add_argument("--n", type=int, help="mesh size for the randomized checks (default 8)")
    v.add_argument("--config")
    v.add_argument("--order", type=int)
    v.add_argument("--stab-visc", dest="stab_visc", type=_on_off)
    v.add_argument("--corrupt-edge-sign", dest="corrupt", action="store_true", help=argparse.SUPPRESS)
    return parser


def _config(args, keys, defaults=None):
    overrides = {k: getattr(args, k, None) for k in keys}
    return load_config(getattr(args, "config", None), overrides, defaults)


def cmd_converge(args):
    cfg = _config(args, ("a", "mu", "sizes", "order", "stab_visc", "method", "tol", "max_iter",
                         "preconditioner", "diagonal", "kappa_sampling", "out"))
    if not cfg.out:
        raise ConfigError("out", "an output CSV path is required")
    problem = example1_problem(cfg.a, cfg.mu, cfg.order, cfg.stab_visc, cfg.kappa_sampling)

    def progress(row, info):
        print(f"n={row.n:4d}  h={row.h:.4g}  |||e|||={row.e_tbar:.3e}  "
              f"L2proj={row.e_l2proj:.3e}  L2={row.e_l2:.3e}  p={row.e_press:.3e}  "
              f"({info.iterations} it)", flush=True)

    report = analysis.convergence_study(problem, cfg.sizes, example1_velocity, example1_pressure,
                                        cfg.solve_options(), cfg.diagonal, on_row=progress)
    io.write_csv(report, cfg.out)
    print(f"wrote {cfg.out}")
    if report.final_rates():
        print("final rates: " + ", ".join(f"{k} {v:.2f}" for k, v in report.final_rates().items()))
    if not report.complete:
        print(f"error: sweep incomplete: {report.failure}", file=sys.stderr)
        return 1
    return 0


def _write_traces(path, u):
    mesh = u.dofmap.mesh
    # at the midpoint s = 0, only the constant edge mode survives
    vals = u.trace[:, :, 0]
    with open(path, "w") as fh:
        fh.write("edge,x,y,u,v\n")
        for e, ((x, y), (a, b)) in enumerate(zip(mesh.edge_midpoints, vals)):
            fh.write(f"{e},{x:.10g},{y:.10g},{a:.6e},{b:.6e}\n")


def cmd_solve(args):
    cfg = _config(args, ("perm", "mu", "n", "lid", "top_only", "order", "stab_visc", "method",
                         "tol", "max_iter", "preconditioner", "diagonal", "out"),
                  defaults={"mu": 0.01, "problem": "lid_flow"})
    if not cfg.out:
        raise ConfigError("out", "an output VTK path is required")
    try:
        spec = PermeabilitySpec.parse(cfg.perm)
        kinv = spec.sampler()
    except WGError as exc:
        raise ConfigError("perm", str(exc)) from None
    problem = lid_problem(kinv, cfg.mu, cfg.lid, cfg.top_only, cfg.order, cfg.stab_visc)
    mesh = build_structured(cfg.n, cfg.diagonal)
    system = assemble(problem, mesh)
    print(f"mesh {cfg.n}x{cfg.n}: {mesh.n_elements} elements, {system.n_unknowns} unknowns", flush=True)
    u, p, report = solve(system, cfg.solve_options())
    ops = local_operators(mesh, cfg.order)
    vel = element_average(u, ops)
    kappa_cells = problem.element_kappa_inv(mesh)
    io.write_vtk(cfg.out, mesh, {"kappa_inv": kappa_cells, "pressure": p.element_integrals(ops) / mesh.areas},
                 {"velocity": vel}, title=f"lid flow mu={cfg.mu:g} perm={cfg.perm}")
    if args.traces:
        _write_traces(args.traces, u)
    speed = np.linalg.norm(vel, axis=1)
    print(f"solver: {report.method}, {report.iterations} iterations, "
          f"relative residual {report.residual:.2e}, {report.wall_time:.1f}s")
    print(f"pressure mean {report.pressure_mean:.2e}; max |b(u_h, q)| {report.divergence_residual:.2e}")
    print(f"max cell speed {speed.max():.4g}; kappa_inv range [{kappa_cells.min():.3g}, {kappa_cells.max():.3g}]")
    print(f"wrote {cfg.out}")
    return 0


def run_verify(seed=0, order=1, n=8, stab_visc=True, corrupt=False, out=print):
    """Run every diagnostic; returns the list of :class:`CheckResult`."""
    rng = np.random.default_rng(seed)
    mesh = build_structured(n)
    problem = example1_problem(10.0, 1.0, order, stab_visc)
    flux_mesh = mesh
    if corrupt:
        # flip the sign of an interior edge of element 0
        j = int(np.flatnonzero(~mesh.boundary_mask[mesh.element_edges[0]])[0])
        flux_mesh = mesh.with_flipped_sign(0, j)
    checks = [
        lambda: analysis.verify_quadrature(),
        lambda: analysis.verify_commutativity(mesh, order, 100, rng),
        lambda: analysis.verify_flux_identity(problem, flux_mesh, 50, rng),
        lambda: analysis.verify_coercivity(problem, mesh, 200, rng),
        lambda: analysis.verify_divergence_free(problem, build_structured(4)),
    ]
    results = []
    for check in checks:
        try:
            res = check()
        except WGError as exc:
            res = analysis.CheckResult(getattr(check, "__name__", "check"), False, float("inf"), 0.0, str(exc))
        results.append(res)
        out(res.line())
    return results


def cmd_verify(args):
    cfg = _config(args, ("seed", "order", "stab_visc", "n"), defaults={"n": 8})
    results = run_verify(cfg.seed, cfg.order, cfg.n, cfg.stab_visc, args.corrupt)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


COMMANDS = {"converge": cmd_converge, "solve": cmd_solve, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
