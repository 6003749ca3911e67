"""Command-line interface.

JSON results go to stdout and log messages to stderr.  Exit codes:
validate 0 (all checks pass) / 1 (a check failed) / 2 (unreadable input);
solve 0 Converged / 3 Degenerated / 4 MaxIters, and 1 / 2 as for validate.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .admissibility import validate
from .errors import GausskraftError, InvalidInstance, NonPositiveDensity
from .functional import gauge_project, gradient_error
from .ingest import load_density
from .polytope import ProblemInstance, build, export_obj
from .serialization import FormatError, dumps, load_instance, write_json
from .solver import SolveConfig, SolveReport, solve, solve_refined
from .transport import duality_gap, lp_oracle, plan_from_polytope

log = logging.getLogger("gausskraft")

EXIT_OK, EXIT_FAILED, EXIT_PARSE = 0, 1, 2
SOLVE_EXIT = {"Converged": 0, "Degenerated": 3, "MaxIters": 4}


def _emit(obj) -> None:
    sys.stdout.write(dumps(obj))
    sys.stdout.flush()


def _checked_instance(path: str, exhaustive: bool = True) -> ProblemInstance:
    """Load and validate; raises InvalidInstance with the report on failure."""
    instance = load_instance(path)
    report = validate(instance, exhaustive=exhaustive)
    if not report.ok:
        raise InvalidInstance("instance fails: " + ", ".join(report.failures()), report)
    return instance


def solution_dict(instance: ProblemInstance, report: SolveReport, config: SolveConfig) -> dict:
    gap: Optional[float] = None
    try:
        P = build(instance, report.log_radii)
        if P.origin_interior:
            gap = duality_gap(instance, P, config.quad_tol)
    except GausskraftError:
        pass
    return {
        "log_radii": report.log_radii,
        "radii": np.exp(report.log_radii),
        "Q": report.Q_star,
        "residual": report.residual,
        "cell_areas": report.cell_areas,
        "duality_gap": gap,
        "status": report.status,
        "iterations": report.iterations,
        "witness": report.witness,
        "config": config.to_dict(),
    }


def cmd_validate(args) -> int:
    instance = load_instance(args.instance)
    report = validate(instance, exhaustive=not args.no_exhaustive)
    _emit(report.to_dict())
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_solve(args) -> int:
    if args.force:
        instance = load_instance(args.instance)
    else:
        instance = _checked_instance(args.instance)
    config = SolveConfig(max_iters=args.max_iters, mass_tol=args.tol)
    report = solve(instance, config, check=not args.force)
    log.info("solve: %s after %d iterations, residual %.3g", report.status, report.iterations, report.residual)
    sol = solution_dict(instance, report, config)
    if args.out:
        write_json(args.out, sol)
    if args.obj:
        if instance.dimension != 2:
            log.warning("--obj ignored: meshes are only written for dimension 2")
        else:
            Path(args.obj).write_text(export_obj(build(instance, report.log_radii)))
    _emit(sol)
    return SOLVE_EXIT[report.status]


def cmd_refine(args) -> int:
    density = load_density(args.density)
    config = SolveConfig(max_iters=args.max_iters, mass_tol=args.tol)
    levels = solve_refined(density, args.levels, config)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    summary = {"density": density.to_dict(), "levels": []}
    prev_q = None
    for lv in levels:
        if out:
            write_json(out / f"level_{lv.level}.json", solution_dict(lv.instance, lv.report, config))
        summary["levels"].append(
            {
                "level": lv.level,
                "K": lv.instance.K,
                "status": lv.report.status,
                "Q": lv.report.Q_star,
                "Q_change": None if prev_q is None else abs(lv.report.Q_star - prev_q),
                "sphere_deviation": lv.sphere_deviation,
                "radial_change": lv.change_from_previous,
            }
        )
        prev_q = lv.report.Q_star
    if out:
        write_json(out / "summary.json", summary)
    _emit(summary)
    statuses = {lv.report.status for lv in levels}
    return EXIT_OK if statuses == {"Converged"} else SOLVE_EXIT[sorted(statuses - {"Converged"})[0]]


def cmd_oracle(args) -> int:
    instance = _checked_instance(args.instance)
    report = solve(instance, SolveConfig(), check=False)
    plan = plan_from_polytope(build(instance, report.log_radii))
    oracle = lp_oracle(instance, args.samples, args.seed)
    semi = plan.total_cost
    _emit(
        {
            "lp_value": oracle.value,
            "semidiscrete_value": semi,
            "relative_gap": abs(oracle.value - semi) / max(abs(semi), 1e-300),
            "samples": args.samples,
            "seed": args.seed,
            "solve_status": report.status,
        }
    )
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    instance = _checked_instance(args.instance, exhaustive=False)
    rng = np.random.default_rng(args.seed)
    errors = []
    for _ in range(args.points):
        r = gauge_project(instance, rng.normal(scale=args.scale, size=instance.K))
        errors.append(gradient_error(instance, r, args.eps))
    worst = max(errors)
    _emit({"eps": args.eps, "errors": errors, "max_relative_error": worst, "pass": worst < args.threshold})
    return EXIT_OK if worst < args.threshold else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gausskraft", description="Polytopes with prescribed integral Gauss curvature.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check the admissibility conditions")
    v.add_argument("instance")
    v.add_argument("--no-exhaustive", action="store_true", help="skip the subset-cone enumeration")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("solve", help="minimize the functional")
    s.add_argument("instance")
    s.add_argument("--tol", type=float, default=1e-8, help="mass tolerance relative to the sphere measure")
    s.add_argument("--max-iters", type=int, default=500)
    s.add_argument("--out", help="write the solution JSON here")
    s.add_argument("--obj", help="write the polytope as Wavefront OBJ (dimension 2)")
    s.add_argument("--force", action="store_true", help="solve even if validation fails")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("refine", help="solve discretizations of a density at increasing levels")
    r.add_argument("density", help="density JSON file, or 'uniform' / 'bump'")
    r.add_argument("--levels", type=int, default=3)
    r.add_argument("--out", help="directory for per-level solutions and summary.json")
    r.add_argument("--tol", type=float, default=1e-8)
    r.add_argument("--max-iters", type=int, default=500)
    r.set_defaults(func=cmd_refine)

    o = sub.add_parser("oracle", help="compare the LP value with the semi-discrete cost")
    o.add_argument("instance")
    o.add_argument("--samples", type=int, default=320, help="number of sample normals (a partition size)")
    o.add_argument("--seed", type=int, default=None, help="random rotation of the samples")
    o.set_defaults(func=cmd_oracle)

    g = sub.add_parser("gradcheck", help="finite differences against the gradient")
    g.add_argument("instance")
    g.add_argument("--eps", type=float, default=1e-5)
    g.add_argument("--points", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--scale", type=float, default=0.3, help="spread of the random log radii")
    g.add_argument("--threshold", type=float, default=1e-3)
    g.set_defaults(func=cmd_gradcheck)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s"
    )
    try:
        return args.func(args)
    except FormatError as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    except InvalidInstance as exc:
        log.error("%s", exc)
        if exc.report is not None:
            _emit(exc.report.to_dict())
        return EXIT_FAILED
    except (NonPositiveDensity, GausskraftError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
