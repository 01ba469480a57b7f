"""Command-line entry point ``pseudospec``.

Each subcommand writes ``<out>/<subcommand>.json`` and echoes it on stdout.
Exit codes: 0 success, 2 bad input or violated precondition, 3 when
``conserve-check`` or ``local-check`` finds a violated invariant (the report
is still written).

Randomness comes from ``--seed`` alone.  Each consumer gets its own stream
``[seed, offset]`` with the offsets below, so adding samples in one place never
shifts another.
"""

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import io
from .bounds import distance_lower_bound, witness_higher_multiplicity
from .core_linalg import cluster_spectrum, default_cluster_tol, eigenvalues
from .exceptions import PseudospecError
from .homotopy import (
    chebyshev_grid,
    distinct_count_profile,
    local_conservation_check,
    multiplicity_constancy_check,
    refine_bifurcation,
    track,
)
from .polynomials import count_roots_mult_at_least, count_roots_mult_exact, count_distinct_roots
from .pseudospectrum import component_eigen_report, component_of, grid_pseudospectrum
from .structure import StructurePattern, sample_ball

SEED_GRID = 0
SEED_TEST = 1
SEED_WITNESS = 2

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VIOLATION = 3

MIN_GRID = 16


@dataclass
class RunConfig:
    subcommand: str
    matrix: str = None
    structure: str = None
    eps: float = None
    grid: tuple = (201, 201)
    samples: int = None
    seed: int = 0
    cluster_tol: float = None
    rank_tol: float = None
    out: str = "."
    emit_svg: bool = False
    emit_pgm: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _stream(seed, offset):
    return [int(seed), offset]


def _grid(values):
    if len(values) == 1:
        values = values * 2
    if len(values) != 2:
        raise _UsageError("--grid takes one or two integers")
    if min(values) < MIN_GRID:
        raise _UsageError(f"--grid dimensions must be at least {MIN_GRID}")
    return tuple(values)


def build_parser():
    p = _Parser(prog="pseudospec", description="Structured pseudospectra, root counting and eigenvalue homotopies.")
    sub = p.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_Parser)

    def common(sp, matrix=True):
        if matrix:
            sp.add_argument("--matrix", help="matrix JSON file")
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--cluster-tol", type=float, default=None)

    def region_opts(sp, samples_help):
        sp.add_argument("--structure", help="structure JSON file (omit for the unstructured set)")
        sp.add_argument("--eps", type=float)
        sp.add_argument("--grid", type=int, nargs="+", default=[201], metavar="N",
                        help="grid cells per axis: N or N_RE N_IM (default 201)")
        sp.add_argument("--box", type=float, nargs=4, default=None, metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))
        sp.add_argument("--samples", type=int, default=None, help=samples_help)
        sp.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True,
                        help="certify extra cells with the structured distance bound (default on)")
        sp.add_argument("--svg", action="store_true", help="also write an SVG contour plot")
        sp.add_argument("--pgm", action="store_true", help="also write a PGM raster")

    for name in ("pseudospectrum", "components"):
        sp = sub.add_parser(name, help=f"{name} of a matrix on a grid")
        common(sp)
        region_opts(sp, "ball samples for the structured grid (default 2000)")

    sp = sub.add_parser("conserve-check", help="check multiplicity conservation per component")
    common(sp)
    region_opts(sp, "number of test perturbations z (default 50)")
    sp.add_argument("--grid-samples", type=int, default=2000, help="ball samples for the grid (default 2000)")

    sp = sub.add_parser("track", help="follow eigenvalues of A + M_S(t z) for t in [0, 1]")
    common(sp)
    sp.add_argument("--structure")
    sp.add_argument("--z", help="perturbation JSON file {\"z\": [[re, im], ...]}")
    sp.add_argument("--steps", type=int, default=16)
    sp.add_argument("--max-disp", type=float, default=None)
    sp.add_argument("--eps", type=float, default=None, help="also rasterize the set at eps and check component sums")
    sp.add_argument("--grid", type=int, nargs="+", default=[201], metavar="N")
    sp.add_argument("--svg", action="store_true")

    sp = sub.add_parser("bifurcations", help="distinct-eigenvalue count u(t) and refined change points")
    common(sp)
    sp.add_argument("--structure")
    sp.add_argument("--z")
    sp.add_argument("--steps", type=int, default=257, help="Chebyshev samples on [0, 1] (default 257)")
    sp.add_argument("--rank-tol", type=float, default=None)

    sp = sub.add_parser("rootcount", help="root multiplicity counts of a polynomial from resultants")
    common(sp, matrix=False)
    sp.add_argument("--poly", help="polynomial JSON file")
    sp.add_argument("--rank-tol", type=float, default=None)

    sp = sub.add_parser("distance-bound", help="lower bound on the distance to higher multiplicity")
    common(sp)
    sp.add_argument("--k", type=int)
    sp.add_argument("--eps-hi", type=float, default=None)
    sp.add_argument("--eps-lo", type=float, default=None)
    sp.add_argument("--grid", type=int, nargs="+", default=[601], metavar="N")

    sp = sub.add_parser("local-check", help="eigenvalues of A' in eta-balls around those of A")
    common(sp)
    sp.add_argument("--matrix-prime", help="perturbed matrix JSON file")
    sp.add_argument("--eta", type=float)
    return p


def _need(args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_"), None) is None:
            raise _UsageError(f"{args.subcommand}: --{name} is required")


def _structure_or_none(args):
    return io.read_structure(args.structure) if args.structure else None


def _region(args, A, S, samples, seed):
    return grid_pseudospectrum(A, S, args.eps, box=args.box, resolution=_grid(args.grid), samples=samples,
                               seed=seed, refine=args.refine)


def _emit_plots(args, region, record=None):
    paths = {}
    if getattr(args, "pgm", False):
        paths["pgm"] = io.write_pgm(os.path.join(args.out, f"{args.subcommand}.pgm"), region)
    if getattr(args, "svg", False):
        paths["svg"] = io.write_svg(os.path.join(args.out, f"{args.subcommand}.svg"), region, record)
    return {k: os.path.basename(v) for k, v in paths.items()}


def _eigen_table(A, region, tol):
    rows = []
    for val, mult in cluster_spectrum(eigenvalues(A), tol).distinct:
        rows.append({"value": io.cpair(val), "multiplicity": int(mult), "component": component_of(val, region)})
    return rows


def cmd_pseudospectrum(args):
    _need(args, "matrix", "eps")
    A = io.read_matrix(args.matrix)
    S = _structure_or_none(args)
    samples = 2000 if args.samples is None else args.samples
    region = _region(args, A, S, samples, _stream(args.seed, SEED_GRID))
    report = {"region": io.region_report(region)}
    if args.subcommand == "components":
        tol = default_cluster_tol(A) if args.cluster_tol is None else args.cluster_tol
        report["eigenvalues"] = _eigen_table(A, region, tol)
    report["files"] = _emit_plots(args, region)
    return report, EXIT_OK


def cmd_conserve_check(args):
    _need(args, "matrix", "eps")
    A = io.read_matrix(args.matrix)
    S = _structure_or_none(args)
    region = _region(args, A, S, args.grid_samples, _stream(args.seed, SEED_GRID))
    test_S = S if S is not None else StructurePattern.full(A.shape[0])
    count = 50 if args.samples is None else args.samples
    zs = sample_ball(test_S.s, args.eps, strict=True, count=count, seed=_stream(args.seed, SEED_TEST))
    rep = component_eigen_report(A, test_S, args.eps, region, zs, args.cluster_tol)
    comps = [{"id": c.component_id, "baseline_sum": c.baseline_sum, "conserved": c.conserved,
              "nonempty_for_all_z": c.nonempty_for_all_z,
              "sums": sorted(set(v for _, v in c.per_z_sums))} for c in rep.components]
    report = {
        "region": io.region_report(region),
        "samples": count,
        "components": comps,
        "coverage_violations": [[k, m] for k, m in rep.coverage_violations],
        "baseline_unassigned": rep.baseline_unassigned,
        "conserved": rep.all_conserved,
        "nonempty": rep.all_nonempty,
        "ok": rep.ok,
    }
    report["files"] = _emit_plots(args, region)
    return report, EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_track(args):
    _need(args, "matrix", "structure", "z")
    A = io.read_matrix(args.matrix)
    S = io.read_structure(args.structure)
    z = io.read_z(args.z)
    rec = track(A, S, z, initial_steps=args.steps, max_disp=args.max_disp, eps=args.eps,
                cluster_tol=args.cluster_tol)
    report = {
        "z": [io.cpair(v) for v in rec.z],
        "t_samples": [float(t) for t in rec.t_samples],
        "paths": [[io.cpair(v) for v in row] for row in rec.paths],
        "step_residuals": [float(d) for d in rec.step_residuals],
        "distinct_counts": [int(c) for c in rec.distinct_counts],
        "patterns": [list(p) for p in rec.patterns],
        "bifurcation_candidates": [{"bracket": [float(a), float(b)], "u_before": u0, "u_after": u1}
                                   for (a, b), u0, u1 in rec.bifurcation_candidates],
        "cluster_tol": rec.cluster_tol,
        "endpoints": [io.cpair(v) for v in rec.endpoints],
    }
    if args.eps is not None:
        if np.linalg.norm(rec.z) >= args.eps:
            raise PseudospecError(f"||z|| = {np.linalg.norm(rec.z):.6g} must be below --eps {args.eps:g}")
        region = grid_pseudospectrum(A, S, args.eps, resolution=_grid(args.grid), seed=_stream(args.seed, SEED_GRID))
        verdict = multiplicity_constancy_check(rec, region, args.cluster_tol)
        report["region"] = io.region_report(region)
        report["constancy"] = {"intervals": verdict.intervals, "ok": verdict.ok, "violations": verdict.violations}
        report["files"] = _emit_plots(args, region, rec)
    return report, EXIT_OK


def cmd_bifurcations(args):
    _need(args, "matrix", "structure", "z")
    A = io.read_matrix(args.matrix)
    S = io.read_structure(args.structure)
    z = io.read_z(args.z)
    prof = distinct_count_profile(A, S, z, chebyshev_grid(args.steps), args.rank_tol, args.cluster_tol)
    refined = []
    for bracket in prof.brackets():
        res = refine_bifurcation(A, S, z, bracket, rank_tol=args.rank_tol)
        refined.append({"bracket": list(bracket), "found": res.found, "t_star": res.t_star,
                        "half_width": res.half_width, "u_before": res.u_before, "u_after": res.u_after})
    report = {
        "profile": [[t, u] for t, u in prof.pairs()],
        "candidates": prof.candidates(),
        "refined": refined,
        "disagreements": prof.disagreements(),
    }
    return report, EXIT_OK


def cmd_rootcount(args):
    _need(args, "poly")
    f = io.read_polynomial(args.poly)
    n = f.degree
    if n < 1:
        raise PseudospecError("polynomial must have degree at least 1")
    N = [count_roots_mult_at_least(f, k, args.rank_tol) for k in range(1, n + 1)]
    rho = [count_roots_mult_exact(f, k, args.rank_tol) for k in range(1, n + 1)]
    return {"degree": n, "u": count_distinct_roots(f, args.rank_tol), "N": N, "rho": rho}, EXIT_OK


def cmd_distance_bound(args):
    _need(args, "matrix", "k")
    A = io.read_matrix(args.matrix)
    res = distance_lower_bound(A, args.k, args.eps_lo, args.eps_hi, _grid(args.grid), args.cluster_tol)
    report = {
        "k": res.k,
        "m_of_A": res.m_of_A,
        "eps_star": res.eps_star,
        "bracket": [res.bracket[0], None if res.open_above else res.bracket[1]],
        "open_above": res.open_above,
        "slack": res.slack,
        "truncated": res.truncated,
        "box": [float(b) for b in res.box],
        "resolution": list(res.resolution),
    }
    w = None
    if res.k < A.shape[0]:
        w = witness_higher_multiplicity(A, res.k, seed=_stream(args.seed, SEED_WITNESS),
                                        cluster_tol=args.cluster_tol)
    if w is None:
        report.update(witness_distance=None, inequality_ok=True)
    else:
        report.update(witness_distance=w.distance, witness_multiplicity=w.multiplicity,
                      witness_matrix=io.matrix_to_json(w.X),
                      inequality_ok=bool(res.eps_star <= w.distance + res.slack))
    return report, EXIT_OK


def cmd_local_check(args):
    _need(args, "matrix", "matrix-prime", "eta")
    A = io.read_matrix(args.matrix)
    Ap = io.read_matrix(args.matrix_prime)
    v = local_conservation_check(A, Ap, args.eta, args.cluster_tol)
    report = {
        "passed": v.passed,
        "centers": [io.cpair(c) for c in v.centers],
        "expected": [int(m) for m in v.expected],
        "ball_sums": [int(m) for m in v.ball_sums],
        "uncovered": v.uncovered,
        "failed_ball": v.failed_ball,
    }
    return report, EXIT_OK if v.passed else EXIT_VIOLATION


COMMANDS = {
    "pseudospectrum": cmd_pseudospectrum,
    "components": cmd_pseudospectrum,
    "conserve-check": cmd_conserve_check,
    "track": cmd_track,
    "bifurcations": cmd_bifurcations,
    "rootcount": cmd_rootcount,
    "distance-bound": cmd_distance_bound,
    "local-check": cmd_local_check,
}


def _one_line(msg):
    return " ".join(str(msg).split())


def run(argv=None, stdout=None, stderr=None):
    """Run the CLI on ``argv`` and return the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand is None:
            raise _UsageError(f"a subcommand is required: {', '.join(COMMANDS)}")
        if not os.path.isdir(args.out):
            raise _UsageError(f"output directory {args.out!r} does not exist")
        report, code = COMMANDS[args.subcommand](args)
        path = io.write_json(os.path.join(args.out, f"{args.subcommand}.json"), report)
    except _UsageError as exc:
        print(f"pseudospec: error: {_one_line(exc)}", file=stderr)
        return EXIT_INPUT
    except (PseudospecError, ValueError, OSError) as exc:
        print(f"pseudospec: error: {_one_line(exc)}", file=stderr)
        return EXIT_INPUT
    stdout.write(io.dumps(report))
    if code == EXIT_VIOLATION:
        print(f"pseudospec: invariant violated, see {path}", file=stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
