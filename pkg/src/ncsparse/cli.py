"""
Command line interface.

Commands
--------
min-eig, min-trace
    Solve a dense or sparse relaxation and print a JSON report.
detect-sparsity
    Print the clique pattern of a problem.
extract
    Solve an eigenvalue relaxation and run the sparse GNS extraction.
reproduce-tables
    Rerun the stored benchmark rows and diff them against published values.

Exit codes: 0 success, 2 parse error, 3 pattern or coverage error,
4 solver failure, 5 extraction unavailable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile

from . import bench
from .gns import ExtractionUnavailable, NumericalFailure
from .ncpoly import NCPolynomial, ParseError, parse
from .relax import UnboundedBelow
from .sdpa import write_sdpa
from .sdpsolver import DEFAULT_SCHUR_LIMIT, SolverOptions, SolverStatus
from .sparsity import PatternError, assemble_pattern, check_rip

log = logging.getLogger("ncsparse")

EXIT_OK, EXIT_PARSE, EXIT_PATTERN, EXIT_SOLVER, EXIT_EXTRACT = 0, 2, 3, 4, 5

#: a stalled run whose residuals stay below this still counts as a result
REDUCED_ACCURACY = 1e-6


class CLIError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def _symmetrize(f: NCPolynomial, how: str) -> NCPolynomial:
    if f.is_symmetric(1e-12):
        return f
    if how == "sum":
        return f + f.star()
    if how == "half":
        return f.symmetrized()
    raise CLIError("objective is not symmetric; pass --symmetrize half|sum", EXIT_PARSE)


def _parse_field(text: str, n: int | None, what: str) -> NCPolynomial:
    try:
        return parse(text, n)
    except ParseError as exc:
        raise CLIError(f"{what}: {exc}", EXIT_PARSE) from exc


def load_problem(args) -> bench.Problem:
    """Problem from ``--family``, ``--problem`` or ``--objective``."""
    sym = args.symmetrize
    if args.problem:
        with open(args.problem) as fh:
            spec = json.load(fh)
        n = spec.get("nvars")
        f = _parse_field(spec["objective"], n, "objective")
        n = n or f.nvars
        S = [_parse_field(t, n, f"constraint {j + 1}")
             for j, t in enumerate(spec.get("constraints", []))]
        sym = spec.get("symmetrize", sym)
        prob = bench.Problem(spec.get("name", os.path.basename(args.problem)), n,
                             _symmetrize(f, sym), S, spec.get("cliques"))
    elif args.objective:
        f = _parse_field(args.objective, args.nvars, "objective")
        n = args.nvars or f.nvars
        S = [_parse_field(t, n, f"constraint {j + 1}")
             for j, t in enumerate(args.subject_to or [])]
        prob = bench.Problem("objective", n, _symmetrize(f, sym), S, None)
    elif args.family:
        if args.n is None:
            raise CLIError("--family needs --n", EXIT_PARSE)
        try:
            prob = bench.family_problem(args.family, args.n, args.constraints, args.seed)
        except ValueError as exc:
            raise CLIError(str(exc), EXIT_PARSE) from exc
        return prob
    else:
        raise CLIError("give one of --family, --problem or --objective", EXIT_PARSE)
    if args.constraints != "none":
        prob.constraints = prob.constraints + bench.constraint_family(args.constraints, prob.nvars)
    return prob


def _options(args) -> SolverOptions:
    return SolverOptions(feas_tol=args.feas_tol, gap_tol=args.gap_tol, max_iter=args.max_iter,
                         verbose=args.verbose)


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=2, default=_jsonable)
    if args.json:
        # write atomically so a half-written report never appears
        d = os.path.dirname(os.path.abspath(args.json))
        fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(text + "\n")
        os.replace(tmp, args.json)
    print(text)


def _jsonable(x):
    if hasattr(x, "tolist"):
        return x.tolist()
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    return str(x)


def _solve_cmd(args, kind: str, extract: bool) -> int:
    prob = load_problem(args)
    sparse = not args.dense
    try:
        R = bench.build_relaxation(prob, args.order, sparse, kind, args.ball, args.detect,
                                   args.localize)
    except PatternError as exc:
        raise CLIError(str(exc), EXIT_PATTERN) from exc
    except UnboundedBelow as exc:
        raise CLIError(f"trace is unbounded below: {exc}", EXIT_SOLVER) from exc
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_PARSE) from exc

    if args.export_sdpa:
        write_sdpa(R.sdp, args.export_sdpa)
        log.info("wrote %s", args.export_sdpa)
    if R.m_sdp > args.schur_limit:
        path = args.export_sdpa or f"{prob.name}.dat-s".replace(" ", "")
        if not args.export_sdpa:
            write_sdpa(R.sdp, path)
        _emit({"name": prob.name, "status": "Exported", "sdpa": path, "m_sdp": R.m_sdp,
               "n_sdp": R.n_sdp, "message": f"Schur dimension {R.m_sdp} exceeds "
               f"--schur-limit {args.schur_limit}; solve the exported file externally"}, args)
        return EXIT_OK

    rep = bench.run_problem(prob, args.order, sparse, kind, args.ball, extract, args.detect,
                            args.localize, _options(args), args.rank_tol)
    out = rep.to_dict()
    code = EXIT_OK
    if rep.status != SolverStatus.OPTIMAL.value:
        if rep.accuracy is not None and rep.accuracy <= REDUCED_ACCURACY:
            out["message"] = (f"solver stopped with {rep.status} at reduced accuracy "
                              f"{rep.accuracy:.1e}")
            log.warning(out["message"])
        else:
            code = EXIT_SOLVER
    if extract and code == EXIT_OK and rep.extraction and rep.extraction.get("available") is False:
        code = EXIT_EXTRACT
    _emit(out, args)
    return code


def cmd_min_eig(args) -> int:
    return _solve_cmd(args, "eig", args.extract)


def cmd_min_trace(args) -> int:
    return _solve_cmd(args, "trace", False)


def cmd_extract(args) -> int:
    return _solve_cmd(args, "eig", True)


def cmd_detect(args) -> int:
    prob = load_problem(args)
    try:
        pat = assemble_pattern(prob.objective, prob.constraints,
                               None if args.detect or prob.cliques is None else prob.cliques)
    except PatternError as exc:
        raise CLIError(str(exc), EXIT_PATTERN) from exc
    rip = check_rip(pat.cliques)
    rep = {"name": prob.name, "cliques": pat.cliques, "p": len(pat.cliques),
           "sizes": [len(c) for c in pat.cliques], "rip": rip.ok,
           "rip_violations": rip.violating,
           "assignment": {str(j + 1): k + 1 for j, k in sorted(pat.assignment.items())}}
    _emit(rep, args)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    def progress(row):
        mark = "PASS" if row["pass"] else "FAIL"
        print(f"[{mark}] {row['table']} {row['family']} n={row['n']} {row['mode']} "
              f"{row['constraints']}: bound={row['bound']:.6g} expected={row['expected']:g} "
              f"({row['seconds']:.1f}s)", file=sys.stderr)

    rows = bench.reproduce_tables(args.max_n, tuple(args.tables), _options(args),
                                  progress=progress)
    npass = sum(r["pass"] for r in rows)
    _emit({"rows": rows, "passed": npass, "total": len(rows)}, args)
    return EXIT_OK


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--family", choices=bench.FAMILIES)
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int, help="seed for random-cubic")
    g.add_argument("--problem", help="JSON file with objective, constraints, cliques")
    g.add_argument("--objective", help="polynomial text, e.g. 'x1^2 - x1*x2*x1'")
    g.add_argument("--nvars", type=int)
    g.add_argument("--subject-to", action="append", metavar="G",
                   help="constraint g >= 0; may be repeated")
    g.add_argument("--constraints", choices=["none", "polydisc", "polyball"], default="none")
    g.add_argument("--symmetrize", choices=["half", "sum"], default=None,
                   help="replace a non-symmetric objective f by (f+f*)/2 or f+f*")
    g.add_argument("--detect", action="store_true",
                   help="detect cliques even if the problem supplies them")


def _add_relax_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("relaxation")
    g.add_argument("--order", type=int)
    m = g.add_mutually_exclusive_group()
    m.add_argument("--sparse", action="store_true", default=True)
    m.add_argument("--dense", action="store_true")
    g.add_argument("--ball", type=float, metavar="N",
                   help="append N - sum X_j^2 per clique")
    g.add_argument("--localize", choices=["assigned", "all"], default="assigned")
    g.add_argument("--export-sdpa", metavar="PATH")
    g.add_argument("--schur-limit", type=int, default=DEFAULT_SCHUR_LIMIT)
    g.add_argument("--rank-tol", type=float, default=1e-6)


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--feas-tol", type=float, default=1e-8)
    g.add_argument("--gap-tol", type=float, default=1e-8)
    g.add_argument("--max-iter", type=int, default=200)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ncsparse", description=__doc__.split("\n")[1])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, helptext in [
        ("min-eig", cmd_min_eig, "lower bound on the smallest eigenvalue"),
        ("min-trace", cmd_min_trace, "lower bound on the smallest normalized trace"),
        ("extract", cmd_extract, "eigenvalue bound plus optimizer extraction"),
    ]:
        p = sub.add_parser(name, help=helptext)
        _add_problem_args(p)
        _add_relax_args(p)
        _add_solver_args(p)
        if name == "min-eig":
            p.add_argument("--extract", action="store_true")
        p.add_argument("--json", metavar="PATH", help="also write the report here")
        p.set_defaults(func=fn)

    p = sub.add_parser("detect-sparsity", help="print cliques and RIP status")
    _add_problem_args(p)
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("reproduce-tables", help="rerun the stored benchmark rows")
    p.add_argument("--max-n", type=int, default=12)
    p.add_argument("--tables", nargs="+", choices=["table1", "table2"],
                   default=["table1", "table2"])
    _add_solver_args(p)
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PatternError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PATTERN
    except (ExtractionUnavailable, NumericalFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXTRACT


if __name__ == "__main__":
    sys.exit(main())
