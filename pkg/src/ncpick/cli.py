"""``ncpick`` command-line front end.

Exit codes: 0 success, 2 parse/config/usage error, 10 infeasible,
11 target not in the node's algebra, 12 asymptotic preconditions unmet,
13 numerical failure, 20 search budget exhausted, 30 verification failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io as nio
from . import kernel, verify
from .asymptotics import anp_norm, gamma_effective
from .errors import NotCoisometry, NotInAlgebra, NotIrreducible, NumericalError
from .pick import (BlockTarget, Tolerances, alg_member, bundle_from_matrix, feasible, np_norm,
                   np_norm_preconditioned, pick_matrix, preconditioned_bundle)
from .search import SearchConfig, deterministic_colrow, random_search
from .zoo import KINDS, NodeSpec, choi_point, choi_point_pick

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 10
EXIT_NOT_IN_ALGEBRA = 11
EXIT_ANP_PRECONDITION = 12
EXIT_NUMERICAL = 13
EXIT_BUDGET = 20
EXIT_VERIFY = 30

CHOI_GAP_TOL = 1e-10


class _Exit(Exception):
    def __init__(self, code: int, payload=None, message: str | None = None):
        super().__init__(message or "")
        self.code, self.payload, self.message = code, payload, message


def _tol(args) -> Tolerances:
    return Tolerances(rank_tol=args.rank_tol, psd_tol=args.psd_tol)


def _emit(args, payload: dict, command: str, started: str) -> None:
    sys.stdout.write(nio.dumps(payload))
    if getattr(args, "out", None):
        nio.write_json(args.out, payload)
        nio.write_manifest(args.out, command, _flags(args), getattr(args, "seed", None), started,
                           [args.out])


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _flags(args) -> dict:
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("func", "jobs")}


def _residuals_json(items) -> list[dict]:
    return [{"block": [a, b], "residual": r} for (a, b), r in items]


def _load_problem(args):
    X = nio.node_from_json(nio.read_json(args.node))
    Y = nio.target_from_json(nio.read_json(args.target))
    if Y.n != X.n:
        raise nio.ParseError(f"target blocks are {Y.n}x{Y.n} but the node has n = {X.n}")
    return X, Y


def cmd_feasible(args) -> int:
    started = nio.now_iso()
    X, Y = _load_problem(args)
    B = pick_matrix(X, _tol(args))
    try:
        f = feasible(B, Y, _tol(args))
    except NotInAlgebra as exc:
        raise _Exit(EXIT_NOT_IN_ALGEBRA, {"feasible": False, "margin": None,
                                          "algResiduals": _residuals_json(exc.offending)})
    _emit(args, {"feasible": f.feasible, "margin": f.margin, "rangeMargin": f.range_margin,
                 "algResiduals": _residuals_json(f.alg_residuals)}, "feasible", started)
    return EXIT_OK if f.feasible else EXIT_INFEASIBLE


def _grid(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad t-grid {text!r}") from exc


def _npnorm_anp(args, X, Y) -> dict:
    try:
        res = anp_norm(X, Y, args.t_grid)
    except (NotCoisometry, NotIrreducible) as exc:
        raise _Exit(EXIT_ANP_PRECONDITION, message=str(exc))
    if args.trace_csv:
        nio.write_trace_csv(args.trace_csv, res.trace)
    return {
        "anpTrace": [{"t": p.t, "npNorm": p.np_norm, "ratio": p.ratio} for p in res.trace],
        "targetNorm": res.target_norm,
        "ratio": res.trace[-1].ratio,
        "nonIncreasing": res.non_increasing(),
    }


def _npnorm_choi(args, X, Y) -> dict:
    n = X.n
    ref = choi_point(n)
    if X.mats.shape != ref.mats.shape or not np.allclose(X.mats, ref.mats, atol=1e-12):
        raise _Exit(EXIT_ANP_PRECONDITION, message="--choi-closed-form needs the Choi point node")
    points = []
    for t in args.t_grid:
        direct = np_norm(pick_matrix(X.scaled(t), _tol(args)), Y)
        closed = np_norm(bundle_from_matrix(choi_point_pick(n, t), _tol(args), X.scaled(t)), Y)
        points.append({"t": t, "npNorm": direct, "npNormClosedForm": closed,
                       "gap": abs(direct - closed)})
    gap = max(p["gap"] for p in points)
    return {"choiCheck": points, "targetNorm": Y.norm(), "maxGap": gap,
            "withinTolerance": gap <= CHOI_GAP_TOL}


def _preconditioner(args, B):
    if args.precondition == "auto":
        return gamma_effective(B.X, on_range=True, B=B, seed=args.seed).bestD
    return nio.matrix_from_json(nio.read_json(args.precondition), "preconditioner")


def cmd_npnorm(args) -> int:
    started = nio.now_iso()
    X, Y = _load_problem(args)
    try:
        if args.anp:
            payload = _npnorm_anp(args, X, Y)
        elif args.choi_closed_form:
            payload = _npnorm_choi(args, X, Y)
        else:
            B = pick_matrix(X, _tol(args))
            value = np_norm(B, Y)
            ny = Y.norm()
            payload = {"npNorm": value, "targetNorm": ny, "ratio": value / ny if ny else None}
            if args.precondition:
                D = _preconditioner(args, B)
                payload["npNormPreconditioned"] = np_norm_preconditioned(B, Y, D)
                payload["conditionPlain"] = B.condition()
                payload["conditionPreconditioned"] = preconditioned_bundle(B, D).condition()
    except NotInAlgebra as exc:
        raise _Exit(EXIT_NOT_IN_ALGEBRA, {"algResiduals": _residuals_json(exc.offending)})
    _emit(args, payload, "npnorm", started)
    if args.choi_closed_form and not payload["withinTolerance"]:
        return EXIT_NUMERICAL
    return EXIT_OK


def alg_member_payload(args):
    X = nio.node_from_json(nio.read_json(args.node))
    Z = nio.matrix_from_json(nio.read_json(args.matrix), "matrix")
    if Z.shape != (X.n, X.n):
        raise nio.ParseError(f"matrix must be {X.n}x{X.n}")
    B = pick_matrix(X, _tol(args))
    m = alg_member(Z, B)
    return {"member": m.member, "residual": m.residual, "rank": B.rank}


def cmd_alg_member(args) -> int:
    started = nio.now_iso()
    payload = alg_member_payload(args)
    _emit(args, payload, "alg-member", started)
    return EXIT_OK if payload["member"] else EXIT_NOT_IN_ALGEBRA


def _search_config(args) -> SearchConfig:
    if args.manifest:
        manifest = nio.read_json(args.manifest)
        if not isinstance(manifest, dict) or not isinstance(manifest.get("config"), dict):
            raise nio.ParseError(f"{args.manifest}: no 'config' object")
        data = dict(manifest["config"])
    elif args.config:
        data = nio.read_json(args.config)
        if not isinstance(data, dict):
            raise nio.ParseError(f"{args.config}: expected an object")
    else:
        data = {}
    for key in ("seed", "max_trials", "backend"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    try:
        return SearchConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise nio.ParseError(f"config: {exc}") from exc


def _best_json(result) -> dict:
    return {
        "success": result.success,
        "trials": result.trials,
        "failures": result.failures,
        "failureCounts": dict(sorted(result.failure_counts.items())),
        "maxRatio": result.max_ratio,
        "dominanceViolations": result.dominance_violations,
        "best": None if result.best is None else nio.record_to_json(result.best),
    }


def cmd_search(args) -> int:
    started = nio.now_iso()
    prefix = Path(args.out)
    if prefix.parent != Path("."):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path, best_path = f"{prefix}.csv", f"{prefix}.best.json"
    if args.deterministic:
        n, t = args.deterministic
        try:
            n = int(n)
        except ValueError as exc:
            raise nio.ParseError("--deterministic needs an integer n") from exc
        rec = deterministic_colrow(n, t)
        with nio.CsvLog(csv_path, nio.SEARCH_COLUMNS) as log:
            log.write(nio.record_row(rec))
        nio.write_json(best_path, {"deterministic": True, "t": t, "best": nio.record_to_json(rec)})
        nio.write_manifest(prefix, "search", {"deterministic": {"n": n, "t": t}}, None, started,
                           [csv_path, best_path])
        print(f"deterministic n={n} t={t}: ratio {rec.ratio:.6f}")
        return EXIT_OK
    cfg = _search_config(args)
    jobs = args.jobs if args.jobs is not None else cfg.jobs
    with nio.CsvLog(csv_path, nio.SEARCH_COLUMNS) as log:
        result = random_search(cfg, emit=lambda r: log.write(nio.record_row(r)), jobs=jobs)
    nio.write_json(best_path, _best_json(result))
    nio.write_manifest(prefix, "search", cfg.to_dict(), cfg.seed, started, [csv_path, best_path])
    state = "success" if result.success else "budget exhausted"
    print(f"{state}: {result.trials} trials, max ratio {result.max_ratio:.6f}, "
          f"backend {kernel.resolve_backend(cfg.backend)}, {result.wall_seconds:.2f} s")
    return EXIT_OK if result.success else EXIT_BUDGET


def cmd_verify(args) -> int:
    started = nio.now_iso()
    jobs = args.jobs if args.jobs is not None else 1
    results = verify.run_all(args.level, args.seed, corrupt=args.corrupt_psi, jobs=jobs)
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {mark}  residual {r.residual:.3e}  tol {r.tolerance:.1e}  "
              f"trials {r.trials}")
    if args.out:
        payload = {"level": args.level, "seed": args.seed, "corruptPsi": args.corrupt_psi,
                   "suites": verify.results_to_json(results)}
        nio.write_json(args.out, payload)
        nio.write_manifest(args.out, "verify", _flags(args), args.seed, started, [args.out])
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failing suites: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _weights(text: str):
    try:
        return tuple(complex(v.replace(" ", "")) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad weights {text!r}") from exc


def cmd_examples(args) -> int:
    started = nio.now_iso()
    try:
        spec = NodeSpec(kind=args.kind, n=args.n, d=args.d, weights=args.weights,
                        epsilon=args.epsilon, seed=args.seed)
    except ValueError as exc:
        raise nio.ParseError(str(exc)) from exc
    payload = nio.rowtuple_to_json(spec.build())
    if args.out:
        nio.write_json(args.out, payload)
        nio.write_manifest(args.out, "examples", _flags(args), args.seed, started, [args.out])
    else:
        sys.stdout.write(nio.dumps(payload))
    return EXIT_OK


def _add_tol(p):
    p.add_argument("--rank-tol", type=float, default=1e-10, help="relative rank cutoff")
    p.add_argument("--psd-tol", type=float, default=1e-9, help="relative PSD slack")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncpick", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-trial events")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("feasible", help="does a norm-one interpolant exist?")
    p.add_argument("node"), p.add_argument("target")
    p.add_argument("--out", help="also write the verdict JSON here")
    _add_tol(p)
    p.set_defaults(func=cmd_feasible)

    p = sub.add_parser("npnorm", help="minimal interpolant norm")
    p.add_argument("node"), p.add_argument("target")
    p.add_argument("--precondition", metavar="FILE|auto",
                   help="commutant preconditioner D as matrix JSON, or 'auto'")
    p.add_argument("--seed", type=int, default=0, help="seed for --precondition auto")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--anp", action="store_true", help="trace along t*X for a co-isometry X")
    mode.add_argument("--choi-closed-form", action="store_true",
                      help="cross-check the Choi point against its closed-form Pick matrix")
    p.add_argument("--t-grid", type=_grid, default=[0.9, 0.99, 0.999])
    p.add_argument("--trace-csv", help="write the --anp trace as CSV")
    p.add_argument("--out", help="also write the report JSON here")
    _add_tol(p)
    p.set_defaults(func=cmd_npnorm)

    p = sub.add_parser("search", help="randomized column/row search")
    src = p.add_mutually_exclusive_group()
    src.add_argument("config", nargs="?", help="SearchConfig JSON")
    src.add_argument("--manifest", help="re-run the config recorded in a manifest")
    src.add_argument("--deterministic", nargs=2, type=float, metavar=("N", "T"),
                     help="the shift/clock construction instead of a search")
    p.add_argument("--out", default="search", help="output prefix (default: search)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--max-trials", type=int, help="override the trial budget")
    p.add_argument("--backend", choices=kernel.BACKENDS, help="override the kernel backend")
    p.add_argument("--jobs", type=int, help="worker processes (default: config value)")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("verify", help="randomised identity suites")
    p.add_argument("--level", choices=sorted(verify.LEVELS), default="quick")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write per-suite results JSON here")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--corrupt-psi", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("examples", help="write an example node as JSON")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--weights", type=_weights, help="comma-separated complex weights")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("alg-member", help="is a matrix in the node's algebra?")
    p.add_argument("node"), p.add_argument("matrix")
    p.add_argument("--out")
    _add_tol(p)
    p.set_defaults(func=cmd_alg_member)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _Exit as exc:
        if exc.payload is not None:
            sys.stdout.write(nio.dumps(exc.payload))
        if exc.message:
            print(f"ncpick: {exc.message}", file=sys.stderr)
        return exc.code
    except nio.ParseError as exc:
        print(f"ncpick: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"ncpick: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"ncpick: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
