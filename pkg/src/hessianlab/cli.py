"""Command-line front end.

Exit codes: 0 success, 1 runtime or assertion failure, 2 usage error.
Every report embeds the resolved configuration and seed; reports contain no
timestamps, so identical inputs give byte-identical output.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import conelab as cl
from . import hessolve as hs
from . import maxmon as mm
from .config import ConfigError, load_run_config
from .properties import SUITES, run_suite
from .reporting import SnapshotError, csv_text, dumps, load_snapshot, save_snapshot
from .symmcalc import esf

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_FAIL


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    results = run_suite(args.suite, args.seed, args.count)
    ok = all(r.passed for r in results)
    doc = {"command": "verify",
           "config": {"suite": args.suite, "seed": args.seed, "count": args.count},
           "passed": ok,
           "properties": [r.as_dict() for r in results]}
    _emit(dumps(doc), args.out)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# inequality
# ---------------------------------------------------------------------------

def _constraints(args) -> cl.ConeConstraints:
    return cl.ConeConstraints(args.n, args.k, args.A, tuple(args.band))


def _ineq_config(args) -> dict:
    keys = ("mode", "action", "n", "k", "A", "band", "eps0", "K", "delta0", "eps", "l", "C",
            "count", "seed", "floor", "restarts", "samples_per_level")
    return {key: getattr(args, key) for key in keys}


def _margins_table(args, cons: cl.ConeConstraints):
    n, k = cons.n, cons.k
    rng = np.random.default_rng(args.seed)
    if args.count <= 0:
        lam = np.empty((0, n))
    elif args.floor is not None:
        lam = cl.sample_above(cons, args.floor, args.count, args.seed)
    else:
        lam = cl.sample_gamma_k_array(cons, args.count, args.seed)
    complex_xi = args.mode in ("key", "iqc0")
    if complex_xi:
        xi = cl.random_unit_complex(rng, len(lam), n)
    else:
        d = rng.normal(size=(len(lam), n))
        xi = d / np.linalg.norm(d, axis=1, keepdims=True) if len(lam) else d
    K = cl.default_K(k) if args.K is None else args.K
    header = [f"lam{i + 1}" for i in range(n)]
    if complex_xi:
        header += [f"xi{i + 1}_re" for i in range(n)] + [f"xi{i + 1}_im" for i in range(n)]
    else:
        header += [f"xi{i + 1}" for i in range(n)]
    rows, margins = [], []
    if args.mode == "key":
        header += ["t1", "t2", "t3", "rhs", "margin"]
        if len(lam):
            t1, t2, t3, rhs, _ = cl.key_terms(lam, xi, k, K, args.eps0)
            terms = np.stack([t1, t2, t3, rhs, t1 + t2 + t3 - rhs], axis=1)
        else:
            terms = np.empty((0, 5))
    elif args.mode == "lu":
        header += ["margin"]
        terms = (np.asarray(cl.lu_margin(lam, xi, k, args.delta0, args.eps, args.l)).reshape(-1, 1)
                 if len(lam) else np.empty((0, 1)))
    elif args.mode == "zhang":
        header += ["margin"]
        terms = (np.asarray(cl.zhang_margin(lam, xi, k, K, cons.A, args.delta0)).reshape(-1, 1)
                 if len(lam) else np.empty((0, 1)))
    else:
        if k < 2:
            raise ValueError("iqc0 mode needs k >= 2")
        header += ["base", "slope", "margin"]
        out = []
        for row, x in zip(lam, xi):
            case = cl.InequalityCase(row, x, k, K, args.eps0, cons.A)
            base, slope = cl.iqc0_parts(case)
            out.append((base, slope, base + args.C * slope))
        terms = np.array(out).reshape(-1, 3)
    for i in range(len(lam)):
        xparts = list(xi[i].real) + list(xi[i].imag) if complex_xi else list(xi[i])
        rows.append(list(lam[i]) + xparts + list(terms[i]))
        margins.append(terms[i, -1])
    return header, rows, margins


def cmd_inequality(args) -> int:
    if args.action != "margins" and args.mode != "key":
        raise UsageError(f"action {args.action!r} is only available in key mode")
    if args.mode in ("key", "iqc0") and not 0 < args.eps0 < 1:
        raise UsageError("--eps0 must lie in (0, 1)")
    try:
        cons = _constraints(args)
    except ValueError as exc:
        return _fail(f"infeasible constraints: {exc}")
    config = _ineq_config(args)
    if args.action == "margins":
        try:
            header, rows, margins = _margins_table(args, cons)
        except (ValueError, cl.InfeasibleConstraints) as exc:
            return _fail(str(exc))
        text = "# config: " + dumps(config, indent=0).replace("\n", " ").strip() + "\n"
        _emit(text + csv_text(header, rows), args.out)
        bad = sum(1 for m in margins if m < -cl.MARGIN_TOL)
        if bad:
            print(f"{bad} margins below -{cl.MARGIN_TOL:g}", file=sys.stderr)
        return EXIT_FAIL if bad else EXIT_OK
    K = cl.default_K(args.k) if args.K is None else args.K
    if args.action == "threshold":
        res = cl.threshold_search(cons, args.eps0, K, args.samples_per_level, args.seed)
        doc = {"command": "inequality", "config": config, "lambda1_star": res.lambda1_star,
               "levels_tested": res.levels_tested}
        _emit(dumps(doc), args.out)
        return EXIT_OK
    if args.floor is None:
        raise UsageError("adversarial action needs --floor")
    out = cl.counterexample_search(cons, args.eps0, K, args.floor, args.restarts, args.seed)
    case = out.worst_case
    doc = {"command": "inequality", "config": config,
           "worst_margin": out.worst_margin, "negatives": out.negatives,
           "evaluations": out.evaluations,
           "worst_case": {"lambda": case.spectrum.values, "xi_re": case.xi.real,
                          "xi_im": case.xi.imag}}
    _emit(dumps(doc), args.out)
    return EXIT_FAIL if out.negatives else EXIT_OK


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    try:
        cfg = load_run_config(args.config)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    steps = cfg.continuity_steps if args.continuity is None else args.continuity
    grid = hs.TorusGrid(cfg.grid.n, cfg.grid.N)
    params = cfg.problem_params()
    doc = {"command": "solve", "config": dict(cfg.as_dict(), continuity_steps=steps)}
    try:
        spec = hs.problem_from_params(grid, params)
        u_star = hs.manufactured_u(grid, spec.params["alpha_used"])[0]
    except (ValueError, hs.InadmissibleError) as exc:
        return _fail(f"problem setup failed: {exc}")
    doc["alpha_used"] = spec.params["alpha_used"]
    u0 = np.zeros(grid.shape) if cfg.initial.kind == "zero" else cfg.initial.scale * u_star
    status = EXIT_OK
    sol = None
    try:
        if steps > 0:
            path = hs.continuity_path(spec, grid, steps, cfg.newton)
            sol = path.solution
            doc["path"] = path.rows
        else:
            sol = hs.newton_solve(spec, grid, u0, cfg.newton)
    except hs.InadmissibleError as exc:
        doc["error"] = str(exc)
        status = _fail(str(exc))
    except hs.ContinuationError as exc:
        doc["error"] = str(exc)
        doc["path"] = exc.rows
        status = _fail(str(exc))
    except hs.SolverError as exc:
        doc["error"] = str(exc)
        doc["history"] = exc.history
        status = _fail(str(exc))
    if sol is not None:
        doc["iterations"] = len(sol.history) - 1
        doc["residual_history"] = [h["residual_inf"] for h in sol.history]
        doc["history"] = sol.history
        doc["diagnostics"] = sol.diagnostics
        doc["error_vs_u_star"] = float(np.abs(sol.u - u_star).max())
        doc["weighted_norms"] = hs.weighted_norms(sol.u, spec, grid)
        if args.snapshot:
            save_snapshot(args.snapshot, sol)
            doc["snapshot"] = str(args.snapshot)
    _emit(dumps(doc), args.out)
    return status


# ---------------------------------------------------------------------------
# monitor and sample
# ---------------------------------------------------------------------------

def cmd_monitor(args) -> int:
    try:
        params = mm.TestFunctionParams(args.N, args.Lambda)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        snap = load_snapshot(args.snapshot)
        rep = mm.monitor_snapshot(snap, params)
    except (SnapshotError, ValueError, KeyError, TypeError) as exc:
        return _fail(f"monitor failed: {exc}")
    doc = {"command": "monitor",
           "config": {"snapshot": str(args.snapshot), "N": args.N, "Lambda": args.Lambda},
           "report": rep.as_dict()}
    _emit(dumps(doc), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    try:
        cons = _constraints(args)
        lam = (np.empty((0, args.n)) if args.count <= 0 else
               cl.sample_gamma_k_array(cons, args.count, args.seed, lambda1=args.lambda1))
    except (ValueError, cl.InfeasibleConstraints) as exc:
        return _fail(f"infeasible constraints: {exc}")
    e = esf(lam, args.k)
    header = ([f"lam{i + 1}" for i in range(args.n)] + [f"sigma{j}" for j in range(1, args.k + 1)]
              + ["lam_n"])
    rows = [list(lam[i]) + list(e[i, 1:]) + [lam[i, -1]] for i in range(len(lam))]
    config = {"n": args.n, "k": args.k, "A": args.A, "band": args.band, "count": args.count,
              "seed": args.seed, "lambda1": args.lambda1}
    text = "# config: " + dumps(config, indent=0).replace("\n", " ").strip() + "\n"
    _emit(text + csv_text(header, rows), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _cone_args(p):
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--band", type=float, nargs=2, default=[0.5, 2.0], metavar=("LO", "HI"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hessianlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("--suite", required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--count", type=int, default=None)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("inequality", help="margins, threshold and adversarial search")
    q.add_argument("--mode", choices=("key", "lu", "zhang", "iqc0"), default="key")
    q.add_argument("--action", choices=("margins", "threshold", "adversarial"), default="margins")
    _cone_args(q)
    q.add_argument("--eps0", type=float, default=0.5)
    q.add_argument("--K", type=float, default=None)
    q.add_argument("--delta0", type=float, default=0.1)
    q.add_argument("--eps", type=float, default=0.1)
    q.add_argument("--l", type=int, default=1)
    q.add_argument("--C", type=float, default=1.0)
    q.add_argument("--count", type=int, default=1000)
    q.add_argument("--floor", type=float, default=None)
    q.add_argument("--restarts", type=int, default=1000)
    q.add_argument("--samples-per-level", dest="samples_per_level", type=int, default=2000)
    q.set_defaults(func=cmd_inequality)

    s = sub.add_parser("solve", help="solve a configured problem")
    s.add_argument("--config", required=True)
    s.add_argument("--continuity", type=int, default=None)
    s.add_argument("--snapshot", default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("monitor", help="maximum-principle diagnostics on a snapshot")
    m.add_argument("--snapshot", required=True)
    m.add_argument("--N", type=float, default=2.0)
    m.add_argument("--Lambda", type=float, default=None)
    m.add_argument("--out", default=None)
    m.set_defaults(func=cmd_monitor)

    a = sub.add_parser("sample", help="sample the constrained cone")
    _cone_args(a)
    a.add_argument("--count", type=int, default=100)
    a.add_argument("--lambda1", type=float, default=None)
    a.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
