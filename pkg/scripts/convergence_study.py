"""Grid convergence of the Newton solver on the manufactured problem.

    python3 scripts/convergence_study.py --N 8 12 16 20 --variant continuum
"""
import argparse
import sys
import time

import numpy as np

from hessianlab import hessolve as hs
from hessianlab.reporting import csv_text


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--variant", choices=["discrete", "continuum"], default="continuum")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    rows, hh, errs = [], [], []
    for N in args.N:
        g = hs.TorusGrid(args.n, N)
        m = hs.manufactured_problem(g, k=args.k, alpha=args.alpha, seed=args.seed,
                                    variant=args.variant)
        t = time.perf_counter()
        sol = hs.newton_solve(m.spec, g, np.zeros(g.shape))
        err = float(np.abs(sol.u - m.u_star).max())
        hh.append(g.h)
        errs.append(err)
        rows.append([N, g.h, m.alpha, len(sol.history) - 1, sol.history[-1]["residual_inf"], err,
                     time.perf_counter() - t])
        print(f"N={N}: err {err:.3e}", file=sys.stderr)
    if len(errs) > 1:
        print(f"observed order {hs.error_order(hh, errs):.3f}", file=sys.stderr)
    text = csv_text(["N", "h", "alpha", "iterations", "residual_inf", "error_inf", "seconds"], rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
