"""Track solution quantities along the continuity path on several grids.

    python3 scripts/continuity_study.py --N 8 16 --steps 8
"""
import argparse
import sys

from hessianlab import hessolve as hs
from hessianlab.reporting import csv_text

COLS = ["s", "iterations", "residual_inf", "max_lambda1", "min_lambda_n", "max_grad", "max_abs_u",
        "lambda1_over_grad"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[8, 16])
    ap.add_argument("--steps", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    rows = []
    for N in args.N:
        g = hs.TorusGrid(2, N)
        m = hs.manufactured_problem(g, seed=args.seed, variant="continuum")
        for r in hs.continuity_path(m.spec, g, args.steps).rows:
            rows.append([N] + [r[c] for c in COLS])
        print(f"N={N}: done", file=sys.stderr)
    text = csv_text(["N"] + COLS, rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
