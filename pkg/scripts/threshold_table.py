"""Locate the empirical lam_1 threshold of the key inequality and stress the region above it.

For each (n, k, eps0) the ladder search gives L*, then spectra pinned at or above 4 L*
are checked with random and worst-case xi, plus an annealing search.

    python3 scripts/threshold_table.py --samples 100000 --restarts 1000 --out thresholds.csv
"""
import argparse
import sys
import time

import numpy as np

from hessianlab import conelab as cl
from hessianlab.reporting import csv_text

CONFIGS = ((3, 2), (4, 2), (4, 3), (5, 3))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--restarts", type=int, default=200)
    ap.add_argument("--eps0", type=float, nargs="+", default=[0.1, 0.5])
    ap.add_argument("--factor", type=float, default=4.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    rows = []
    rng = np.random.default_rng(args.seed + 4)
    for n, k in CONFIGS:
        cons = cl.ConeConstraints(n, k, A=1.0, sigma_band=(0.5, 2.0))
        K = float((k + 1) ** 2)
        for eps0 in args.eps0:
            t = time.perf_counter()
            L = cl.threshold_search(cons, eps0, K, seed=args.seed).lambda1_star
            floor = args.factor * L
            lam = cl.sample_above(cons, floor, args.samples, seed=args.seed + 1)
            xi = cl.random_unit_complex(rng, len(lam), n)
            m_rand = cl.key_margin_batch(lam, xi, k, K, eps0)[0]
            m_worst = cl.key_margin_batch(lam, cl.worst_xi(lam, k, K, eps0), k, K, eps0)[0]
            adv = cl.counterexample_search(cons, eps0, K, floor, args.restarts, seed=args.seed + 3)
            rows.append([n, k, eps0, L, floor, float(m_rand.min()), float(m_worst.min()),
                         adv.worst_margin, adv.negatives, time.perf_counter() - t])
            print(f"n={n} k={k} eps0={eps0}: L*={L:.4g} worst={m_worst.min():.3e} "
                  f"adversarial={adv.worst_margin:.3e}", file=sys.stderr)
    text = csv_text(["n", "k", "eps0", "lambda1_star", "floor", "min_random_xi", "min_worst_xi",
                     "adversarial_min", "adversarial_negatives", "seconds"], rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
