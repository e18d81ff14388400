#!/usr/bin/env python3
"""Sample overhead of the robust learner over n = d and eta, plus lower-bound instance costs.

    python scripts/overhead_sweep.py --seed 3 --out results/
    python scripts/overhead_sweep.py --seed 3 --sizes 4 8 16 32 --etas 0 0.1 --trials 100

Writes ``overhead.csv`` (one row per (n, eta)) and ``lower_bound.csv``
(mean ledger total on the hard instance against ``(floor(eta n) + 1) * m_1``).
"""

import argparse
import csv
from pathlib import Path

from robust_collab.config import LearnerConstants
from robust_collab.hypotheses import pac_sample_size
from robust_collab.oracles import adversary_budget
from robust_collab.verification import check_lower_bound_cost, measure_overhead, overhead_csv


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 12, 16, 20])
    p.add_argument("--etas", type=float, nargs="+", default=[0.0, 0.1])
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--lb-n", type=int, default=10)
    p.add_argument("--lb-d", type=int, default=8)
    p.add_argument("--lb-etas", type=float, nargs="+", default=[0.1, 0.2, 0.3])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("results"))
    args = p.parse_args()

    constants = LearnerConstants.calibrated()
    args.out.mkdir(parents=True, exist_ok=True)

    points = [(n, n, eta) for n in args.sizes for eta in args.etas]
    estimates = measure_overhead(points, args.trials, args.seed, constants, jobs=args.jobs)
    (args.out / "overhead.csv").write_text(overhead_csv(estimates), encoding="utf-8")
    for e in estimates:
        print(
            f"n=d={e.n:3d} eta={e.eta:.2f}  overhead {e.ratio:7.3f} +/- {e.ratio_se:.3f}"
            f"  naive {e.naive_ratio:7.3f}  success {e.success_rate:.3f}"
        )

    rows = []
    for eta in args.lb_etas:
        r = check_lower_bound_cost(
            args.lb_n, args.lb_d, 0.1, 0.1, eta, 1.0, args.trials, args.seed, constants, jobs=args.jobs
        )
        m1 = pac_sample_size(args.lb_d, 0.1, 0.1, constants.c_pac)
        rows.append(
            {
                "n": args.lb_n,
                "d": args.lb_d,
                "eta": eta,
                "adversaries": adversary_budget(eta, args.lb_n),
                "mean_total": r.extra["mean_total"],
                "single_user": m1,
                "ratio": r.extra["mean_total"] / m1,
            }
        )
        print(f"lower-bound eta={eta:.2f}  mean total {r.extra['mean_total']:.1f}  ({rows[-1]['ratio']:.2f} x m_1)")
    with open(args.out / "lower_bound.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("# schema=1\n")
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
