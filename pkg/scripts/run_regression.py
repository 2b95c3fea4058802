"""Sparse-regression sweep: DSparsA-SCA, DSparsA-L and subgradient-push on equal exchange budgets."""

import argparse
from dataclasses import replace
from pathlib import Path

from dsparsa.harness import FULL_REALIZATIONS, parse_config, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=ROOT / "configs" / "regression.ini")
    ap.add_argument("--out", default="results/regression")
    ap.add_argument("--realizations", type=int)
    ap.add_argument("--full", action="store_true", help=f"{FULL_REALIZATIONS} realizations")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = parse_config(args.config)
    if args.full:
        cfg = replace(cfg, realizations=FULL_REALIZATIONS)
    if args.realizations:
        cfg = replace(cfg, realizations=args.realizations)
    means = run_experiment(cfg, args.out, jobs=args.jobs)

    print(f"{'comm':>6}" + "".join(f"{alg + ' NMSE_dB':>22}" for alg in means))
    by_comm = {alg: {r.comm: r for r in recs} for alg, recs in means.items()}
    for comm in (0, 100, 200, 500, 1000):
        cells = [by_comm[alg].get(comm) for alg in means]
        print(f"{comm:>6}" + "".join(f"{c.NMSE_dB:>22.2f}" if c else f"{'-':>22}" for c in cells))
    print(f"full traces in {args.out}")


if __name__ == "__main__":
    main()
