"""Sparse-PCA sweep: DSparsA-L against projected subgradient-push, NMSE against u2 up to sign."""

import argparse
from dataclasses import replace
from pathlib import Path

from dsparsa.harness import parse_config, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=ROOT / "configs" / "pca.ini")
    ap.add_argument("--out", default="results/pca")
    ap.add_argument("--realizations", type=int)
    ap.add_argument("--normalize-rows", action="store_true",
                    help="scale each agent's samples by 1/sqrt(rows) so the loss and penalty are comparable")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = parse_config(args.config)
    if args.realizations:
        cfg = replace(cfg, realizations=args.realizations)
    if args.normalize_rows:
        cfg = replace(cfg, problem=replace(cfg.problem, normalize_rows=True))
    means = run_experiment(cfg, args.out, jobs=args.jobs)

    for alg, recs in means.items():
        first, last = recs[0], recs[-1]
        print(f"{alg:>14}: NMSE {last.NMSE:.4f} ({last.NMSE_dB:.2f} dB) at comm {last.comm}; "
              f"J {first.J:.2e} -> {last.J:.2e}; D {first.D:.2e} -> {last.D:.2e}")
    print(f"full traces in {args.out}")


if __name__ == "__main__":
    main()
