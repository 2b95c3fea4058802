"""Desk-scale convergence of both DSparsA variants: rounds until D <= 1e-5 and J <= 1e-4."""

import argparse

from dsparsa.engine import RecursiveStep, run
from dsparsa.graph import generate_schedule
from dsparsa.problem import gen_sparse_regression


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--agents", type=int, default=10)
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--rounds", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    p = gen_sparse_regression(I=args.agents, m=args.dim, rows_per_agent=20, seed=args.seed)
    for alg in ("dsparsa_sca", "dsparsa_l"):
        trace = run(p, alg, generate_schedule(args.agents, 2, args.seed), RecursiveStep(0.1, 1e-3),
                    args.rounds, seed=args.seed, metrics_every=10)
        hit = next((r.round for r in trace.records if r.D <= 1e-5 and r.J <= 1e-4), None)
        last = trace.records[-1]
        print(f"{alg:>12}: thresholds met at round {hit}; final J {last.J:.2e} D {last.D:.2e} NMSE {last.NMSE:.3e}")


if __name__ == "__main__":
    main()
