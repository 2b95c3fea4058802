"""
End-to-end acceptance checks. Each test reports one PASS/FAIL line, shown
in the terminal summary, before asserting.
"""

import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from oracles import admm_subproblem

from dsparsa.engine import PowerStep, RecursiveStep, dsparsa_round, init_dsparsa, initial_points, run
from dsparsa.graph import generate_schedule
from dsparsa.harness import mean_records, parse_config, run_experiment, run_realization
from dsparsa.penalty import DCPenalty, eta, eval_g, grad_g_minus
from dsparsa.problem import ALL_SPACE, UNIT_BALL, LeastSquares, ProblemInstance, gen_sparse_regression
from dsparsa.solver import FullConvex, InnerSolverConfig, Linearized, ball_prox_solve, solve_subproblem

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def report(sink, number, ok, detail):
    sink(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    return ok


# 1

def test_conservation_suite(acceptance_report):
    start = time.perf_counter()
    p = gen_sparse_regression(I=10, m=20, rows_per_agent=20, seed=0)
    sched = generate_schedule(10, 2, seed=0)
    spec, steps = Linearized(2.0), RecursiveStep(0.1, 1e-3)
    state = init_dsparsa(p, initial_points(p, 0))
    worst_phi = worst_y = 0.0
    for n in range(200):
        state = dsparsa_round(state, p, spec, sched, steps, n)
        grads = p.local_grads(state.x).sum(axis=0)
        worst_phi = max(worst_phi, abs(state.phi.sum() - 10) / 10)
        worst_y = max(worst_y, np.max(np.abs(state.phi @ state.y - grads)) / max(np.max(np.abs(grads)), 1.0))
    elapsed = time.perf_counter() - start
    ok = worst_phi <= 1e-9 and worst_y <= 1e-9 and elapsed < 5
    report(acceptance_report, 1, ok,
           f"max rel. phi drift {worst_phi:.1e}, max rel. tracking drift {worst_y:.1e}, {elapsed:.2f}s (<5s)")
    assert ok


# 2

KINK_PENALTIES = [
    (DCPenalty("exp", 5.0), []),
    (DCPenalty("lp_plus", 2.0, epsilon=1e-2), []),
    (DCPenalty("lp_minus", 3.0, p=-0.5), []),
    (DCPenalty("scad", 20.0, a=2.0), [1 / 20, 2 / 20]),
    (DCPenalty("log", 20.0), []),
]


def test_penalty_correctness(acceptance_report):
    rng = np.random.default_rng(2024)
    h, guard = 1e-6, 1e-4
    worst = 0.0
    for pen, kinks in KINK_PENALTIES:
        x = rng.uniform(-2, 2, 10_000)
        # stay away from 0 (|x| kink) and from the penalty's own breakpoints
        bad = np.abs(x) < guard
        for k in kinks:
            bad |= np.abs(np.abs(x) - k) < guard
        x = np.where(bad, np.sign(x) * 0.5 + x, x)
        g_minus = lambda t: eta(pen) * np.abs(t) - eval_g(pen, t)
        fd = (g_minus(x + h) - g_minus(x - h)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - grad_g_minus(pen, x)))))
    scad = DCPenalty("scad", 20.0, a=2.0)
    cont = 0.0
    for t in (1 / 20, 2 / 20):
        lo, hi = np.nextafter(t, 0), np.nextafter(t, 1)
        cont = max(cont, abs(eval_g(scad, lo) - eval_g(scad, t)), abs(eval_g(scad, hi) - eval_g(scad, t)))
    ok = worst <= 1e-6 and cont <= 1e-12
    report(acceptance_report, 2, ok, f"max |FD - grad g-| {worst:.1e} (<=1e-6), SCAD jump {cont:.1e} (<=1e-12)")
    assert ok


# 3

def _prox_grad_oracle(g, x_bar, tau, weight, iters=20000):
    # long-run ISTA with a deliberately short step so it does not collapse to one exact step
    x = np.zeros_like(x_bar)
    step = 0.5 / tau
    for _ in range(iters):
        grad = g + tau * (x - x_bar)
        x_new = np.sign(x - step * grad) * np.maximum(np.abs(x - step * grad) - step * weight, 0.0)
        if np.max(np.abs(x_new - x)) < 1e-15:
            return x_new
        x = x_new
    return x


def test_subproblem_oracle_equivalence(acceptance_report):
    start = time.perf_counter()
    rng = np.random.default_rng(33)
    pen = DCPenalty("log", 20.0)
    worst = {"closed_form": 0.0, "ball": 0.0, "full_convex": 0.0}
    for _ in range(100):
        m = int(rng.integers(1, 11))
        A = rng.standard_normal((int(rng.integers(1, 8)), m))
        loss = LeastSquares(A, rng.standard_normal(A.shape[0]))
        x_cur, pi = rng.standard_normal(m), rng.standard_normal(m)
        lam, tau = rng.uniform(0.05, 1.0), rng.uniform(0.5, 4.0)
        lin = pi - lam * grad_g_minus(pen, x_cur)
        w = lam * eta(pen)

        got = solve_subproblem(loss, pen, lam, ALL_SPACE, Linearized(tau), x_cur, pi)
        oracle = _prox_grad_oracle(loss.grad(x_cur) + lin, x_cur, tau, w)
        worst["closed_form"] = max(worst["closed_form"], float(np.max(np.abs(got - oracle))))

        g = 3 * rng.standard_normal(m)
        x_bar = UNIT_BALL.project(rng.standard_normal(m))
        got = ball_prox_solve(g, x_bar, tau, w)
        oracle = admm_subproblem(g, x_bar, tau, w, radius=1.0)
        worst["ball"] = max(worst["ball"], float(np.max(np.abs(got - oracle))))

        got = solve_subproblem(loss, pen, lam, ALL_SPACE, FullConvex(tau, InnerSolverConfig(20000, 1e-13)), x_cur, pi)
        oracle = admm_subproblem(lin - 2 * A.T @ loss.b, x_cur, tau, w, Q=A.T @ A)
        worst["full_convex"] = max(worst["full_convex"], float(np.max(np.abs(got - oracle))))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-6 and elapsed < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(acceptance_report, 3, ok, f"100 instances, max inf-norm gaps: {detail} (<=1e-6), {elapsed:.1f}s (<30s)")
    assert ok


# 4

def test_single_agent_reduction(acceptance_report):
    rng = np.random.default_rng(4)
    A = rng.standard_normal((100, 5))
    b = A @ rng.standard_normal(5) + 0.1 * rng.standard_normal(100)
    p = ProblemInstance([LeastSquares(A, b)], DCPenalty("log"), 0.0)
    tau = float(np.linalg.eigvalsh(2 * A.T @ A)[-1])
    hit = []

    def watch(n, state):
        if not hit and np.linalg.norm(p.losses[0].grad(state.x[0])) < 1e-8:
            hit.append(n)

    run(p, "dsparsa_l", generate_schedule(1, 1, 0), PowerStep(1.0, 0.51), 2000, metrics_every=2000,
        surrogate=Linearized(tau), callback=watch)
    ok = bool(hit)
    report(acceptance_report, 4, ok, f"gradient norm < 1e-8 at round {hit[0] if hit else 'never'} (<=2000)")
    assert ok


# 5

def test_consensus_and_stationarity(acceptance_report):
    start = time.perf_counter()
    p = gen_sparse_regression(I=10, m=50, rows_per_agent=20, seed=5)
    results = {}
    for alg in ("dsparsa_sca", "dsparsa_l"):
        trace = run(p, alg, generate_schedule(10, 2, seed=5), RecursiveStep(0.1, 1e-3), 5000, seed=5,
                    metrics_every=10)
        ok_rows = [r.round for r in trace.records if r.D <= 1e-5 and r.J <= 1e-4]
        results[alg] = ok_rows[0] if ok_rows else None
    elapsed = time.perf_counter() - start
    ok = all(v is not None for v in results.values()) and elapsed < 120
    detail = ", ".join(f"{k} first at round {v}" for k, v in results.items())
    report(acceptance_report, 5, ok, f"D<=1e-5 and J<=1e-4: {detail} (<=5000), {elapsed:.1f}s (<120s)")
    assert ok


# 6 and 9 share the full-scale regression sweep

@pytest.fixture(scope="module")
def regression_sweep(tmp_path_factory):
    cfg = replace(parse_config(CONFIGS / "regression.ini"), rounds=500, realizations=10, metrics_every=1)
    out = tmp_path_factory.mktemp("regression")
    start = time.perf_counter()
    means = run_experiment(cfg, out / "first")
    elapsed = time.perf_counter() - start
    return cfg, out, means, elapsed


def _first_comm(records, threshold):
    for rec in records:
        if rec.J <= threshold:
            return rec.comm
    return None


def test_regression_trend(acceptance_report, regression_sweep):
    _, _, means, elapsed = regression_sweep
    base = {r.comm: r.NMSE for r in means["subgrad_push"]}
    margins = {}
    for alg in ("dsparsa_sca", "dsparsa_l"):
        pairs = [(base[r.comm], r.NMSE) for r in means[alg] if r.comm >= 500 and r.comm in base]
        margins[alg] = (len(pairs), min(b - d for b, d in pairs), all(d < b for b, d in pairs))
    sca, lin = _first_comm(means["dsparsa_sca"], 1e-3), _first_comm(means["dsparsa_l"], 1e-3)
    faster = sca is not None and lin is not None and sca <= lin
    ok = all(m[2] for m in margins.values()) and faster and elapsed < 900
    final = {alg: means[alg][-1].NMSE for alg in means}
    detail = (
        f"NMSE below baseline at all comm>=500: "
        + ", ".join(f"{a} {m[2]} ({m[0]} pts, min margin {m[1]:.2e})" for a, m in margins.items())
        + f"; final NMSE sca {final['dsparsa_sca']:.3e} L {final['dsparsa_l']:.3e} "
        f"subgrad {final['subgrad_push']:.3e}; mean J<=1e-3 at comm sca {sca} vs L {lin}; {elapsed:.0f}s (<900s)"
    )
    report(acceptance_report, 6, ok, detail)
    assert ok


def test_determinism(acceptance_report, regression_sweep):
    cfg, out, _, _ = regression_sweep
    run_experiment(cfg, out / "second")
    files = sorted(p.relative_to(out / "first") for p in (out / "first").rglob("*.csv"))
    same = [(out / "first" / f).read_bytes() == (out / "second" / f).read_bytes() for f in files]
    ok = bool(files) and all(same)
    report(acceptance_report, 9, ok, f"{sum(same)}/{len(files)} CSV files byte-identical across two runs")
    assert ok


# 7 and 8 share the PCA sweep

@pytest.fixture(scope="module")
def pca_sweep():
    cfg = replace(parse_config(CONFIGS / "pca.ini"), rounds=1000, realizations=5, metrics_every=10)
    worst_norm = [0.0]

    def feasible(n, state):
        worst_norm[0] = max(worst_norm[0], float(np.max(np.linalg.norm(state.x, axis=1))))

    start = time.perf_counter()
    runs = {alg: [run_realization(cfg, alg, r, callback=feasible) for r in range(cfg.realizations)]
            for alg in cfg.algorithms}
    elapsed = time.perf_counter() - start
    return {alg: mean_records(rs) for alg, rs in runs.items()}, runs, worst_norm[0], elapsed


def test_pca_trend(acceptance_report, pca_sweep):
    means, runs, _, elapsed = pca_sweep
    at = lambda alg: next(r for r in means[alg] if r.comm == 2000)
    d, s = at("dsparsa_l"), at("subgrad_push")
    # decrease measured per realization, from round 0 to the final round
    drops = [(rs[0].D / max(rs[-1].D, 1e-300), rs[0].J / max(rs[-1].J, 1e-300)) for rs in runs["dsparsa_l"]]
    min_d, min_j = min(x[0] for x in drops), min(x[1] for x in drops)
    ok = d.NMSE < s.NMSE and min_d >= 100 and min_j >= 100 and elapsed < 1200
    report(acceptance_report, 7, ok,
           f"mean NMSE at 2000 exchanges DSparsA-L {d.NMSE:.4f} vs subgrad {s.NMSE:.4f}; "
           f"smallest D drop x{min_d:.1e}, J drop x{min_j:.1e} (>=1e2); {elapsed:.0f}s (<1200s)")
    assert ok


def test_pca_feasibility(acceptance_report, pca_sweep):
    _, _, worst, _ = pca_sweep
    ok = worst <= 1 + 1e-12
    report(acceptance_report, 8, ok, f"max agent norm over every round of every PCA run {worst!r} (<=1+1e-12)")
    assert ok
