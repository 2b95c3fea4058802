"""
Experiment configs, realization sweeps, and CSV output.

Config files are INI-style: ``key = value`` lines grouped under section
headers. Only ``[experiment]`` with ``experiment`` and ``rounds`` is
required; everything else falls back to the defaults of the chosen
experiment. See ``configs/`` for complete examples.
"""

import argparse
import configparser
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .engine import ALGORITHMS, PowerStep, RecursiveStep, run
from .graph import generate_schedule
from .metrics import MetricsRecord
from .penalty import DCPenalty
from .problem import gen_sparse_pca, gen_sparse_regression
from .solver import FullConvex, InnerSolverConfig, Linearized, PartialLinearized

log = logging.getLogger(__name__)

CSV_COLUMNS = ("round", "comm", "J", "D", "NMSE", "NMSE_dB", "objective")
METRIC_COLUMNS = CSV_COLUMNS[2:]
EXPERIMENTS = ("sparse_regression", "sparse_pca", "custom")
FULL_REALIZATIONS = 100


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemConfig:
    type: str = "regression"  # regression | pca; only read for custom experiments
    dim: int = 200
    rows_per_agent: int = 20
    sparsity: float = 0.8
    sigma: float = 0.1
    penalty: str = "log"
    theta: float = 20.0
    a: float = 2.0
    p: float = -1.0
    epsilon: float = 1e-6
    lam: float = 0.5
    normalize_rows: bool = False


@dataclass(frozen=True)
class NetworkConfig:
    agents: int = 30
    out_degree: int = 2


@dataclass(frozen=True)
class AlgorithmConfig:
    step_rule: str = "recursive"
    alpha0: float = 0.1
    mu: float = 1e-3
    beta: float = 1.0
    tau: float = 2.0
    surrogate: str = ""  # empty: the algorithm's own default
    inner_max_iters: int = 500
    inner_tolerance: float = 1e-8

    def stepsizes(self):
        if self.step_rule == "recursive":
            return RecursiveStep(self.alpha0, self.mu)
        if self.step_rule == "power":
            return PowerStep(self.alpha0, self.beta)
        raise ConfigError(f"step_rule must be 'recursive' or 'power', got {self.step_rule!r}")

    def surrogate_spec(self, algorithm):
        inner = InnerSolverConfig(self.inner_max_iters, self.inner_tolerance)
        kind = self.surrogate or ("full_convex" if algorithm == "dsparsa_sca" else "linearized")
        if kind == "linearized":
            return Linearized(self.tau)
        if kind == "partial_linearized":
            return PartialLinearized(self.tau, inner)
        if kind == "full_convex":
            return FullConvex(self.tau, inner)
        raise ConfigError(f"unknown surrogate {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    rounds: int
    realizations: int = 10
    base_seed: int = 0
    metrics_every: int = 5
    algorithms: tuple = ("dsparsa_sca", "dsparsa_l", "subgrad_push")
    output: str = "results"
    # baseline runs twice as many rounds so both cover the same exchange budget
    equal_exchanges: bool = True
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    algorithm_params: dict = field(default_factory=dict)

    def rounds_for(self, algorithm):
        if algorithm == "subgrad_push" and self.equal_exchanges:
            return 2 * self.rounds
        return self.rounds


# experiment-specific defaults, applied before the file's own values
_REGRESSION_ALGOS = {
    "dsparsa_sca": AlgorithmConfig(alpha0=0.1, mu=1e-3, tau=2.0),
    "dsparsa_l": AlgorithmConfig(alpha0=0.1, mu=1e-3, tau=2.0),
    "subgrad_push": AlgorithmConfig(alpha0=1.0, mu=1e-2),
}
_PCA_ALGOS = {
    "dsparsa_sca": AlgorithmConfig(alpha0=1.0, mu=1e-3, tau=1e-3),
    "dsparsa_l": AlgorithmConfig(alpha0=1.0, mu=1e-3, tau=1e-3),
    "subgrad_push": AlgorithmConfig(alpha0=0.1, mu=1e-2),
}
_PCA_PROBLEM = ProblemConfig(type="pca", dim=30, rows_per_agent=500, penalty="scad", theta=20.0, a=2.0, lam=5.0)

_SECTION_TYPES = {
    "experiment": {f: t for f, t in ExperimentConfig.__annotations__.items()
                   if f not in ("problem", "network", "algorithm_params")},
    "problem": dict(ProblemConfig.__annotations__),
    "network": dict(NetworkConfig.__annotations__),
    **{alg: dict(AlgorithmConfig.__annotations__) for alg in ALGORITHMS},
}
# the file spells lambda out; the dataclass cannot
_KEY_ALIASES = {("problem", "lambda"): "lam"}


def _convert(section, key, raw, typ):
    try:
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return float(raw)
        if typ in (bool, "bool"):
            lowered = raw.strip().lower()
            if lowered not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(raw)
            return lowered in ("true", "yes", "1", "on")
        if typ in (tuple, "tuple"):
            return tuple(item.strip() for item in raw.split(",") if item.strip())
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot read {raw!r} as {getattr(typ, '__name__', typ)}") from None


def _read_section(parser, section):
    types = _SECTION_TYPES[section]
    valid = sorted(k if k != "lam" else "lambda" for k in types)
    values = {}
    for key, raw in parser.items(section):
        name = _KEY_ALIASES.get((section, key), key)
        if name not in types or name == "lam" and key != "lambda":
            raise ConfigError(f"[{section}] unknown key {key!r}; valid keys: {', '.join(valid)}")
        values[name] = _convert(section, key, raw, types[name])
    return values


def parse_config_text(text, source="<string>"):
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    for section in parser.sections():
        if section not in _SECTION_TYPES:
            raise ConfigError(
                f"{source}: unknown section [{section}]; valid sections: {', '.join(_SECTION_TYPES)}"
            )
    if not parser.has_section("experiment"):
        raise ConfigError(f"{source}: missing required section [experiment]")
    exp = _read_section(parser, "experiment")
    for required in ("experiment", "rounds"):
        if required not in exp:
            raise ConfigError(f"{source}: [experiment] missing required key {required!r}")
    if exp["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"[experiment] experiment must be one of {EXPERIMENTS}, got {exp['experiment']!r}")

    pca = exp["experiment"] == "sparse_pca"
    problem = replace(_PCA_PROBLEM if pca else ProblemConfig(),
                      **(_read_section(parser, "problem") if parser.has_section("problem") else {}))
    if exp["experiment"] == "custom" and problem.type == "pca":
        problem = replace(_PCA_PROBLEM, **(_read_section(parser, "problem")))
    network = NetworkConfig(**(_read_section(parser, "network") if parser.has_section("network") else {}))

    is_pca = problem.type == "pca" if exp["experiment"] == "custom" else pca
    base = _PCA_ALGOS if is_pca else _REGRESSION_ALGOS
    if "algorithms" not in exp and is_pca:
        exp["algorithms"] = ("dsparsa_l", "subgrad_push")
    params = {
        alg: replace(base[alg], **(_read_section(parser, alg) if parser.has_section(alg) else {}))
        for alg in ALGORITHMS
    }
    config = ExperimentConfig(problem=problem, network=network, algorithm_params=params, **exp)
    validate_config(config)
    return config


def parse_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, source=str(path))


def validate_config(config):
    """Raise :class:`ConfigError` on anything outside its documented domain."""
    if config.rounds < 1:
        raise ConfigError("[experiment] rounds must be >= 1")
    if config.realizations < 1:
        raise ConfigError("[experiment] realizations must be >= 1")
    if config.metrics_every < 1:
        raise ConfigError("[experiment] metrics_every must be >= 1")
    if not config.algorithms:
        raise ConfigError("[experiment] algorithms must name at least one algorithm")
    for alg in config.algorithms:
        if alg not in ALGORITHMS:
            raise ConfigError(f"[experiment] unknown algorithm {alg!r}; valid: {', '.join(ALGORITHMS)}")
    if config.problem.type not in ("regression", "pca"):
        raise ConfigError("[problem] type must be 'regression' or 'pca'")
    try:
        make_penalty(config.problem)
        generate_schedule(config.network.agents, config.network.out_degree, 0)
        for alg in config.algorithms:
            params = config.algorithm_params[alg]
            params.stepsizes()
            if alg != "subgrad_push":
                spec = params.surrogate_spec(alg)
                if _is_pca(config) and isinstance(spec, FullConvex):
                    raise ConfigError(f"[{alg}] full_convex surrogate needs a convex loss; sparse PCA is concave")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if _is_pca(config) and config.problem.dim < 10:
        raise ConfigError("[problem] sparse PCA needs dim >= 10")
    if not 0 <= config.problem.sparsity < 1:
        raise ConfigError("[problem] sparsity must lie in [0, 1)")


def _is_pca(config):
    return config.experiment == "sparse_pca" or (config.experiment == "custom" and config.problem.type == "pca")


def make_penalty(pc):
    return DCPenalty(pc.penalty, pc.theta, a=pc.a, p=pc.p, epsilon=pc.epsilon)


def make_problem(config, seed):
    pc = config.problem
    pen = make_penalty(pc)
    I = config.network.agents
    if _is_pca(config):
        return gen_sparse_pca(I, pc.rows_per_agent, pc.dim, pc.theta, pc.a, pc.lam, seed,
                              penalty=pen, normalize_rows=pc.normalize_rows)
    return gen_sparse_regression(I, pc.dim, pc.rows_per_agent, pc.sparsity, pc.sigma, pc.theta, pc.lam, seed,
                                 penalty=pen)


def run_realization(config, algorithm, r, dump_dir=None, callback=None):
    """Run one (algorithm, realization) pair; ``callback(n, state)`` sees every round."""
    seed = config.base_seed + r
    problem = make_problem(config, seed)
    if dump_dir is not None:
        problem.save(Path(dump_dir) / f"instance_{r:03d}.npz")
    params = config.algorithm_params[algorithm]
    schedule = generate_schedule(config.network.agents, config.network.out_degree, seed)
    surrogate = None if algorithm == "subgrad_push" else params.surrogate_spec(algorithm)
    trace = run(problem, algorithm, schedule, params.stepsizes(), config.rounds_for(algorithm), seed=seed,
                metrics_every=config.metrics_every, surrogate=surrogate, callback=callback)
    if trace.inner_unconverged:
        log.warning("%s realization %d: %d inner solves hit max_iters", algorithm, r, trace.inner_unconverged)
    return trace.records


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _row(rec):
    return [_fmt(rec.round), _fmt(rec.comm), _fmt(rec.J), _fmt(rec.D), _fmt(rec.NMSE),
            _fmt(rec.NMSE_dB), _fmt(rec.objective)]


def write_trace_csv(records, path):
    """Write metrics records with columns ``round, comm, J, D, NMSE, NMSE_dB, objective``."""
    records = getattr(records, "records", records)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            writer.writerows(_row(rec) for rec in records)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def read_trace_csv(path):
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [
            MetricsRecord(int(row["round"]), int(row["comm"]), float(row["J"]), float(row["D"]),
                          float(row["NMSE"]), float(row["objective"]))
            for row in reader
        ]


def mean_records(runs):
    """Average realizations record-by-record; all runs must share the same round grid."""
    grid = [(rec.round, rec.comm) for rec in runs[0]]
    for records in runs[1:]:
        if [(rec.round, rec.comm) for rec in records] != grid:
            raise ValueError("realizations were recorded on different round grids")
    out = []
    for k, (n, comm) in enumerate(grid):
        col = lambda name: math.fsum(getattr(records[k], name) for records in runs) / len(runs)
        out.append(MetricsRecord(n, comm, col("J"), col("D"), col("NMSE"), col("objective")))
    return out


def write_summary_csv(means, path):
    """Wide table aligned on per-node exchange count; blank where an algorithm has no record."""
    by_alg = {alg: {rec.comm: rec for rec in records} for alg, records in means.items()}
    comms = sorted(set().union(*(d.keys() for d in by_alg.values())))
    header = ["comm"] + [f"{alg}_{name}" for alg in means for name in METRIC_COLUMNS]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for comm in comms:
            row = [str(comm)]
            for alg in means:
                rec = by_alg[alg].get(comm)
                row += [""] * len(METRIC_COLUMNS) if rec is None else _row(rec)[2:]
            writer.writerow(row)


def run_experiment(config, out_dir=None, jobs=1, dump_instances=False):
    """
    Run every algorithm on every realization and write the CSV outputs.

    Layout under ``out_dir``: ``<algorithm>/realization_<r>.csv`` per run,
    ``<algorithm>_mean.csv`` averaged over realizations, ``summary.csv``
    aligning all algorithms on exchanges per node, and ``config.json``.
    Returns the dict of mean records per algorithm.
    """
    out = Path(out_dir if out_dir is not None else config.output)
    out.mkdir(parents=True, exist_ok=True)
    dump_dir = None
    if dump_instances:
        dump_dir = out / "instances"
        dump_dir.mkdir(exist_ok=True)

    jobs_list = [(alg, r) for alg in config.algorithms for r in range(config.realizations)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            futures = [pool.submit(run_realization, config, alg, r, dump_dir) for alg, r in jobs_list]
            results = [f.result() for f in futures]
    else:
        results = []
        for alg, r in jobs_list:
            log.info("running %s realization %d/%d", alg, r + 1, config.realizations)
            results.append(run_realization(config, alg, r, dump_dir))

    means = {}
    for alg in config.algorithms:
        runs = [rec for (a, _), rec in zip(jobs_list, results) if a == alg]
        for r, records in enumerate(runs):
            write_trace_csv(records, out / alg / f"realization_{r:03d}.csv")
        means[alg] = mean_records(runs)
        write_trace_csv(means[alg], out / f"{alg}_mean.csv")
    write_summary_csv(means, out / "summary.csv")
    (out / "config.json").write_text(json.dumps(asdict(config), indent=2, sort_keys=True) + "\n")
    return means


def main(argv=None):
    parser = argparse.ArgumentParser(prog="dsparsa", description="Distributed sparse learning experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True, help="INI experiment config")
    p_run.add_argument("--out", help="output directory (overrides [experiment] output)")
    p_run.add_argument("--seed", type=int, help="override base_seed")
    p_run.add_argument("--realizations", type=int, help="override number of realizations")
    p_run.add_argument("--full", action="store_true", help=f"use {FULL_REALIZATIONS} realizations")
    p_run.add_argument("--jobs", type=int, default=1, help="worker processes for realizations")
    p_run.add_argument("--dump-instances", action="store_true", help="save generated data as .npz")
    p_run.add_argument("-v", "--verbose", action="store_true")

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("--config", required=True)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = parse_config(args.config)
        if args.command == "validate":
            print(f"{args.config}: ok ({config.experiment}, {len(config.algorithms)} algorithm(s), "
                  f"{config.realizations} realization(s), {config.rounds} rounds)")
            return 0
        overrides = {}
        if args.seed is not None:
            overrides["base_seed"] = args.seed
        if args.full:
            overrides["realizations"] = FULL_REALIZATIONS
        if args.realizations is not None:
            overrides["realizations"] = args.realizations
        config = replace(config, **overrides)
        validate_config(config)
        out = args.out or config.output
        run_experiment(config, out, jobs=args.jobs, dump_instances=args.dump_instances)
        print(f"wrote results to {out}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
