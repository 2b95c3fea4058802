"""
Round-based simulation of DSparsA and of the subgradient-push baseline.

All agents are held as rows of stacked arrays. A round reads the previous
snapshot and writes a new one, which is the bulk-synchronous model: local
solves are independent, mixing is the barrier.
"""

from dataclasses import dataclass, field

import numpy as np

from .graph import build_weights
from .metrics import MetricsRecord, consensus_D, nmse, stationarity, weighted_average
from .penalty import eta, grad_G_minus
from .solver import ConfigurationError, FullConvex, Linearized, local_step

ALGORITHMS = ("dsparsa_sca", "dsparsa_l", "subgrad_push")
# per-node exchanges per round: DSparsA mixes x and y, the baseline only x
EXCHANGES_PER_ROUND = {"dsparsa_sca": 2, "dsparsa_l": 2, "subgrad_push": 1}


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class PowerStep:
    """``alpha_n = alpha0 / (n + 1) ** beta`` with ``0.5 < beta <= 1``."""

    alpha0: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ParameterError(f"alpha0 must be positive, got {self.alpha0}")
        if not 0.5 < self.beta <= 1:
            raise ParameterError(f"beta must lie in (0.5, 1], got {self.beta}")

    def __call__(self, n):
        return self.alpha0 / (n + 1) ** self.beta


@dataclass(frozen=True)
class RecursiveStep:
    """``alpha_n = alpha_{n-1} * (1 - mu * alpha_{n-1})`` from ``alpha0`` in ``(0, 1]``."""

    alpha0: float = 0.1
    mu: float = 1e-3
    _cache: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.alpha0 <= 1:
            raise ParameterError(f"alpha0 must lie in (0, 1], got {self.alpha0}")
        if not 0 < self.mu < 1:
            raise ParameterError(f"mu must lie in (0, 1), got {self.mu}")
        self._cache.append(float(self.alpha0))

    def __call__(self, n):
        if n < 0:
            raise ParameterError("step index must be nonnegative")
        cache = self._cache
        while len(cache) <= n:
            a = cache[-1]
            cache.append(a * (1.0 - self.mu * a))
        return cache[n]


def step_size(schedule, n):
    return schedule(n)


@dataclass(frozen=True)
class AgentState:
    x: np.ndarray
    phi: float
    y: np.ndarray | None = None
    pi_tilde: np.ndarray | None = None
    grad_cache: np.ndarray | None = None


@dataclass(frozen=True)
class NetworkState:
    """
    Stacked agent states; row ``i`` belongs to agent ``i``.

    ``y``, ``pi_tilde`` and ``grad`` are ``None`` for the baseline, which
    carries no gradient tracker. ``unconverged`` counts inner-solver
    failures in the round that produced this state.
    """

    x: np.ndarray
    phi: np.ndarray
    y: np.ndarray | None = None
    pi_tilde: np.ndarray | None = None
    grad: np.ndarray | None = None
    unconverged: int = 0

    @property
    def n_agents(self):
        return self.x.shape[0]

    def agents(self):
        return [
            AgentState(
                self.x[i],
                float(self.phi[i]),
                None if self.y is None else self.y[i],
                None if self.pi_tilde is None else self.pi_tilde[i],
                None if self.grad is None else self.grad[i],
            )
            for i in range(self.n_agents)
        ]

    @classmethod
    def from_agents(cls, agents):
        stack = lambda name: None if getattr(agents[0], name) is None else np.stack([getattr(a, name) for a in agents])
        return cls(
            stack("x"), np.array([a.phi for a in agents]), stack("y"), stack("pi_tilde"), stack("grad_cache")
        )


def init_dsparsa(problem, X0):
    """``phi = 1``, ``y_i = grad f_i(x_i)``, ``pi_i = I * y_i - grad f_i(x_i)``."""
    X0 = np.array(X0, dtype=float)
    grads = problem.local_grads(X0)
    return NetworkState(
        X0, np.ones(X0.shape[0]), grads.copy(), problem.n_agents * grads - grads, grads
    )


def init_baseline(problem, X0):
    X0 = np.array(X0, dtype=float)
    return NetworkState(X0, np.ones(X0.shape[0]))


def initial_points(problem, seed):
    """I.i.d. standard Gaussian starting points, projected onto the constraint set."""
    rng = np.random.default_rng(seed)
    return problem.constraint.project(rng.standard_normal((problem.n_agents, problem.dim)))


def push_sum_mix(A, phi, values):
    """Return ``(phi_new, sum_j a_ij phi_j v_j / phi_new_i)`` for rows ``v_j``."""
    phi_new = A @ phi
    return phi_new, (A @ (phi[:, None] * values)) / phi_new[:, None]


def dsparsa_round(state, problem, spec, schedule, stepsizes, n):
    """One DSparsA round: local SCA step, damping, x/phi mixing, y/pi mixing."""
    x_tilde, unconverged = local_step(problem, spec, state.x, state.pi_tilde, state.grad)
    v = state.x + stepsizes(n) * (x_tilde - state.x)

    A = build_weights(schedule(n))
    phi_new, x_new = push_sum_mix(A, state.phi, v)

    grad_new = problem.local_grads(x_new)
    # each sender attaches its own gradient change to its y message
    y_msg = state.phi[:, None] * state.y + grad_new - state.grad
    y_new = (A @ y_msg) / phi_new[:, None]
    pi_new = problem.n_agents * y_new - grad_new
    return NetworkState(x_new, phi_new, y_new, pi_new, grad_new, unconverged)


def regularizer_subgradient(problem, X):
    """Minimum-norm style element of ``d G``: ``eta * sign(x) - grad G_minus(x)``."""
    pen = problem.penalty
    return eta(pen) * np.sign(X) - grad_G_minus(pen, X)


def subgradient_push_round(state, problem, schedule, stepsizes, n):
    """Push-sum averaging followed by a projected local subgradient step."""
    A = build_weights(schedule(n))
    phi_new, w = push_sum_mix(A, state.phi, state.x)
    direction = problem.local_grads(w) + (problem.lam / problem.n_agents) * regularizer_subgradient(problem, w)
    x_new = problem.constraint.project(w - stepsizes(n) * direction)
    return NetworkState(x_new, phi_new)


@dataclass
class RunTrace:
    algorithm: str
    records: list
    final_state: NetworkState
    inner_unconverged: int = 0

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


def measure(problem, state, n, comm):
    z = weighted_average(state.x, state.phi)
    err = (
        nmse(state.x, problem.ground_truth, problem.sign_invariant)
        if problem.ground_truth is not None
        else float("nan")
    )
    return MetricsRecord(
        round=n,
        comm=comm,
        J=stationarity(problem, z),
        D=consensus_D(state.x, state.phi),
        NMSE=err,
        objective=problem.objective(z),
    )


def default_surrogate(problem, algorithm):
    tau = 2.0 if problem.loss_kind == "least_squares" else 1e-3
    if algorithm == "dsparsa_sca":
        return FullConvex(tau)
    return Linearized(tau)


def run(problem, algorithm, schedule, stepsizes, rounds, seed=0, metrics_every=1, surrogate=None,
        x0=None, callback=None):
    """
    Simulate ``rounds`` rounds of ``algorithm`` and record metrics.

    Metrics are taken at round 0, every ``metrics_every`` rounds, and at the
    last round. ``callback(n, state)`` is invoked after every round with the
    state at round ``n``. Starting points come from :func:`initial_points`
    unless ``x0`` is given.
    """
    if algorithm not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if rounds < 0:
        raise ParameterError("rounds must be nonnegative")
    if metrics_every < 1:
        raise ParameterError("metrics_every must be positive")
    if schedule.node_count != problem.n_agents:
        raise ConfigurationError(
            f"schedule has {schedule.node_count} nodes but the problem has {problem.n_agents} agents"
        )

    X0 = initial_points(problem, seed) if x0 is None else problem.constraint.project(x0)
    per_round = EXCHANGES_PER_ROUND[algorithm]
    if algorithm == "subgrad_push":
        state = init_baseline(problem, X0)
        step = lambda s, n: subgradient_push_round(s, problem, schedule, stepsizes, n)
    else:
        spec = surrogate if surrogate is not None else default_surrogate(problem, algorithm)
        state = init_dsparsa(problem, X0)
        step = lambda s, n: dsparsa_round(s, problem, spec, schedule, stepsizes, n)

    records = [measure(problem, state, 0, 0)]
    unconverged = 0
    for n in range(rounds):
        state = step(state, n)
        unconverged += state.unconverged
        if callback is not None:
            callback(n + 1, state)
        if (n + 1) % metrics_every == 0 or n + 1 == rounds:
            records.append(measure(problem, state, n + 1, per_round * (n + 1)))
    return RunTrace(algorithm, records, state, unconverged)
