"""
Local strongly convex subproblems.

Each agent minimizes, over the constraint set,

    f~(x; x_cur) + (pi - lam * grad G_minus(x_cur))^T (x - x_cur) + lam * eta * ||x||_1

where ``f~`` is a strongly convex surrogate of its loss that matches the
loss gradient at ``x_cur``. All routines act on a stack of agents at once
(one row per agent); :func:`solve_subproblem` is the single-agent wrapper.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .penalty import eta, grad_G_minus
from .problem import ProblemInstance

log = logging.getLogger(__name__)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class InnerSolverConfig:
    max_iters: int = 500
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigurationError("inner max_iters must be >= 1")
        if not self.tolerance > 0:
            raise ConfigurationError("inner tolerance must be positive")


@dataclass(frozen=True)
class Linearized:
    """``f(x_cur) + grad f(x_cur)^T (x - x_cur) + tau/2 ||x - x_cur||^2``."""

    tau: float = 2.0

    def __post_init__(self):
        _check_tau(self.tau)


@dataclass(frozen=True)
class PartialLinearized:
    """
    Keep the convex part of the loss, linearize the rest, add ``tau/2 ||x - x_cur||^2``.

    Least squares is entirely convex (so this equals :class:`FullConvex`);
    the negated PCA loss is entirely concave (so this equals :class:`Linearized`).
    """

    tau: float = 2.0
    inner: InnerSolverConfig = field(default_factory=InnerSolverConfig)

    def __post_init__(self):
        _check_tau(self.tau)


@dataclass(frozen=True)
class FullConvex:
    """The convex loss itself plus ``tau/2 ||x - x_cur||^2``; needs an inner solver."""

    tau: float = 2.0
    inner: InnerSolverConfig = field(default_factory=InnerSolverConfig)

    def __post_init__(self):
        _check_tau(self.tau)


def _check_tau(tau):
    if not tau > 0:
        raise ConfigurationError(f"surrogate tau must be positive, got {tau}")


def _soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def ball_prox_solve(g, x_bar, tau, weight, radius=1.0, method="closed_form", return_multiplier=False):
    """
    Minimize ``g^T x + tau/2 ||x - x_bar||^2 + weight * ||x||_1`` over ``||x||_2 <= radius``.

    With a multiplier ``mu >= 0`` on the ball the minimizer is
    ``x(mu) = S_weight(tau * x_bar - g) / (tau + mu)``. If the unconstrained
    point ``x(0)`` is feasible it is the answer; otherwise ``mu`` is picked so
    that ``||x(mu)|| = radius``. ``method="closed_form"`` solves that scalar
    equation directly, ``method="bisection"`` brackets and bisects it.

    Works row-wise on 2-D input; ``tau`` may be a scalar or one value per row.
    """
    g = np.asarray(g, dtype=float)
    x_bar = np.asarray(x_bar, dtype=float)
    if np.any(np.asarray(tau) <= 0):
        raise ConfigurationError("tau must be positive")
    if weight < 0:
        raise ConfigurationError("weight must be nonnegative")
    squeeze = g.ndim == 1
    g2, xb2 = np.atleast_2d(g), np.atleast_2d(x_bar)
    tau_col = np.broadcast_to(np.asarray(tau, dtype=float), (g2.shape[0],))[:, None]

    s = _soft(tau_col * xb2 - g2, weight)
    s_norm = np.linalg.norm(s, axis=1, keepdims=True)
    if method == "closed_form":
        mu = np.maximum(s_norm / radius - tau_col, 0.0)
    elif method == "bisection":
        mu = np.array([[_bisect_multiplier(n, t, radius)] for n, t in zip(s_norm[:, 0], tau_col[:, 0])])
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    x = s / (tau_col + mu)
    if squeeze:
        x, mu = x[0], mu[0, 0]
    else:
        mu = mu[:, 0]
    return (x, mu) if return_multiplier else x


def _bisect_multiplier(s_norm, tau, radius, tol=1e-10):
    # ||x(mu)|| = s_norm / (tau + mu) is continuous and strictly decreasing in mu
    norm = lambda mu: s_norm / (tau + mu)
    if norm(0.0) <= radius:
        return 0.0
    hi = 1.0
    while norm(hi) >= radius:
        hi *= 2.0
    lo = 0.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        r = norm(mid)
        if abs(r - radius) <= tol:
            return mid
        if r > radius:
            lo = mid
        else:
            hi = mid
    return hi


def _prox_l1_set(z, L, weight, constraint):
    """Prox of ``(weight / L) * ||.||_1`` plus the constraint indicator; ``L`` is a column."""
    if constraint.kind == "all_space":
        return _soft(z, weight / L)
    return ball_prox_solve(np.zeros_like(z), z, L[:, 0], weight, radius=constraint.radius)


def local_step(problem: ProblemInstance, spec, X, Pi, grads=None):
    """
    Solve every agent's subproblem.

    Parameters
    ----------
    problem : ProblemInstance
    spec : Linearized | PartialLinearized | FullConvex
    X : ndarray, shape (I, m)
        Current local iterates.
    Pi : ndarray, shape (I, m)
        Gradient-tracking estimates of the other agents' gradients.
    grads : ndarray, optional
        ``grad f_i(X[i])`` if already known.

    Returns
    -------
    X_tilde : ndarray, shape (I, m)
    unconverged : int
        Number of agents whose inner solve hit ``max_iters``.
    """
    X = np.asarray(X, dtype=float)
    pen, lam = problem.penalty, problem.lam
    weight = lam * eta(pen)
    linear = Pi - lam * grad_G_minus(pen, X)

    if isinstance(spec, PartialLinearized):
        spec = FullConvex(spec.tau, spec.inner) if problem.loss_kind == "least_squares" else Linearized(spec.tau)

    if isinstance(spec, Linearized):
        if grads is None:
            grads = problem.local_grads(X)
        c = grads + linear
        if problem.constraint.kind == "all_space":
            return _soft(X - c / spec.tau, weight / spec.tau), 0
        return ball_prox_solve(c, X, spec.tau, weight, radius=problem.constraint.radius), 0

    if isinstance(spec, FullConvex):
        if problem.loss_kind != "least_squares":
            raise ConfigurationError(
                f"full convex surrogate needs a convex loss; {problem.loss_kind} is not convex"
            )
        return _prox_gradient(problem, spec, X, linear, weight)

    raise ConfigurationError(f"unsupported surrogate {spec!r}")


def _prox_gradient(problem, spec, X_cur, linear, weight):
    # smooth part: ||b_i - A_i x||^2 + linear_i^T x + tau/2 ||x - x_cur||^2
    tau, cfg = spec.tau, spec.inner
    L = (problem.lipschitz + tau)[:, None]
    x = X_cur.copy()
    diff = np.full(X_cur.shape[0], np.inf)
    for _ in range(cfg.max_iters):
        grad = problem.local_grads(x) + linear + tau * (x - X_cur)
        x_new = _prox_l1_set(x - grad / L, L, weight, problem.constraint)
        diff = np.max(np.abs(x_new - x), axis=1)
        x = x_new
        if np.all(diff <= cfg.tolerance):
            return x, 0
    unconverged = int(np.sum(diff > cfg.tolerance))
    log.warning("inner solver: %d agent(s) not converged after %d iterations", unconverged, cfg.max_iters)
    return x, unconverged


def solve_subproblem(loss, pen, lam, constraint, spec, x_cur, pi_tilde):
    """Single-agent subproblem minimizer; see :func:`local_step`."""
    single = ProblemInstance([loss], pen, lam, constraint)
    x_tilde, _ = local_step(single, spec, np.atleast_2d(x_cur), np.atleast_2d(pi_tilde))
    return x_tilde[0]
