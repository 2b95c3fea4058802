"""Progress measures computed centrally from a snapshot of all agents."""

from dataclasses import dataclass

import numpy as np

from .penalty import eta, grad_G_minus
from .solver import ConfigurationError, ball_prox_solve


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsRecord:
    round: int
    comm: int
    J: float
    D: float
    NMSE: float
    objective: float

    @property
    def NMSE_dB(self):
        return 10.0 * np.log10(self.NMSE) if self.NMSE > 0 else -np.inf


def weighted_average(x, phi):
    """``(1/I) * sum_i phi_i x_i`` for rows ``x[i]``."""
    x = np.atleast_2d(x)
    return np.asarray(phi, dtype=float) @ x / x.shape[0]


def _network_grad(problem, z):
    return problem.local_grads(np.broadcast_to(z, (problem.n_agents, z.size))).sum(axis=0)


def stationarity_J_unconstrained(problem, z):
    """``|| z - S_{eta*lam}(z - (grad F(z) - lam * grad G_minus(z))) ||_inf``."""
    if problem.constraint.kind != "all_space":
        raise ConfigurationError("unconstrained stationarity measure called on a constrained problem")
    z = np.asarray(z, dtype=float)
    lam = problem.lam
    c = _network_grad(problem, z) - lam * grad_G_minus(problem.penalty, z)
    u = z - c
    prox = np.sign(u) * np.maximum(np.abs(u) - eta(problem.penalty) * lam, 0.0)
    return float(np.max(np.abs(z - prox)))


def stationarity_J_constrained(problem, z):
    """
    ``|| x_hat(z) - z ||_inf`` where ``x_hat(z)`` minimizes
    ``lam*G_plus(x) + (grad F(z) - lam*grad G_minus(z))^T x + ||x - z||^2 / 2`` over the ball.
    """
    if problem.constraint.kind != "l2_ball":
        raise ConfigurationError("constrained stationarity measure needs a ball constraint")
    z = np.asarray(z, dtype=float)
    lam = problem.lam
    c = _network_grad(problem, z) - lam * grad_G_minus(problem.penalty, z)
    x_hat = ball_prox_solve(c, z, 1.0, lam * eta(problem.penalty), radius=problem.constraint.radius)
    return float(np.max(np.abs(x_hat - z)))


def stationarity(problem, z):
    if problem.constraint.kind == "all_space":
        return stationarity_J_unconstrained(problem, z)
    return stationarity_J_constrained(problem, z)


def consensus_D(x, phi):
    """``max_i || x_i - z_bar ||_inf``."""
    x = np.atleast_2d(x)
    z = weighted_average(x, phi)
    return float(np.max(np.abs(x - z)))


def nmse(x, ground_truth, sign_invariant=False):
    """
    ``(1/I) * sum_i ||x_i - x0||^2 / ||x0||^2``.

    With ``sign_invariant`` the reference is ``s * x0`` for whichever
    ``s in {+1, -1}`` gives the smaller value (one sign for all agents).
    """
    x = np.atleast_2d(x)
    x0 = np.asarray(ground_truth, dtype=float)
    denom = float(x0 @ x0)
    if denom == 0:
        raise MetricsError("NMSE needs a nonzero ground truth")
    err = np.mean(np.sum((x - x0) ** 2, axis=1)) / denom
    if sign_invariant:
        err = min(err, np.mean(np.sum((x + x0) ** 2, axis=1)) / denom)
    return float(err)
