"""
Problem instances: local smooth losses, a shared DC penalty, and a convex set.

Two generators reproduce the experiment families: sparse linear regression
with the Log penalty and sparse PCA over the unit ball with SCAD.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .penalty import DCPenalty, eval_G


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintSet:
    kind: str = "all_space"
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("all_space", "l2_ball"):
            raise ProblemError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "l2_ball" and not self.radius > 0:
            raise ProblemError("ball radius must be positive")

    @property
    def bounded(self):
        return self.kind == "l2_ball"

    def project(self, x):
        """Euclidean projection; works row-wise on a stack of points."""
        if self.kind == "all_space":
            return np.array(x, dtype=float, copy=True)
        x = np.asarray(x, dtype=float)
        norms = np.linalg.norm(x, axis=-1, keepdims=True)
        scale = np.where(norms > self.radius, self.radius / np.where(norms > 0, norms, 1.0), 1.0)
        return x * scale


ALL_SPACE = ConstraintSet()
UNIT_BALL = ConstraintSet("l2_ball", 1.0)


@dataclass(frozen=True, eq=False)
class LeastSquares:
    """``f(x) = ||b - A x||^2``."""

    A: np.ndarray
    b: np.ndarray

    kind = "least_squares"

    @property
    def dim(self):
        return self.A.shape[1]

    def value(self, x):
        r = self.b - self.A @ _check(x, self.dim)
        return float(r @ r)

    def grad(self, x):
        return 2.0 * self.A.T @ (self.A @ _check(x, self.dim) - self.b)

    @cached_property
    def lipschitz(self):
        # spectral norm via SVD; these matrices are small
        return 2.0 * np.linalg.norm(self.A, 2) ** 2


@dataclass(frozen=True, eq=False)
class NegPCA:
    """``f(x) = -||D x||^2``; concave."""

    D: np.ndarray

    kind = "neg_pca"

    @property
    def dim(self):
        return self.D.shape[1]

    def value(self, x):
        y = self.D @ _check(x, self.dim)
        return -float(y @ y)

    def grad(self, x):
        return -2.0 * self.gram @ _check(x, self.dim)

    @cached_property
    def gram(self):
        return self.D.T @ self.D

    @cached_property
    def lipschitz(self):
        return 2.0 * np.linalg.eigvalsh(self.gram)[-1]


def _check(x, m):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m:
        raise ProblemError(f"dimension mismatch: expected {m}, got {x.shape[-1]}")
    return x


def grad_f(loss, x):
    return loss.grad(x)


@dataclass(eq=False)
class ProblemInstance:
    """
    ``min_{x in K} sum_i f_i(x) + lam * G(x)``.

    ``ground_truth`` is the reference for NMSE (``x0`` or ``u2``); ``info``
    carries generator by-products such as the PCA covariance.
    """

    losses: list
    penalty: DCPenalty
    lam: float
    constraint: ConstraintSet = ALL_SPACE
    ground_truth: np.ndarray | None = None
    sign_invariant: bool = False
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.losses:
            raise ProblemError("need at least one agent")
        dims = {loss.dim for loss in self.losses}
        if len(dims) != 1:
            raise ProblemError(f"all losses must share one dimension, got {sorted(dims)}")
        kinds = {loss.kind for loss in self.losses}
        if len(kinds) != 1:
            raise ProblemError("mixed loss kinds are not supported")
        if self.lam < 0:
            raise ProblemError("lambda must be nonnegative")

    @property
    def n_agents(self):
        return len(self.losses)

    @property
    def dim(self):
        return self.losses[0].dim

    @property
    def loss_kind(self):
        return self.losses[0].kind

    # stacked data for whole-network evaluation; shapes (I, rows, m) / (I, m, m)
    @cached_property
    def _stack_A(self):
        # agents may hold different row counts; zero rows leave the gradient unchanged
        rows = max(loss.A.shape[0] for loss in self.losses)
        out = np.zeros((self.n_agents, rows, self.dim))
        for i, loss in enumerate(self.losses):
            out[i, : loss.A.shape[0]] = loss.A
        return out

    @cached_property
    def _stack_b(self):
        rows = self._stack_A.shape[1]
        out = np.zeros((self.n_agents, rows))
        for i, loss in enumerate(self.losses):
            out[i, : loss.b.shape[0]] = loss.b
        return out

    @cached_property
    def _stack_gram(self):
        return np.stack([loss.gram for loss in self.losses])

    @cached_property
    def lipschitz(self):
        return np.array([loss.lipschitz for loss in self.losses])

    def local_grads(self, X):
        """Row ``i`` is ``grad f_i(X[i])``."""
        X = _check(X, self.dim)
        if self.loss_kind == "least_squares":
            A = self._stack_A
            r = np.einsum("irm,im->ir", A, X) - self._stack_b
            return 2.0 * np.einsum("irm,ir->im", A, r)
        return -2.0 * np.einsum("imk,ik->im", self._stack_gram, X)

    def grad_F(self, x):
        x = _check(x, self.dim)
        return np.sum([loss.grad(x) for loss in self.losses], axis=0)

    def smooth_value(self, x):
        return sum(loss.value(x) for loss in self.losses)

    def objective(self, x):
        return self.smooth_value(x) + self.lam * eval_G(self.penalty, x)

    def save(self, path):
        """Dump the local data to a ``.npz`` archive."""
        arrays = {}
        for i, loss in enumerate(self.losses):
            if loss.kind == "least_squares":
                arrays[f"A_{i}"], arrays[f"b_{i}"] = loss.A, loss.b
            else:
                arrays[f"D_{i}"] = loss.D
        if self.ground_truth is not None:
            arrays["ground_truth"] = self.ground_truth
        np.savez(path, **arrays)


def gen_sparse_regression(
    I=30, m=200, rows_per_agent=20, sparsity=0.8, sigma=0.1, theta=20.0, lam=0.5, seed=0,
    penalty=None,
):
    """
    Sparse linear model ``b_i = A_i x0 + n_i`` split over ``I`` agents.

    ``A_i`` has i.i.d. Gaussian entries with rows rescaled to unit norm;
    ``floor(sparsity * m)`` entries of the Gaussian ``x0`` are zeroed at random
    positions; noise is Gaussian with per-component std ``sigma``. The
    penalty defaults to Log with the given ``theta``.
    """
    if not 0 <= sparsity < 1:
        raise ProblemError("sparsity must lie in [0, 1)")
    if sigma < 0:
        raise ProblemError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(m)
    x0[rng.choice(m, size=int(np.floor(sparsity * m)), replace=False)] = 0.0
    losses = []
    for _ in range(I):
        A = rng.standard_normal((rows_per_agent, m))
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        b = A @ x0 + sigma * rng.standard_normal(rows_per_agent)
        losses.append(LeastSquares(A, b))
    return ProblemInstance(
        losses,
        penalty if penalty is not None else DCPenalty("log", theta),
        lam,
        ALL_SPACE,
        ground_truth=x0,
    )


def sparse_pca_covariance(m, rng, rest_range=(0.1, 5.0)):
    """
    Covariance with a dense top eigenvector (eigenvalue 12) followed by two
    5-sparse eigenvectors on disjoint supports (eigenvalues 10 and 8).

    Returns ``(sigma, eigvals, eigvecs)`` with eigenvectors as columns in the
    order ``u1, u2, u3, ...``.
    """
    if m < 10:
        raise ProblemError(f"sparse PCA needs m >= 10 to host two disjoint 5-sparse eigenvectors, got {m}")
    supports = rng.permutation(m)[:10]
    u2 = np.zeros(m)
    u3 = np.zeros(m)
    u2[supports[:5]] = rng.standard_normal(5)
    u3[supports[5:]] = rng.standard_normal(5)
    u2 /= np.linalg.norm(u2)
    u3 /= np.linalg.norm(u3)
    u1 = rng.standard_normal(m)
    u1 -= (u1 @ u2) * u2 + (u1 @ u3) * u3
    u1 /= np.linalg.norm(u1)
    # complete the basis: orthonormalize random directions against u1, u2, u3
    basis = np.column_stack([u1, u2, u3, rng.standard_normal((m, m - 3))])
    q, r = np.linalg.qr(basis)
    q = q * np.sign(np.diag(r))  # keep q[:, :3] == (u1, u2, u3) rather than their negatives
    q[:, :3] = np.column_stack([u1, u2, u3])
    eigvals = np.concatenate([[12.0, 10.0, 8.0], rng.uniform(*rest_range, size=m - 3)])
    sigma = (q * eigvals) @ q.T
    sigma = 0.5 * (sigma + sigma.T)
    return sigma, eigvals, q


def gen_sparse_pca(I=30, rows_per_agent=500, m=30, theta=20.0, a=2.0, lam=5.0, seed=0, penalty=None,
                   normalize_rows=False):
    """
    Sparse PCA: each agent owns ``D_i`` with rows i.i.d. ``N(0, Sigma)``.

    The loss is ``-||D_i x||^2`` over the unit ball with a SCAD penalty; the
    target is the second eigenvector ``u2`` (5-sparse), compared up to sign.

    With raw rows ``D_i^T D_i`` is about ``rows_per_agent * Sigma``, which
    swamps ``lam * G`` so every method lands near the dense ``u1``.
    ``normalize_rows=True`` divides ``D_i`` by ``sqrt(rows_per_agent)`` so the
    local Gram matrix is the sample covariance and the penalty can favour
    the sparse ``u2``.
    """
    rng = np.random.default_rng(seed)
    sigma, eigvals, eigvecs = sparse_pca_covariance(m, rng)
    root = eigvecs * np.sqrt(eigvals)
    scale = 1.0 / np.sqrt(rows_per_agent) if normalize_rows else 1.0
    losses = [NegPCA(scale * (rng.standard_normal((rows_per_agent, m)) @ root.T)) for _ in range(I)]
    return ProblemInstance(
        losses,
        penalty if penalty is not None else DCPenalty("scad", theta, a=a),
        lam,
        UNIT_BALL,
        ground_truth=eigvecs[:, 1].copy(),
        sign_invariant=True,
        info={"covariance": sigma, "eigenvalues": eigvals, "eigenvectors": eigvecs},
    )


def objective(problem, x):
    return problem.objective(x)
