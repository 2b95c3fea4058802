"""
Separable difference-of-convex sparsity penalties.

Every penalty is written as ``g(x) = g_plus(x) - g_minus(x)`` with
``g_plus(x) = eta * |x|`` convex and nonsmooth, and ``g_minus`` convex with
a Lipschitz gradient. Vector versions sum over components.
"""

from dataclasses import dataclass

import numpy as np

KINDS = ("exp", "lp_plus", "lp_minus", "scad", "log", "l1")


class PenaltyError(ValueError):
    pass


@dataclass(frozen=True)
class DCPenalty:
    """
    Parameters of one member of the penalty family.

    Parameters
    ----------
    kind : str
        One of ``exp``, ``lp_plus``, ``lp_minus``, ``scad``, ``log``, ``l1``.
    theta : float
        Shape parameter. For ``lp_plus`` the exponent is ``1 / theta``.
    a : float
        SCAD knee ratio, must exceed 1.
    p : float
        Negative exponent of ``lp_minus``.
    epsilon : float
        Offset of ``lp_plus``.
    """

    kind: str = "log"
    theta: float = 20.0
    a: float = 2.0
    p: float = -1.0
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PenaltyError(f"unknown penalty kind {self.kind!r}; expected one of {KINDS}")
        if not self.theta > 0:
            raise PenaltyError(f"theta must be positive, got {self.theta}")
        if self.kind == "scad" and not self.a > 1:
            raise PenaltyError(f"SCAD requires a > 1, got {self.a}")
        if self.kind == "lp_minus" and not self.p < 0:
            raise PenaltyError(f"lp_minus requires p < 0, got {self.p}")
        if self.kind == "lp_plus":
            if not self.epsilon > 0:
                raise PenaltyError(f"lp_plus requires epsilon > 0, got {self.epsilon}")
            if not self.theta >= 1:
                # exponent 1/theta must lie in (0, 1] for g_minus to be convex
                raise PenaltyError(f"lp_plus requires theta >= 1, got {self.theta}")

    @property
    def eta(self):
        return eta(self)


def eval_g(pen, x):
    """Scalar penalty ``g``, applied componentwise to arrays."""
    out = np.asarray(_eval_g(pen, np.abs(np.asarray(x, dtype=float))))
    return out[()] if out.ndim == 0 else out


def _eval_g(pen, ax):
    th = pen.theta
    if pen.kind == "exp":
        return 1.0 - np.exp(-th * ax)
    if pen.kind == "lp_plus":
        return (ax + pen.epsilon) ** (1.0 / th)
    if pen.kind == "lp_minus":
        return 1.0 - (th * ax + 1.0) ** pen.p
    if pen.kind == "scad":
        a = pen.a
        inner = 2.0 * th / (a + 1.0) * ax
        middle = (-(th**2) * ax**2 + 2.0 * a * th * ax - 1.0) / (a**2 - 1.0)
        return np.where(ax <= 1.0 / th, inner, np.where(ax <= a / th, middle, 1.0))
    if pen.kind == "log":
        return np.log1p(th * ax) / np.log1p(th)
    return ax


def eta(pen):
    """Slope of the convex part ``g_plus = eta * |x|``."""
    th = pen.theta
    if pen.kind == "exp":
        return th
    if pen.kind == "lp_plus":
        return (1.0 / th) * pen.epsilon ** (1.0 / th - 1.0)
    if pen.kind == "lp_minus":
        return -pen.p * th
    if pen.kind == "scad":
        return 2.0 * th / (pen.a + 1.0)
    if pen.kind == "log":
        return th / np.log1p(th)
    return 1.0


def grad_g_minus(pen, x):
    """Derivative of ``g_minus = eta * |x| - g``; odd and zero at the origin."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    s = np.sign(x)  # sign(0) = 0
    th = pen.theta
    if pen.kind == "exp":
        out = s * th * (1.0 - np.exp(-th * ax))
    elif pen.kind == "lp_plus":
        q = 1.0 / th - 1.0
        out = (1.0 / th) * s * (pen.epsilon**q - (ax + pen.epsilon) ** q)
    elif pen.kind == "lp_minus":
        out = -s * pen.p * th * (1.0 - (1.0 + th * ax) ** (pen.p - 1.0))
    elif pen.kind == "scad":
        a = pen.a
        middle = s * 2.0 * th * (th * ax - 1.0) / (a**2 - 1.0)
        outer = s * 2.0 * th / (a + 1.0)
        out = np.where(ax <= 1.0 / th, 0.0, np.where(ax <= a / th, middle, outer))
    elif pen.kind == "log":
        out = s * th**2 * ax / (np.log1p(th) * (1.0 + th * ax))
    else:
        out = np.zeros_like(x)
    return out[()] if out.ndim == 0 else out


def grad_minus_lipschitz(pen):
    """Global Lipschitz constant of ``grad_g_minus`` (its largest slope)."""
    th = pen.theta
    if pen.kind == "exp":
        return th**2
    if pen.kind == "lp_plus":
        q = 1.0 / th
        return q * (1.0 - q) * pen.epsilon ** (q - 2.0)
    if pen.kind == "lp_minus":
        return pen.p * (pen.p - 1.0) * th**2
    if pen.kind == "scad":
        return 2.0 * th**2 / (pen.a**2 - 1.0)
    if pen.kind == "log":
        return th**2 / np.log1p(th)
    return 0.0


def soft_threshold(x, tau):
    """``sign(x) * max(|x| - tau, 0)``, componentwise. ``tau`` may broadcast."""
    if np.any(np.asarray(tau) < 0):
        raise PenaltyError("soft-threshold level must be nonnegative")
    out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    return out[()] if np.ndim(out) == 0 else out


def eval_G(pen, x):
    return float(np.sum(eval_g(pen, np.asarray(x, dtype=float))))


def grad_G_minus(pen, x):
    return grad_g_minus(pen, np.asarray(x, dtype=float))


def eval_G_plus(pen, x):
    return eta(pen) * float(np.sum(np.abs(x)))
