"""Exterior distance function and the functions built around it.

For a center ``y`` strictly inside the feasible set, the problem is recast as
minimizing ``F(x, y) = -log(f(y) - f(x))`` under the same constraints.  The
exterior distance function is the Lagrangian of that problem after every
constraint is rescaled by ``psi(t) = log(t + 1)`` with scaling ``k``::

    EDF(x; lam, k) = -log(f(y) - f(x)) - (1/k) sum_i lam_i log(k c_i(x) + 1)

It is finite on ``{c_i >= -1/k, f(x) < f(y)}``, which reaches past the
feasible boundary, so it stays smooth at the solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import newton
from .exceptions import DomainError, InnerSolveFailure, StartOutOfDomain
from .problem import ProblemInstance, evaluate

DUAL_GRAD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Center:
    """An interior point ``y`` with ``f(y)`` cached and an interiority margin."""

    y: np.ndarray
    f_y: float
    gamma: float

    @classmethod
    def from_problem(cls, p: ProblemInstance, y, gamma: float = 1e-4) -> "Center":
        """Build a center, checking ``c_i(y) >= gamma`` for every constraint."""
        if not gamma > 0:
            raise DomainError(f"gamma must be positive, got {gamma}")
        y = np.array(y, dtype=float).ravel()
        ev = evaluate(p, y, order=0)
        if ev.c_vals.size and np.min(ev.c_vals) < gamma:
            raise DomainError(
                f"center has slack {np.min(ev.c_vals):.3g} below the margin gamma={gamma:g}")
        y.setflags(write=False)
        return cls(y, ev.f_val, float(gamma))


@dataclass(frozen=True)
class EDFParams:
    """Scaling parameter ``k > 0`` and nonnegative multipliers."""

    k: float
    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float).ravel()
        if not (np.isfinite(self.k) and self.k > 0):
            raise DomainError(f"k must be positive, got {self.k}")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise DomainError("multipliers must be finite and nonnegative")
        lam.setflags(write=False)
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "lam", lam)


class DomainViolation(NamedTuple):
    which: str  # "objective_level" or "constraint <i>"
    amount: float


@dataclass
class EDFEvaluation:
    value: Optional[float]
    gradient: Optional[np.ndarray]
    hessian: Optional[np.ndarray]
    in_domain: bool
    domain_violation: Optional[DomainViolation] = None
    c_vals: Optional[np.ndarray] = None


def delta(p: ProblemInstance, x, center: Center) -> float:
    """``f(y) - f(x)``; may be nonpositive."""
    return center.f_y - evaluate(p, x, order=0).f_val


def psi(t):
    t = np.asarray(t, dtype=float)
    _check_psi_domain(t)
    return np.log1p(t)


def psi_prime(t):
    t = np.asarray(t, dtype=float)
    _check_psi_domain(t)
    return 1.0 / (t + 1.0)


def psi_second(t):
    t = np.asarray(t, dtype=float)
    _check_psi_domain(t)
    return -1.0 / (t + 1.0) ** 2


def _check_psi_domain(t):
    if np.any(t <= -1.0):
        raise DomainError("psi is defined only for t > -1")


def _violation(level_gap, shifted):
    if level_gap <= 0:
        return DomainViolation("objective_level", -level_gap)
    i = int(np.argmin(shifted))
    if shifted[i] <= 0:
        return DomainViolation(f"constraint {i}", -float(shifted[i]))
    return None


def edf_eval(p: ProblemInstance, x, center: Center, params: EDFParams, order: int = 1) -> EDFEvaluation:
    """Value and derivatives of the exterior distance function at ``x``.

    Outside ``{f(x) < f(y), k c_i(x) + 1 > 0}`` the result has
    ``in_domain=False`` and no value; that is a normal outcome, not an error.
    """
    ev = evaluate(p, x, order=order)
    k, lam = params.k, params.lam
    gap = center.f_y - ev.f_val
    shifted = k * ev.c_vals + 1.0
    violation = _violation(gap, shifted)
    if violation is not None:
        return EDFEvaluation(None, None, None, False, violation, ev.c_vals)

    value = -np.log(gap) - float(lam @ np.log1p(k * ev.c_vals)) / k
    gradient = hessian = None
    if order >= 1:
        w = lam / shifted
        gradient = ev.f_grad / gap - ev.c_jac.T @ w
    if order == 2:
        hessian = np.outer(ev.f_grad, ev.f_grad) / gap**2 + ev.f_hess / gap
        for wi, Hi in zip(w, ev.c_hess):
            hessian -= wi * Hi
        hessian += k * (ev.c_jac.T * (lam / shifted**2)) @ ev.c_jac
        hessian = 0.5 * (hessian + hessian.T)
    return EDFEvaluation(float(value), gradient, hessian, True, None, ev.c_vals)


def lagrangian_eval(p: ProblemInstance, x, center: Center, lam, order: int = 1) -> EDFEvaluation:
    """Classical Lagrangian ``-log(f(y) - f(x)) - lam'c(x)`` of the recentred problem."""
    lam = np.asarray(lam, dtype=float)
    ev = evaluate(p, x, order=order)
    gap = center.f_y - ev.f_val
    if gap <= 0:
        return EDFEvaluation(None, None, None, False, DomainViolation("objective_level", -gap), ev.c_vals)
    value = -np.log(gap) - float(lam @ ev.c_vals)
    gradient = hessian = None
    if order >= 1:
        gradient = ev.f_grad / gap - ev.c_jac.T @ lam
    if order == 2:
        hessian = np.outer(ev.f_grad, ev.f_grad) / gap**2 + ev.f_hess / gap
        for li, Hi in zip(lam, ev.c_hess):
            hessian -= li * Hi
    return EDFEvaluation(float(value), gradient, hessian, True, None, ev.c_vals)


def rescale_multipliers(lambda_original, x_star, center: Center, p: ProblemInstance):
    """Map original-problem multipliers to the recentred problem (divide by ``f(y) - f(x*)``)."""
    gap = delta(p, x_star, center)
    if gap <= 0:
        raise DomainError(f"f(y) - f(x*) = {gap:.3g} must be positive")
    return np.asarray(lambda_original, dtype=float) / gap


def level_start(p: ProblemInstance, center: Center, k: Optional[float] = None):
    """A point strictly below the center's level, reached by a short descent step from ``y``.

    The center itself sits on the boundary ``f(x) = f(y)`` of every function
    built here, so minimizations cannot start there.  When ``k`` is given the
    point also satisfies ``k c_i + 1 > 0``.
    """
    y = np.asarray(center.y)
    g = evaluate(p, y, order=1).f_grad
    if not np.any(g):
        raise StartOutOfDomain("the center is an unconstrained minimizer of f; nothing lies below its level")
    t = 1.0
    while t > 1e-14:
        x = y - t * g
        ev = evaluate(p, x, order=0)
        if ev.f_val < center.f_y and (k is None or np.all(k * ev.c_vals + 1.0 > 0)):
            return x
        t *= 0.5
    raise StartOutOfDomain("no descent step from the center enters the domain")


class DualValue(NamedTuple):
    d: float
    argmin_x: np.ndarray


def dual_value(p: ProblemInstance, center: Center, lam, x_start=None, tol: float = DUAL_GRAD_TOL,
               max_iters: int = 200) -> DualValue:
    """Evaluate the dual function ``inf_x L_y(x, lam)`` by Newton's method.

    Raises
    ------
    InnerSolveFailure
        If the gradient tolerance is not reached.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("dual function needs nonnegative multipliers")
    if x_start is None or not lagrangian_eval(p, x_start, center, lam, 0).in_domain:
        x_start = level_start(p, center)

    def fun(x, order):
        e = lagrangian_eval(p, x, center, lam, order)
        return newton.Evaluation(e.value, e.gradient, e.hessian, e.in_domain)

    def stop(x, ev):
        return "converged" if np.max(np.abs(ev.gradient)) <= tol else None

    run = newton.minimize(fun, x_start, stop, max_iters=max_iters, use_hessian=p.has_hessian)
    if run.reason != "converged":
        raise InnerSolveFailure(
            f"dual evaluation stopped ({run.reason}) with gradient norm "
            f"{np.max(np.abs(run.evaluation.gradient)):.3g}")
    return DualValue(run.evaluation.value, run.x)


def merit(p: ProblemInstance, x, center: Center, lam) -> float:
    """Primal-dual merit: the largest of the Lagrangian gradient (max-norm),
    the weighted complementarity ``sum lam_i |c_i|`` and the worst violation.

    Returns ``inf`` when ``f(x) >= f(y)``.
    """
    lam = np.asarray(lam, dtype=float)
    e = lagrangian_eval(p, x, center, lam, order=1)
    if not e.in_domain:
        return np.inf
    c = e.c_vals
    return float(max(np.max(np.abs(e.gradient)), lam @ np.abs(c), np.max(-c, initial=-np.inf)))
