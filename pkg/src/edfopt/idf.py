"""Huard's interior distance function and the interior center method.

This is a diagnostic baseline: it exists to show how the Hessian of the
classical barrier-type function degrades near the solution, for contrast
with the exterior distance function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from . import newton
from .exceptions import InnerSolveFailure, StartOutOfDomain
from .problem import ProblemInstance, evaluate

ICM_GRAD_TOL = 1e-10


def condition_number(hessian) -> float:
    """Ratio of extreme eigenvalues of a symmetric matrix; ``inf`` unless positive definite."""
    w = np.linalg.eigvalsh(np.asarray(hessian, dtype=float))
    if w[0] <= 1e-14:
        return np.inf
    return float(w[-1] / w[0])


class IDFEvaluation(NamedTuple):
    value: Optional[float]
    gradient: Optional[np.ndarray]
    hessian: Optional[np.ndarray]
    in_domain: bool


def idf_eval(p: ProblemInstance, x, tau: float, order: int = 1) -> IDFEvaluation:
    """``H(x, tau) = -m log(tau - f(x)) - sum_i log c_i(x)`` and its derivatives."""
    ev = evaluate(p, x, order=order)
    gap = tau - ev.f_val
    c = ev.c_vals
    if gap <= 0 or np.any(c <= 0):
        return IDFEvaluation(None, None, None, False)
    m = p.m
    value = -m * np.log(gap) - float(np.sum(np.log(c)))
    gradient = hessian = None
    if order >= 1:
        gradient = m * ev.f_grad / gap - ev.c_jac.T @ (1.0 / c)
    if order == 2:
        hessian = m * np.outer(ev.f_grad, ev.f_grad) / gap**2 + m * ev.f_hess / gap
        for ci, Hi in zip(c, ev.c_hess):
            hessian -= Hi / ci
        hessian += (ev.c_jac.T / c**2) @ ev.c_jac
        hessian = 0.5 * (hessian + hessian.T)
    return IDFEvaluation(float(value), gradient, hessian, True)


class ICMRecord(NamedTuple):
    tau: float  # the level used for this step
    x: np.ndarray
    lambda_hat: np.ndarray
    hessian_cond: float


@dataclass
class IDFState:
    """Current level ``tau`` and center ``x``, plus the step history."""

    tau: float
    x: np.ndarray
    trajectory: List[ICMRecord] = field(default_factory=list)


def _strict_start(p, x, tau):
    """``x`` if it is inside ``{c > 0, f < tau}``, else a short descent step from it."""
    if idf_eval(p, x, tau, 0).in_domain:
        return np.asarray(x, dtype=float)
    g = evaluate(p, x, order=1).f_grad
    t = 1.0
    while t > 1e-16:
        trial = x - t * g
        if idf_eval(p, trial, tau, 0).in_domain:
            return trial
        t *= 0.5
    raise StartOutOfDomain("cannot find a strictly feasible point below the level")


def icm_step(p: ProblemInstance, state: IDFState, max_iters: int = 200) -> IDFState:
    """Find the minimizer of ``H(., tau)``, then lower the level to its objective value.

    The multiplier estimates are ``(tau - f(x_hat)) / (m c_i(x_hat))``.
    """
    tau = state.tau
    x0 = _strict_start(p, np.asarray(state.x, dtype=float), tau)

    def fun(x, order):
        e = idf_eval(p, x, tau, order)
        return newton.Evaluation(e.value, e.gradient, e.hessian, e.in_domain)

    def stop(x, ev):
        return "converged" if np.max(np.abs(ev.gradient)) <= ICM_GRAD_TOL else None

    run = newton.minimize(fun, x0, stop, max_iters=max_iters, use_hessian=p.has_hessian)
    if run.reason == "iter_cap":
        raise InnerSolveFailure(f"ICM center not found within {max_iters} iterations")
    # "stalled" means the gradient is at roundoff level for this scaling; the
    # center is as accurate as double precision allows.
    x_hat = run.x
    ev = evaluate(p, x_hat, order=0)
    lam_hat = (tau - ev.f_val) / (p.m * ev.c_vals)
    cond = condition_number(idf_eval(p, x_hat, tau, 2).hessian) if p.has_hessian else np.nan
    record = ICMRecord(tau, x_hat, lam_hat, cond)
    return IDFState(ev.f_val, x_hat, state.trajectory + [record])


def run_icm(p: ProblemInstance, x0, steps: int, max_iters: int = 200) -> IDFState:
    """Run ``steps`` interior center steps from the strictly feasible ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    if np.any(evaluate(p, x0, order=0).c_vals <= 0):
        raise StartOutOfDomain("ICM needs a strictly feasible start")
    state = IDFState(evaluate(p, x0, order=0).f_val, x0)
    for _ in range(steps):
        state = icm_step(p, state, max_iters=max_iters)
    return state
