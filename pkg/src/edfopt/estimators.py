"""Estimator-style wrappers around the solvers.

``fit`` takes a :class:`ProblemInstance` instead of a data matrix and stores
the solution in trailing-underscore attributes.  There is nothing to predict
or transform, so only ``fit`` and the parameter API are provided.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .epm import CONVERGED, EPMConfig, solve
from .idf import run_icm
from .inner import InnerConfig
from .problem import ProblemInstance


def check_problem(problem) -> ProblemInstance:
    """Ensure ``problem`` is a :class:`ProblemInstance`."""
    if not isinstance(problem, ProblemInstance):
        raise TypeError(f"expected a ProblemInstance, got {type(problem).__name__}")
    return problem


def check_point(x, n: int, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite float vector of length ``n``."""
    a = np.asarray(x, dtype=float).ravel()
    if a.size != n:
        raise ValueError(f"{name} has {a.size} entries, expected {n}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


class ExteriorPointSolver(BaseEstimator):
    """Exterior point method with the usual estimator parameter API.

    Parameters mirror :class:`EPMConfig` plus ``max_inner`` and ``inner_grad_tol``
    for the inner Newton solves.

    Attributes
    ----------
    result_ : SolveResult
    x_ : ndarray
        Final primal point.
    lambda_ : ndarray
        Final multipliers of the recentred problem.
    status_ : str
    n_iter_ : int
        Outer iterations performed.
    trajectory_ : list of IterationRecord
    """

    def __init__(self, k=10.0, k_growth=1.0, alpha=1.0, gamma=1e-4, delta_reduction=None,
                 epsilon=1e-8, lambda0=None, max_outer=200, center_update_enabled=True,
                 linesearch_grid=64, rescale_k_on_center_update=True, max_inner=100,
                 inner_grad_tol=1e-10):
        self.k = k
        self.k_growth = k_growth
        self.alpha = alpha
        self.gamma = gamma
        self.delta_reduction = delta_reduction
        self.epsilon = epsilon
        self.lambda0 = lambda0
        self.max_outer = max_outer
        self.center_update_enabled = center_update_enabled
        self.linesearch_grid = linesearch_grid
        self.rescale_k_on_center_update = rescale_k_on_center_update
        self.max_inner = max_inner
        self.inner_grad_tol = inner_grad_tol

    def _configs(self):
        names = {f.name for f in dataclasses.fields(EPMConfig)}
        cfg = EPMConfig(**{k: v for k, v in self.get_params().items() if k in names})
        return cfg, InnerConfig(max_iters=self.max_inner, grad_tol_abs=self.inner_grad_tol)

    def fit(self, problem, center=None, x0=None):
        """Solve ``problem`` from ``center`` (default: its interior point)."""
        p = check_problem(problem)
        if center is not None:
            center = check_point(center, p.n, "center")
        if x0 is not None:
            x0 = check_point(x0, p.n, "x0")
        cfg, inner_cfg = self._configs()
        self.result_ = solve(p, cfg, inner_cfg, center=center, x0=x0)
        self.x_ = self.result_.x_final
        self.lambda_ = self.result_.lambda_final
        self.status_ = self.result_.status
        self.n_iter_ = self.result_.outer_iterations
        self.trajectory_ = self.result_.trajectory
        return self

    @property
    def converged_(self):
        check_is_fitted(self, "result_")
        return self.status_ == CONVERGED


class InteriorCenterSolver(BaseEstimator):
    """Interior center method baseline.

    Attributes
    ----------
    x_ : ndarray
        Last computed center.
    tau_ : float
        Last level.
    lambda_ : ndarray
        Multiplier estimates at the last center.
    trajectory_ : list of ICMRecord
    n_iter_ : int
    """

    def __init__(self, steps=15, max_inner=200):
        self.steps = steps
        self.max_inner = max_inner

    def fit(self, problem, x0=None):
        p = check_problem(problem)
        if x0 is None:
            if p.interior_point is None:
                raise ValueError(f"{p.name} has no interior point; pass x0")
            x0 = p.interior_point
        state = run_icm(p, check_point(x0, p.n, "x0"), int(self.steps), max_iters=self.max_inner)
        self.x_ = state.x
        self.tau_ = state.tau
        self.trajectory_ = state.trajectory
        self.lambda_ = state.trajectory[-1].lambda_hat if state.trajectory else None
        self.n_iter_ = len(state.trajectory)
        return self
