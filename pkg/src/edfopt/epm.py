"""The exterior point method: EDF minimization alternated with multiplier updates.

Each outer pass applies the relaxation operator (one approximate inner
minimization followed by ``lam_i <- lam_i / (k c_i + 1)``), stops when the
merit function drops below ``epsilon``, and otherwise may move the center
toward the solution when doing so lowers ``f`` by at least ``delta_reduction``.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from .edf import Center, EDFParams, edf_eval, lagrangian_eval, level_start, merit
from .exceptions import DomainError, EDFOptError
from .idf import condition_number
from .inner import InnerConfig, InnerResult, minimize_edf
from .problem import ProblemInstance, evaluate

logger = logging.getLogger(__name__)

CONVERGED = "Converged"
ITER_CAP = "IterCap"
INNER_FAILURE = "InnerFailure"


@dataclass(frozen=True)
class EPMConfig:
    """Outer-loop parameters.

    ``delta_reduction=None`` resolves at solve time to one percent of
    ``f(y0) - f(x*)`` when the solution is known, else ``1e-2``.
    ``lambda0=None`` means all ones.  ``alpha`` overrides the inner config's.
    With ``rescale_k_on_center_update`` an accepted center move multiplies
    ``k`` by ``(f(y_old) - f(x_bar)) / (f(y_new) - f(x_bar))``; the multiplier
    contraction factor behaves like ``1 / (k (f(y) - f(x*)) + 1)``, so without
    this a center approaching the solution stalls the method.
    """

    k: float = 10.0
    k_growth: float = 1.0
    alpha: float = 1.0
    gamma: float = 1e-4
    delta_reduction: Optional[float] = None
    epsilon: float = 1e-8
    lambda0: Optional[tuple] = None
    max_outer: int = 200
    center_update_enabled: bool = True
    linesearch_grid: int = 64
    rescale_k_on_center_update: bool = True

    def __post_init__(self):
        for name in ("k", "alpha", "gamma", "epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.k_growth >= 1:
            raise ValueError(f"k_growth must be at least 1, got {self.k_growth}")
        if self.delta_reduction is not None and not self.delta_reduction > 0:
            raise ValueError(f"delta_reduction must be positive, got {self.delta_reduction}")
        if self.max_outer < 0 or self.linesearch_grid < 1:
            raise ValueError("max_outer must be >= 0 and linesearch_grid >= 1")
        if self.lambda0 is not None:
            lam0 = tuple(float(v) for v in np.ravel(self.lambda0))
            if any(not (v >= 0 and np.isfinite(v)) for v in lam0):
                raise ValueError("lambda0 must be finite and nonnegative")
            object.__setattr__(self, "lambda0", lam0)


@dataclass
class EPMState:
    center: Center
    x: np.ndarray
    lam: np.ndarray
    k: float
    outer_index: int = 0


class IterationRecord(NamedTuple):
    """Telemetry for one outer pass, taken at the relaxed point ``(x_bar, lambda_bar)``."""

    outer_index: int
    dual_val: float
    primal_F: float
    merit: float
    complementarity: float
    inner_iters: int
    edf_hessian_cond: Optional[float]
    center_updated: bool
    k_used: float
    center_f: float
    x: np.ndarray
    lam: np.ndarray
    inner_stop: str


@dataclass
class SolveResult:
    status: str
    x_final: Optional[np.ndarray]
    lambda_final: Optional[np.ndarray]
    merit_final: float
    trajectory: List[IterationRecord] = field(default_factory=list)
    ergodic_x: Optional[np.ndarray] = None
    active_set_estimate: tuple = ()
    center: Optional[Center] = None
    message: str = ""

    @property
    def outer_iterations(self):
        return len(self.trajectory)

    @property
    def inner_iterations(self):
        return sum(r.inner_iters for r in self.trajectory)


def multiplier_update(lam, c_vals, k: float):
    """``lam_i / (k c_i + 1)``, the exterior-point multiplier update."""
    lam = np.asarray(lam, dtype=float)
    shifted = k * np.asarray(c_vals, dtype=float) + 1.0
    if np.any(shifted <= 0):
        raise DomainError("multiplier update needs k c_i + 1 > 0 for every constraint")
    return lam / shifted


class Relaxation(NamedTuple):
    x_bar: np.ndarray
    lambda_bar: np.ndarray
    inner_result: InnerResult


def relaxation_operator(p: ProblemInstance, state: EPMState, inner_cfg: InnerConfig = InnerConfig()) -> Relaxation:
    """One inner minimization from ``state.x`` followed by one multiplier update."""
    res = minimize_edf(p, state.center, EDFParams(state.k, state.lam), state.x, inner_cfg)
    c = evaluate(p, res.x_bar, order=0).c_vals
    return Relaxation(res.x_bar, multiplier_update(state.lam, c, state.k), res)


class LineSearchPoint(NamedTuple):
    tau_bar: float
    x_tau: np.ndarray


def center_linesearch(p: ProblemInstance, center: Center, x_bar, gamma: float, grid: int = 64) -> LineSearchPoint:
    """Largest grid ``tau`` with ``y + tau (x_bar - y)`` in the ``gamma``-interior and
    ``f`` nonincreasing along the segment there; ``tau = 0`` when none qualifies."""
    y = np.asarray(center.y)
    direction = np.asarray(x_bar, dtype=float) - y
    for j in range(grid, 0, -1):
        tau = j / grid
        x_tau = y + tau * direction
        ev = evaluate(p, x_tau, order=1)
        if np.all(ev.c_vals >= gamma) and ev.f_grad @ direction <= 0:
            return LineSearchPoint(tau, x_tau)
    return LineSearchPoint(0.0, np.array(y))


class CenterUpdate(NamedTuple):
    updated: bool
    new_center: Center


def center_update(p: ProblemInstance, center: Center, x_tau, delta_reduction: float) -> CenterUpdate:
    """Move the center to the midpoint of ``y`` and ``x_tau`` if ``f`` drops by ``delta_reduction``.

    The move is declined when the midpoint would leave the ``gamma``-interior.
    """
    f_tau = evaluate(p, x_tau, order=0).f_val
    if center.f_y - f_tau < delta_reduction:
        return CenterUpdate(False, center)
    try:
        new = Center.from_problem(p, 0.5 * (np.asarray(center.y) + np.asarray(x_tau)), center.gamma)
    except DomainError:
        return CenterUpdate(False, center)
    return CenterUpdate(True, new)


def _default_delta(p, center):
    if p.known_solution is not None:
        gap = center.f_y - evaluate(p, p.known_solution.x, order=0).f_val
        if gap > 0:
            return 1e-2 * gap
    return 1e-2


def _warm_start(p, center, k, lam, x):
    if x is not None and edf_eval(p, x, center, EDFParams(k, lam), order=0).in_domain:
        return np.asarray(x, dtype=float)
    return level_start(p, center, k)


def solve(
    p: ProblemInstance,
    cfg: EPMConfig = EPMConfig(),
    inner_cfg: InnerConfig = InnerConfig(),
    center=None,
    x0=None,
    on_record=None,
) -> SolveResult:
    """Run the exterior point method on ``p``.

    Parameters
    ----------
    p : ProblemInstance
    cfg : EPMConfig
    inner_cfg : InnerConfig
        Its ``alpha`` is replaced by ``cfg.alpha``.
    center : array, optional
        Initial center; defaults to ``p.interior_point``.
    x0 : array, optional
        Initial primal point; if absent or outside the EDF domain, a short
        descent step from the center is used.
    on_record : callable, optional
        Called with each :class:`IterationRecord` as soon as it exists.

    Returns
    -------
    SolveResult
    """
    if center is None:
        if p.interior_point is None:
            raise ValueError(f"{p.name} has no interior point; pass a center")
        center = p.interior_point
    ctr = Center.from_problem(p, center, cfg.gamma)
    inner_cfg = dataclasses.replace(inner_cfg, alpha=cfg.alpha)
    delta_reduction = cfg.delta_reduction or _default_delta(p, ctr)
    lam = np.ones(p.m) if cfg.lambda0 is None else np.array(cfg.lambda0, dtype=float)
    if lam.shape != (p.m,):
        raise ValueError(f"lambda0 has {lam.size} entries, problem has {p.m} constraints")
    k = cfg.k

    records = []
    x_sum = np.zeros(p.n)
    x_bar = lam_bar = None
    nu = np.inf
    status = ITER_CAP
    message = ""
    try:
        x = _warm_start(p, ctr, k, lam, x0)
    except EDFOptError as exc:
        return SolveResult(INNER_FAILURE, None, None, np.inf, center=ctr, message=str(exc))
    state = EPMState(ctr, x, lam, k)

    for s in range(cfg.max_outer):
        state.outer_index = s
        try:
            x_bar, lam_bar, inner = relaxation_operator(p, state, inner_cfg)
        except EDFOptError as exc:
            status, message = INNER_FAILURE, f"outer step {s}: {exc}"
            logger.warning(message)
            break
        x_sum += x_bar
        nu = merit(p, x_bar, state.center, lam_bar)
        lag = lagrangian_eval(p, x_bar, state.center, lam_bar, order=0)
        c = lag.c_vals
        cond = None
        if p.has_hessian:
            cond = condition_number(edf_eval(p, x_bar, state.center, EDFParams(state.k, state.lam), 2).hessian)

        updated = False
        new_center = state.center
        if nu > cfg.epsilon and cfg.center_update_enabled and np.any(x_bar != state.center.y):
            ls = center_linesearch(p, state.center, x_bar, cfg.gamma, cfg.linesearch_grid)
            if ls.tau_bar > 0:
                updated, new_center = center_update(p, state.center, ls.x_tau, delta_reduction)

        record = IterationRecord(
            outer_index=s,
            dual_val=lag.value if lag.in_domain else -np.inf,
            primal_F=lag.value + float(lam_bar @ c) if lag.in_domain else np.inf,
            merit=nu,
            complementarity=float(lam_bar @ np.abs(c)),
            inner_iters=inner.iterations,
            edf_hessian_cond=cond,
            center_updated=updated,
            k_used=state.k,
            center_f=state.center.f_y,
            x=x_bar,
            lam=lam_bar,
            inner_stop=inner.stop_reason,
        )
        records.append(record)
        if on_record is not None:
            on_record(record)
        logger.debug("outer %d: merit %.3e, inner %d (%s)", s, nu, inner.iterations, inner.stop_reason)
        if nu <= cfg.epsilon:
            status = CONVERGED
            break

        next_k = state.k * cfg.k_growth
        if updated:
            # only x and the center move on this branch; the multipliers stay
            if cfg.rescale_k_on_center_update:
                f_bar = evaluate(p, x_bar, order=0).f_val
                if new_center.f_y - f_bar > 0:
                    next_k *= (state.center.f_y - f_bar) / (new_center.f_y - f_bar)
            state.center = new_center
        else:
            state.lam = lam_bar
        try:
            state.x = _warm_start(p, state.center, next_k, state.lam, x_bar)
        except EDFOptError as exc:
            status, message = INNER_FAILURE, f"outer step {s}: {exc}"
            break
        state.k = next_k

    final_lam = lam_bar if lam_bar is not None else state.lam
    active = () if lam_bar is None else tuple(int(i) for i in np.flatnonzero(lam_bar > np.sqrt(cfg.epsilon)))
    return SolveResult(
        status=status,
        x_final=x_bar,
        lambda_final=final_lam,
        merit_final=nu,
        trajectory=records,
        ergodic_x=x_sum / len(records) if records else None,
        active_set_estimate=active,
        center=state.center,
        message=message,
    )
