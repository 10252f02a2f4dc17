"""Damped Newton minimization with a domain-guarded Armijo line search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .exceptions import SingularSystem

MAX_SHIFT = 1e8
_SEED_SHIFT = 1e-8
# Below this relative change a function value is indistinguishable from roundoff.
_VALUE_NOISE = 64 * np.finfo(float).eps


class NewtonDirection(NamedTuple):
    direction: np.ndarray
    shift_used: float


def newton_direction(hessian, gradient, shift: float = 0.0) -> NewtonDirection:
    """Solve ``(H + s I) d = -g`` for the smallest admissible Levenberg shift ``s``.

    Shifts are tried in the sequence ``shift, 10 shift, 100 shift, ...`` (a zero
    shift is followed by ``1e-8``) until a Cholesky factorization succeeds.

    Raises
    ------
    SingularSystem
        If no shift up to ``1e8`` yields a positive definite matrix.
    """
    H = np.asarray(hessian, dtype=float)
    g = np.asarray(gradient, dtype=float)
    eye = np.eye(g.size)
    s = float(shift)
    while s <= MAX_SHIFT:
        try:
            L = np.linalg.cholesky(H + s * eye)
        except np.linalg.LinAlgError:
            s = _SEED_SHIFT if s == 0.0 else 10.0 * s
            continue
        d = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        if np.all(np.isfinite(d)):
            return NewtonDirection(d, s)
        s = _SEED_SHIFT if s == 0.0 else 10.0 * s
    raise SingularSystem(f"no shift up to {MAX_SHIFT:g} makes the Hessian positive definite")


@dataclass
class Evaluation:
    """What a line-searchable objective returns.  Out-of-domain means +inf."""

    value: float
    gradient: Optional[np.ndarray] = None
    hessian: Optional[np.ndarray] = None
    in_domain: bool = True


class NewtonRun(NamedTuple):
    x: np.ndarray
    evaluation: Evaluation
    iterations: int
    reason: str


def minimize(
    fun: Callable[[np.ndarray, int], Evaluation],
    x0,
    stop: Callable[[np.ndarray, Evaluation], Optional[str]],
    *,
    max_iters: int = 100,
    armijo_c: float = 1e-4,
    backtrack: float = 0.5,
    shift: float = 0.0,
    use_hessian: bool = True,
    callback: Optional[Callable[[np.ndarray, Evaluation], None]] = None,
) -> NewtonRun:
    """Minimize ``fun`` from ``x0`` by damped (or gradient) steps.

    ``fun(x, order)`` must return an :class:`Evaluation`; ``stop(x, ev)``
    returns a reason string to terminate, or None.  The run also ends with
    ``"iter_cap"`` after ``max_iters`` steps, or ``"stalled"`` when no step
    along the search direction produces any decrease.
    """
    order = 2 if use_hessian else 1
    x = np.array(x0, dtype=float)
    ev = fun(x, order)
    step = 1.0
    for it in range(max_iters + 1):
        reason = stop(x, ev)
        if reason is not None:
            return NewtonRun(x, ev, it, reason)
        if it == max_iters:
            break
        g = ev.gradient
        if use_hessian:
            try:
                d = newton_direction(ev.hessian, g, shift).direction
            except SingularSystem:
                d = -g
            t = 1.0
        else:
            d = -g
            t = min(2.0 * step, 1e6)
        gd = float(g @ d)
        if gd >= 0.0:
            d, gd = -g, -float(g @ g)

        accepted = None
        while t > 1e-20:
            x_t = x + t * d
            ev_t = fun(x_t, 0)
            if ev_t.in_domain:
                if abs(ev_t.value - ev.value) <= _VALUE_NOISE * (1.0 + abs(ev.value)):
                    # Armijo is blind at roundoff level; ask for a clear gradient
                    # decrease instead so noise cannot keep the loop alive.
                    ev_full = fun(x_t, order)
                    if np.max(np.abs(ev_full.gradient)) <= 0.5 * np.max(np.abs(g)):
                        accepted = (x_t, ev_full)
                        break
                elif ev_t.value <= ev.value + armijo_c * t * gd:
                    accepted = (x_t, fun(x_t, order))
                    break
            t *= backtrack
        if accepted is None:
            return NewtonRun(x, ev, it, "stalled")
        (x, ev), step = accepted, t
        if callback is not None:
            callback(x, ev)
    return NewtonRun(x, ev, max_iters, "iter_cap")
