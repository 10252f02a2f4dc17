"""Kullback-Leibler divergence and a brute-force dual proximal step.

The exterior point multiplier update coincides with a proximal point step on
the dual function,

    lam_next = argmax_u { d_y(u) - (1/k) D(u, lam) },

where ``D`` is the divergence generated by ``phi(s) = -log s + s - 1``.  The
oracle here computes that argmax by coordinate-wise golden-section search,
which has nothing in common with the Newton-based path of the solver, so
agreement between the two is an independent check rather than a tautology.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .edf import Center, dual_value
from .exceptions import DomainError, OracleNoConverge
from .problem import ProblemInstance

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class KernelEval(NamedTuple):
    s: float
    phi: float
    phi_prime: float


def phi_kernel(s: float) -> KernelEval:
    """``phi(s) = -log s + s - 1`` and its derivative ``1 - 1/s``.

    Raises
    ------
    DomainError
        If ``s <= 0``.
    """
    s = float(s)
    if not s > 0:
        raise DomainError(f"kernel needs s > 0, got {s}")
    return KernelEval(s, -math.log(s) + s - 1.0, 1.0 - 1.0 / s)


def phi_divergence(u, lam) -> float:
    """``D(u, lam) = sum_i lam_i phi(u_i / lam_i)``.

    An entry ``u_i = 0`` makes the divergence ``+inf``.

    Raises
    ------
    DomainError
        If ``u`` has negative entries or ``lam`` is not strictly positive.
    """
    u = np.asarray(u, dtype=float).ravel()
    lam = np.asarray(lam, dtype=float).ravel()
    if u.shape != lam.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {lam.shape}")
    if np.any(u < 0):
        raise DomainError("divergence needs u >= 0")
    if np.any(lam <= 0):
        raise DomainError("divergence needs lam > 0")
    if np.any(u == 0):
        return np.inf
    s = u / lam
    return float(np.sum(lam * (-np.log(s) + s - 1.0)))


def _golden_max(fun, lo: float, hi: float, tol: float):
    """Maximize a unimodal ``fun`` on ``[lo, hi]``; returns the final midpoint."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def prox_step_oracle(
    p: ProblemInstance,
    center: Center,
    lam,
    k: float,
    *,
    tol: float = 1e-7,
    box_decades: float = 3.0,
    max_sweeps: int = 500,
    line_tol: float = 1e-10,
) -> np.ndarray:
    """Maximize ``u -> d_y(u) - D(u, lam) / k`` over ``u > 0``.

    Each coordinate is searched in log scale over
    ``[lam_i 10**-box_decades, lam_i 10**box_decades]`` with golden sections
    down to a bracket of ``line_tol``; sweeps repeat until no coordinate
    moves by more than ``tol`` (relative to ``max(1, |u_i|)``).

    The objective is concave in ``u``, hence unimodal along each coordinate
    in any monotone reparametrization, so golden sections are valid.

    Raises
    ------
    OracleNoConverge
        If ``max_sweeps`` sweeps do not reach the tolerance.
    """
    lam = np.asarray(lam, dtype=float).ravel()
    if np.any(lam <= 0):
        raise DomainError("prox step needs lam > 0")
    if not k > 0:
        raise DomainError(f"k must be positive, got {k}")
    if lam.size != p.m:
        raise ValueError(f"lam has {lam.size} entries, problem has {p.m} constraints")

    u = lam.copy()
    warm = [None]

    def objective(v):
        dv = dual_value(p, center, v, x_start=warm[0])
        warm[0] = dv.argmin_x
        return dv.d - phi_divergence(v, lam) / k

    width = box_decades * math.log(10.0)
    for _ in range(max_sweeps):
        moved = 0.0
        for i in range(p.m):
            log_lam = math.log(lam[i])

            def along(t, i=i):
                v = u.copy()
                v[i] = math.exp(t)
                return objective(v)

            new = math.exp(_golden_max(along, log_lam - width, log_lam + width, line_tol))
            moved = max(moved, abs(new - u[i]) / max(1.0, abs(u[i])))
            u[i] = new
        if moved <= tol:
            return u
    raise OracleNoConverge(f"coordinate sweeps did not settle within {max_sweeps} passes")
