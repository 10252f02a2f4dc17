"""Constrained problem instances and their derivative oracles.

A problem is ``min f(x)`` subject to ``c_i(x) >= 0`` with ``f`` convex and
every ``c_i`` concave.  Oracles are plain objects exposing ``value``,
``gradient`` and (optionally) ``hessian``; :class:`Quadratic` and
:class:`Affine` cover the built-in corpus and the problem file format, while
:class:`SmoothFunction` wraps arbitrary callables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import expit

from .exceptions import NonFiniteEvaluation, UnsupportedOrder, ValidationError

KKT_TOL = 1e-8
COMPLEMENTARITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Quadratic:
    """``0.5 x'Qx + q'x + const``."""

    Q: np.ndarray
    q: np.ndarray
    const: float = 0.0

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        q = np.array(self.q, dtype=float).ravel()
        if Q.ndim != 2 or Q.shape != (q.size, q.size):
            raise ValueError(f"Q has shape {Q.shape}, expected ({q.size}, {q.size})")
        Q.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "const", float(self.const))

    has_hessian = True

    def value(self, x):
        return float(0.5 * x @ self.Q @ x + self.q @ x + self.const)

    def gradient(self, x):
        return self.Q @ x + self.q

    def hessian(self, x):
        return np.array(self.Q)


@dataclass(frozen=True, eq=False)
class Affine:
    """``a'x + b``."""

    a: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        a = np.array(self.a, dtype=float).ravel()
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    has_hessian = True

    def value(self, x):
        return float(self.a @ x + self.b)

    def gradient(self, x):
        return np.array(self.a)

    def hessian(self, x):
        return np.zeros((self.a.size, self.a.size))


class SmoothFunction:
    """Wrap user callables as an oracle.  ``hessian`` may be omitted."""

    def __init__(self, value: Callable, gradient: Callable, hessian: Optional[Callable] = None):
        self._value = value
        self._gradient = gradient
        self._hessian = hessian

    @property
    def has_hessian(self):
        return self._hessian is not None

    def value(self, x):
        return float(self._value(x))

    def gradient(self, x):
        return np.asarray(self._gradient(x), dtype=float)

    def hessian(self, x):
        if self._hessian is None:
            raise UnsupportedOrder("this oracle has no Hessian")
        return np.asarray(self._hessian(x), dtype=float)


class _Softplus:
    """``log(exp(f) + 1)`` of a wrapped objective, evaluated without overflow."""

    def __init__(self, inner):
        self.inner = inner

    @property
    def has_hessian(self):
        return self.inner.has_hessian

    def value(self, x):
        return float(np.logaddexp(0.0, self.inner.value(x)))

    def gradient(self, x):
        return expit(self.inner.value(x)) * self.inner.gradient(x)

    def hessian(self, x):
        s = expit(self.inner.value(x))
        g = self.inner.gradient(x)
        return s * (1.0 - s) * np.outer(g, g) + s * self.inner.hessian(x)


class KnownSolution(NamedTuple):
    """Primal-dual solution in the original problem's KKT system."""

    x: np.ndarray
    lam: np.ndarray


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A convex program with oracles for ``f`` and the concave ``c_i``.

    Parameters
    ----------
    objective : oracle
        Convex objective.
    constraints : sequence of oracles
        Concave constraint functions, feasible where all are ``>= 0``.
    name : str
    known_solution : KnownSolution, optional
        ``(x*, lambda*)`` with multipliers for the original problem.
    interior_point : array, optional
        A Slater point, used as the default center.
    """

    objective: object
    constraints: tuple
    name: str = "problem"
    known_solution: Optional[KnownSolution] = None
    interior_point: Optional[np.ndarray] = None
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.interior_point is not None:
            object.__setattr__(self, "interior_point", _frozen(self.interior_point))
        if self.known_solution is not None:
            ks = KnownSolution(_frozen(self.known_solution.x), _frozen(self.known_solution.lam))
            object.__setattr__(self, "known_solution", ks)
        object.__setattr__(self, "n", _infer_dimension(self))

    @property
    def m(self):
        return len(self.constraints)

    @property
    def has_hessian(self):
        return self.objective.has_hessian and all(c.has_hessian for c in self.constraints)

    @property
    def max_order(self):
        return 2 if self.has_hessian else 1


def _frozen(v):
    a = np.array(v, dtype=float).ravel()
    a.setflags(write=False)
    return a


def _infer_dimension(p):
    for obj in (p.objective, *p.constraints):
        while isinstance(obj, _Softplus):
            obj = obj.inner
        if isinstance(obj, Quadratic):
            return obj.q.size
        if isinstance(obj, Affine):
            return obj.a.size
    for v in (p.interior_point, p.known_solution and p.known_solution.x):
        if v is not None:
            return int(np.size(v))
    raise ValueError("cannot infer the dimension; give an interior_point")


@dataclass
class EvaluationBundle:
    """Oracle values at one point.  Fields above the requested order are None."""

    f_val: float
    c_vals: np.ndarray
    f_grad: Optional[np.ndarray] = None
    c_jac: Optional[np.ndarray] = None
    f_hess: Optional[np.ndarray] = None
    c_hess: Optional[list] = None


def _check_finite(name, v):
    if not np.all(np.isfinite(v)):
        raise NonFiniteEvaluation(f"{name} returned a non-finite value")
    return v


def evaluate(p: ProblemInstance, x, order: int = 1) -> EvaluationBundle:
    """Evaluate objective and constraints of ``p`` at ``x`` up to ``order``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({p.n},)")
    if not np.all(np.isfinite(x)):
        raise NonFiniteEvaluation("x is not finite")
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    if order > p.max_order:
        raise UnsupportedOrder(f"{p.name} provides derivatives up to order {p.max_order}")

    f_val = _check_finite("objective", p.objective.value(x))
    c_vals = _check_finite("constraints", np.array([c.value(x) for c in p.constraints], dtype=float))
    bundle = EvaluationBundle(f_val=f_val, c_vals=c_vals)
    if order >= 1:
        bundle.f_grad = _check_finite("objective gradient", np.asarray(p.objective.gradient(x), dtype=float))
        bundle.c_jac = _check_finite(
            "constraint gradient",
            np.array([c.gradient(x) for c in p.constraints], dtype=float).reshape(p.m, p.n),
        )
    if order == 2:
        bundle.f_hess = _check_finite("objective Hessian", np.asarray(p.objective.hessian(x), dtype=float))
        bundle.c_hess = [_check_finite("constraint Hessian", np.asarray(c.hessian(x), dtype=float))
                         for c in p.constraints]
    return bundle


def nonneg_transform(p: ProblemInstance) -> ProblemInstance:
    """Replace ``f`` by ``log(exp(f) + 1)``, which is nonnegative with the same minimizers."""
    return ProblemInstance(
        objective=_Softplus(p.objective),
        constraints=p.constraints,
        name=f"{p.name}+softplus",
        known_solution=None if p.known_solution is None else _softplus_solution(p),
        interior_point=p.interior_point,
    )


def _softplus_solution(p):
    x, lam = p.known_solution
    # d/dx log(1 + e^f) = sigma(f) f'  => multipliers scale by sigma(f(x*))
    return KnownSolution(x, lam * expit(p.objective.value(np.asarray(x))))


class SlaterCheck(NamedTuple):
    holds: bool
    min_slack: float


def check_slater(p: ProblemInstance, x0) -> SlaterCheck:
    """Report whether ``x0`` is strictly feasible and its smallest slack."""
    c = evaluate(p, x0, order=0).c_vals
    min_slack = float(np.min(c)) if c.size else np.inf
    return SlaterCheck(bool(min_slack > 0), min_slack)


def kkt_residuals(p: ProblemInstance, x, lam):
    """Stationarity (max-norm) and complementarity residuals of the original problem."""
    ev = evaluate(p, x, order=1)
    lam = np.asarray(lam, dtype=float)
    stationarity = float(np.max(np.abs(ev.f_grad - ev.c_jac.T @ lam), initial=0.0))
    complementarity = float(np.max(np.abs(lam * ev.c_vals), initial=0.0))
    return stationarity, complementarity, ev.c_vals


def validate_known_solution(p: ProblemInstance):
    """Raise ValidationError unless ``p.known_solution`` satisfies the KKT conditions."""
    if p.known_solution is None:
        return
    x, lam = p.known_solution
    if x.shape != (p.n,) or lam.shape != (p.m,):
        raise ValidationError(f"{p.name}: known_solution has the wrong shape")
    if np.any(lam < 0):
        raise ValidationError(f"{p.name}: known multipliers must be nonnegative")
    stat, comp, c = kkt_residuals(p, x, lam)
    if stat > KKT_TOL:
        raise ValidationError(f"{p.name}: known_solution stationarity residual {stat:.3g}")
    if comp > COMPLEMENTARITY_TOL:
        raise ValidationError(f"{p.name}: known_solution complementarity residual {comp:.3g}")
    if np.any(c < -COMPLEMENTARITY_TOL):
        raise ValidationError(f"{p.name}: known_solution is infeasible")


# -- built-in corpus ---------------------------------------------------------

def _toy1d():
    return ProblemInstance(
        objective=Affine([1.0], 0.0),
        constraints=[Affine([1.0], 0.0)],
        name="TOY1D",
        known_solution=KnownSolution(np.array([0.0]), np.array([1.0])),
        interior_point=np.array([1.0]),
    )


def _qp2d():
    return ProblemInstance(
        objective=Quadratic(np.eye(2), [-1.0, -1.0], 1.0),
        constraints=[
            Affine([1.0, 0.0], 0.0),
            Affine([0.0, 1.0], 0.0),
            Affine([-1.0, -1.0], 1.0),
        ],
        name="QP2D",
        known_solution=KnownSolution(np.array([0.5, 0.5]), np.array([0.0, 0.0, 0.5])),
        interior_point=np.array([0.1, 0.1]),
    )


def _qp5d():
    # Solution chosen first; the linear term is then fixed by stationarity,
    # so every quantity below is exactly representable.
    Q = 4.0 * np.eye(5) + np.eye(5, k=1) + np.eye(5, k=-1)
    A = np.array([
        [1.0, 0.0, 0.0, 0.0, 0.0],     # x0 >= 0                  (active)
        [0.0, -1.0, -1.0, 0.0, 0.0],   # 2 - x1 - x2 >= 0         (active)
        [0.0, 0.0, 0.0, 1.0, -1.0],    # x3 - x4 + 1 >= 0         (active)
        [-1.0, -1.0, -1.0, -1.0, -1.0],  # 4 - sum(x) >= 0        (inactive)
        [0.0, 0.0, 0.0, 0.0, 1.0],     # x4 + 2 >= 0              (inactive)
    ])
    b = np.array([0.0, 2.0, 1.0, 4.0, 2.0])
    x_star = np.array([0.0, 1.0, 1.0, 0.0, 1.0])
    lam_star = np.array([1.0, 2.0, 0.5, 0.0, 0.0])
    q = A.T @ lam_star - Q @ x_star
    return ProblemInstance(
        objective=Quadratic(Q, q, 0.0),
        constraints=[Affine(a, bi) for a, bi in zip(A, b)],
        name="QP5D",
        known_solution=KnownSolution(x_star, lam_star),
        interior_point=np.full(5, 0.5),
    )


def _boxface():
    return ProblemInstance(
        objective=Affine([0.0, 1.0], 0.0),
        constraints=[
            Affine([1.0, 0.0], 0.0),
            Affine([-1.0, 0.0], 1.0),
            Affine([0.0, 1.0], 0.0),
            Affine([0.0, -1.0], 1.0),
        ],
        name="BOXFACE",
        known_solution=KnownSolution(np.array([0.5, 0.0]), np.array([0.0, 0.0, 1.0, 0.0])),
        interior_point=np.array([0.5, 0.5]),
    )


_BUILDERS = {"TOY1D": _toy1d, "QP2D": _qp2d, "QP5D": _qp5d, "BOXFACE": _boxface}


def builtin_corpus() -> list:
    """Return the analytic test problems, each with a validated known solution.

    ``TOY1D`` is ``min x s.t. x >= 0``; ``QP2D`` projects ``(1, 1)`` onto the
    simplex-like triangle; ``QP5D`` is a coupled strictly convex QP with three
    active and two inactive constraints; ``BOXFACE`` minimizes ``x2`` over the
    unit box, so its primal optimum is a whole face.
    """
    problems = [build() for build in _BUILDERS.values()]
    for p in problems:
        validate_known_solution(p)
    return problems


def builtin_names() -> Sequence[str]:
    return tuple(_BUILDERS)


def get_builtin(name: str) -> ProblemInstance:
    try:
        p = _BUILDERS[name.upper()]()
    except KeyError:
        raise KeyError(f"unknown builtin problem {name!r}; choose from {', '.join(_BUILDERS)}") from None
    validate_known_solution(p)
    return p
