"""Central finite differences, used to audit analytic derivatives."""

import numpy as np

_EPS_CBRT = np.finfo(float).eps ** (1.0 / 3.0)


def _steps(x):
    return _EPS_CBRT * np.maximum(1.0, np.abs(x))


def fd_gradient(fun, x):
    """Central-difference gradient of the scalar function ``fun`` at ``x``."""
    x = np.asarray(x, dtype=float)
    h = _steps(x)
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h[j]
        g[j] = (fun(x + e) - fun(x - e)) / (2.0 * h[j])
    return g


def fd_jacobian(fun, x):
    """Central-difference Jacobian of the vector function ``fun``; rows are outputs."""
    x = np.asarray(x, dtype=float)
    h = _steps(x)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h[j]
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2.0 * h[j]))
    return np.column_stack(cols)


def relative_error(approx, exact):
    """Max-norm error of ``approx`` relative to ``max(1, |exact|)``."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    scale = max(1.0, float(np.max(np.abs(exact), initial=0.0)))
    return float(np.max(np.abs(approx - exact), initial=0.0)) / scale
