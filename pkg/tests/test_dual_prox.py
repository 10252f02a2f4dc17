import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from edfopt.dual_prox import phi_divergence, phi_kernel, prox_step_oracle
from edfopt.edf import Center, EDFParams, level_start
from edfopt.epm import multiplier_update
from edfopt.exceptions import DomainError, OracleNoConverge
from edfopt.inner import InnerConfig, minimize_edf
from edfopt.problem import evaluate, get_builtin

from conftest import default_center


def test_kernel_at_one():
    assert phi_kernel(1.0) == (1.0, 0.0, 0.0)


def test_kernel_at_two():
    k = phi_kernel(2.0)
    assert k.phi == pytest.approx(1.0 - math.log(2.0), abs=1e-15)
    assert k.phi_prime == 0.5


@pytest.mark.parametrize("s", [0.0, -1.0])
def test_kernel_domain(s):
    with pytest.raises(DomainError):
        phi_kernel(s)


def test_kernel_nonnegative_on_log_grid():
    for s in np.logspace(-6, 6, 2001):
        val = phi_kernel(s).phi
        assert val >= 0
        if abs(s - 1.0) > 1e-3:
            assert val > 1e-12


def test_divergence_examples():
    lam = np.array([0.3, 2.0, 7.0])
    assert phi_divergence(lam, lam) == 0.0
    assert phi_divergence([2.0], [1.0]) == pytest.approx(1.0 - math.log(2.0), abs=1e-15)
    assert phi_divergence([0.0], [1.0]) == np.inf


def test_divergence_domain():
    with pytest.raises(DomainError):
        phi_divergence([-1.0], [1.0])
    with pytest.raises(DomainError):
        phi_divergence([1.0], [0.0])


@given(arrays(float, 3, elements=st.floats(1e-4, 1e4)), arrays(float, 3, elements=st.floats(1e-4, 1e4)))
def test_divergence_nonnegative(u, lam):
    assert phi_divergence(u, lam) >= -1e-12 * np.sum(lam)


def test_prox_toy_closed_form(toy):
    ctr = Center.from_problem(toy, [1.0])
    u = prox_step_oracle(toy, ctr, [2.0], 9.0)
    assert u[0] == pytest.approx(1.1, abs=1e-7)


def test_prox_fixed_point(toy):
    ctr = Center.from_problem(toy, [1.0])
    assert prox_step_oracle(toy, ctr, [1.0], 5.0)[0] == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("lam, k", [((1.0, 1.0, 1.0), 5.0), ((0.3, 0.2, 0.8), 50.0), ((0.5, 1.5, 2.0), 20.0)])
def test_prox_matches_multiplier_update_on_qp2d(qp2d, lam, k):
    ctr = default_center(qp2d)
    lam = np.array(lam)
    res = minimize_edf(qp2d, ctr, EDFParams(k, lam), level_start(qp2d, ctr, k),
                       InnerConfig(relative_rule=False, grad_tol_abs=1e-10, max_iters=200))
    update = multiplier_update(lam, evaluate(qp2d, res.x_bar, 0).c_vals, k)
    assert np.max(np.abs(prox_step_oracle(qp2d, ctr, lam, k) - update)) <= 1e-5


def test_prox_sweep_cap(qp2d):
    ctr = default_center(qp2d)
    with pytest.raises(OracleNoConverge):
        prox_step_oracle(qp2d, ctr, [1.0, 1.0, 1.0], 5.0, max_sweeps=1)


def test_prox_input_validation(qp2d):
    ctr = default_center(qp2d)
    with pytest.raises(DomainError):
        prox_step_oracle(qp2d, ctr, [1.0, 0.0, 1.0], 5.0)
    with pytest.raises(ValueError):
        prox_step_oracle(qp2d, ctr, [1.0, 1.0], 5.0)
