import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edfopt.edf import (
    Center,
    EDFParams,
    delta,
    dual_value,
    edf_eval,
    lagrangian_eval,
    level_start,
    merit,
    psi,
    psi_prime,
    psi_second,
    rescale_multipliers,
)
from edfopt.exceptions import DomainError, StartOutOfDomain
from edfopt.numdiff import fd_gradient, fd_jacobian, relative_error
from edfopt.problem import Affine, ProblemInstance, Quadratic, evaluate, get_builtin

from conftest import CORPUS_NAMES, STRICTLY_CONVEX, default_center, random_domain_points


def toy_center(y=1.0):
    return Center.from_problem(get_builtin("TOY1D"), [y])


# -- types -------------------------------------------------------------------

def test_center_caches_objective(qp2d):
    c = default_center(qp2d)
    assert c.f_y == pytest.approx(0.81)
    with pytest.raises(ValueError):
        c.y[0] = 3.0


def test_center_margin_enforced(qp2d):
    with pytest.raises(DomainError):
        Center.from_problem(qp2d, [1e-5, 0.5], gamma=1e-4)


@pytest.mark.parametrize("k, lam", [(0.0, [1.0]), (-1.0, [1.0]), (1.0, [-0.1]), (1.0, [np.nan])])
def test_edf_params_validation(k, lam):
    with pytest.raises(DomainError):
        EDFParams(k, lam)


# -- delta and psi -----------------------------------------------------------

def test_delta_examples(toy, qp2d):
    assert delta(toy, [0.0], toy_center()) == 1.0
    assert delta(toy, [1.0], toy_center()) == 0.0
    # f is half the squared distance to (1, 1): f(y) = 0.81, f(x*) = 0.25
    assert delta(qp2d, [0.5, 0.5], default_center(qp2d)) == pytest.approx(0.56, abs=1e-15)


def test_psi_values():
    assert psi(0.0) == 0.0 and psi_prime(0.0) == 1.0 and psi_second(0.0) == -1.0
    assert psi(math.e - 1.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("fn", [psi, psi_prime, psi_second])
def test_psi_domain(fn):
    with pytest.raises(DomainError):
        fn(-1.0)


@given(st.floats(-0.999, 1e6))
def test_psi_derivative_consistency(t):
    assert psi_prime(t) > 0 and psi_second(t) < 0
    assert psi_second(t) == pytest.approx(-psi_prime(t) ** 2, rel=1e-12)


# -- edf_eval ----------------------------------------------------------------

def test_edf_at_toy_kkt_point(toy):
    e = edf_eval(toy, [0.0], toy_center(), EDFParams(9.0, [1.0]), order=2)
    assert e.in_domain and e.value == 0.0
    np.testing.assert_array_equal(e.gradient, [0.0])


def test_edf_toy_stationary_point(toy):
    e = edf_eval(toy, [1.0 / 11.0], toy_center(), EDFParams(9.0, [2.0]), order=1)
    assert abs(e.gradient[0]) <= 1e-14


@given(st.floats(0.1, 100.0), st.floats(0.05, 50.0))
def test_edf_toy_stationary_point_closed_form(k, lam):
    x = (lam - 1.0) / (k + lam)
    e = edf_eval(get_builtin("TOY1D"), [x], toy_center(), EDFParams(k, [lam]), order=1)
    assert abs(e.gradient[0]) <= 1e-11 * max(1.0, lam)


def test_edf_out_of_domain(toy):
    e = edf_eval(toy, [1.0], toy_center(), EDFParams(3.0, [1.0]), order=2)
    assert not e.in_domain and e.value is None and e.gradient is None
    assert e.domain_violation.which == "objective_level"
    e = edf_eval(toy, [-0.5], toy_center(), EDFParams(3.0, [1.0]))
    assert e.domain_violation == ("constraint 0", 0.5)


@pytest.mark.parametrize("name", CORPUS_NAMES)
@pytest.mark.parametrize("k", [1.0, 10.0, 100.0])
def test_edf_derivatives_match_finite_differences(name, k):
    p = get_builtin(name)
    ctr = default_center(p)
    rng = np.random.default_rng(int(k) + len(name))
    for x in random_domain_points(p, ctr, 10, rng, k=k):
        lam = rng.uniform(0.2, 2.0, p.m)
        params = EDFParams(k, lam)
        e = edf_eval(p, x, ctr, params, order=2)
        fd_g = fd_gradient(lambda z: edf_eval(p, z, ctr, params, 0).value, x)
        fd_h = fd_jacobian(lambda z: edf_eval(p, z, ctr, params, 1).gradient, x)
        assert relative_error(fd_g, e.gradient) <= 1e-6
        assert relative_error(fd_h, e.hessian) <= 1e-6


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_edf_hessian_positive_semidefinite(name):
    p = get_builtin(name)
    ctr = default_center(p)
    rng = np.random.default_rng(3)
    for x in random_domain_points(p, ctr, 10, rng, k=10.0):
        e = edf_eval(p, x, ctr, EDFParams(10.0, rng.uniform(0.1, 3.0, p.m)), order=2)
        assert np.linalg.eigvalsh(e.hessian)[0] >= -1e-8


@pytest.mark.parametrize("name", CORPUS_NAMES)
@pytest.mark.parametrize("k", [1.0, 10.0, 100.0])
def test_k_invariance_at_kkt_point(name, k):
    p = get_builtin(name)
    ctr = default_center(p)
    x_star, lam_orig = p.known_solution
    lam = rescale_multipliers(lam_orig, x_star, ctr, p)
    e = edf_eval(p, x_star, ctr, EDFParams(k, lam), order=1)
    F = -math.log(delta(p, x_star, ctr))
    assert abs(e.value - F) <= 1e-10
    assert np.max(np.abs(e.gradient)) <= 1e-8


def test_strong_convexity_grows_with_k(qp2d):
    ctr = default_center(qp2d)
    lam = rescale_multipliers(qp2d.known_solution.lam, qp2d.known_solution.x, ctr, qp2d)
    mins = [np.linalg.eigvalsh(edf_eval(qp2d, qp2d.known_solution.x, ctr, EDFParams(k, lam), 2).hessian)[0]
            for k in (10.0, 20.0, 50.0, 100.0, 1000.0)]
    assert mins[0] > 0
    assert all(b >= a - 1e-12 for a, b in zip(mins, mins[1:]))


# -- Lagrangian, multipliers, dual -------------------------------------------

def test_lagrangian_toy_kkt(toy):
    e = lagrangian_eval(toy, [0.0], toy_center(), [1.0])
    assert e.value == 0.0 and e.gradient[0] == 0.0


def test_lagrangian_zero_multipliers(qp2d):
    ctr = default_center(qp2d)
    x = np.array([0.3, 0.2])
    assert lagrangian_eval(qp2d, x, ctr, np.zeros(3), 0).value == pytest.approx(-math.log(delta(qp2d, x, ctr)))


def test_lagrangian_flags_level_domain(toy):
    assert not lagrangian_eval(toy, [2.0], toy_center(), [1.0]).in_domain


def test_lagrangian_stationary_at_rescaled_solution(qp2d):
    ctr = default_center(qp2d)
    lam = rescale_multipliers(qp2d.known_solution.lam, qp2d.known_solution.x, ctr, qp2d)
    np.testing.assert_allclose(lam, [0.0, 0.0, 0.5 / 0.56], rtol=1e-14)
    assert np.max(np.abs(lagrangian_eval(qp2d, qp2d.known_solution.x, ctr, lam).gradient)) <= 1e-8


def test_rescale_examples(toy):
    np.testing.assert_array_equal(rescale_multipliers([1.0], [0.0], toy_center(), toy), [1.0])
    # a center two units above the solution
    np.testing.assert_array_equal(rescale_multipliers([0.0], [0.0], toy_center(2.0), toy), [0.0])
    p = ProblemInstance(Affine([1.0]), [Affine([1.0]), Affine([1.0], 1.0)])
    np.testing.assert_array_equal(rescale_multipliers([0.0, 4.0], [0.0], Center.from_problem(p, [2.0]), p), [0.0, 2.0])


def test_rescale_requires_positive_gap(toy):
    with pytest.raises(DomainError):
        rescale_multipliers([1.0], [1.0], toy_center(), toy)


def test_dual_toy_closed_form(toy):
    assert dual_value(toy, toy_center(), [1.0]).d == pytest.approx(0.0, abs=1e-14)
    dv = dual_value(toy, toy_center(), [2.0])
    assert dv.d == pytest.approx(math.log(2.0) - 1.0, abs=1e-12)
    np.testing.assert_allclose(dv.argmin_x, [0.5], atol=1e-10)


@given(st.floats(0.05, 50.0))
def test_dual_toy_property(lam):
    dv = dual_value(get_builtin("TOY1D"), toy_center(), [lam])
    assert dv.d == pytest.approx(math.log(lam) - lam + 1.0, abs=1e-10)


@pytest.mark.parametrize("name", STRICTLY_CONVEX)
def test_strong_duality_at_solution(name):
    p = get_builtin(name)
    ctr = default_center(p)
    lam = rescale_multipliers(p.known_solution.lam, p.known_solution.x, ctr, p)
    F = -math.log(delta(p, p.known_solution.x, ctr))
    assert abs(dual_value(p, ctr, lam).d - F) <= 1e-6


def test_dual_rejects_negative_multipliers(toy):
    with pytest.raises(DomainError):
        dual_value(toy, toy_center(), [-1.0])


def test_level_start_is_below_center(corpus_problem):
    ctr = default_center(corpus_problem)
    x = level_start(corpus_problem, ctr, k=10.0)
    assert delta(corpus_problem, x, ctr) > 0


def test_level_start_fails_at_unconstrained_minimizer():
    p = ProblemInstance(Quadratic(np.eye(1), [0.0]), [Affine([1.0], 1.0)])
    with pytest.raises(StartOutOfDomain):
        level_start(p, Center.from_problem(p, [0.0]))


# -- merit -------------------------------------------------------------------

def test_merit_examples(toy):
    assert merit(toy, [0.0], toy_center(), [1.0]) == 0.0
    assert merit(toy, [-0.5], toy_center(), [1.0]) == pytest.approx(0.5)
    assert merit(toy, [1.5], toy_center(), [1.0]) == np.inf


def test_merit_zero_multipliers(qp2d):
    ctr = default_center(qp2d)
    x = np.array([0.3, 0.3])
    ev = evaluate(qp2d, x, 1)
    expected = np.max(np.abs(ev.f_grad / delta(qp2d, x, ctr)))
    assert merit(qp2d, x, ctr, np.zeros(3)) == pytest.approx(expected)


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_merit_vanishes_only_at_solution(name):
    p = get_builtin(name)
    ctr = default_center(p)
    x_star, lam_orig = p.known_solution
    lam = rescale_multipliers(lam_orig, x_star, ctr, p)
    assert merit(p, x_star, ctr, lam) <= 1e-12
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = x_star + 0.1 * rng.standard_normal(p.n)
        u = lam + rng.uniform(0.01, 0.5, p.m)
        assert merit(p, x, ctr, u) > 0
