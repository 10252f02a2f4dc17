import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from edfopt.estimators import ExteriorPointSolver, InteriorCenterSolver, check_point, check_problem
from edfopt.problem import get_builtin


def test_params_roundtrip():
    est = ExteriorPointSolver(k=25.0, center_update_enabled=False)
    params = est.get_params()
    assert params["k"] == 25.0 and params["center_update_enabled"] is False
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(k=3.0)
    assert est.k == 3.0


def test_fit_sets_attributes(qp2d):
    est = ExteriorPointSolver(center_update_enabled=False).fit(qp2d)
    assert est.status_ == "Converged" and est.converged_
    np.testing.assert_allclose(est.x_, [0.5, 0.5], atol=1e-6)
    assert est.n_iter_ == len(est.trajectory_) > 0
    assert est.lambda_.shape == (3,)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        ExteriorPointSolver().converged_


def test_fit_with_center_and_start(qp2d):
    est = ExteriorPointSolver(center_update_enabled=False).fit(qp2d, center=[0.2, 0.2], x0=[0.4, 0.4])
    np.testing.assert_array_equal(est.result_.center.y, [0.2, 0.2])


def test_invalid_parameters_surface_at_fit(qp2d):
    with pytest.raises(ValueError):
        ExteriorPointSolver(k=-1.0).fit(qp2d)


def test_validation_helpers(qp2d):
    assert check_problem(qp2d) is qp2d
    with pytest.raises(TypeError):
        check_problem(np.zeros(3))
    np.testing.assert_array_equal(check_point([[1.0, 2.0]], 2), [1.0, 2.0])
    with pytest.raises(ValueError):
        check_point([1.0], 2)
    with pytest.raises(ValueError):
        check_point([np.nan, 1.0], 2)


def test_interior_center_solver(qp2d):
    est = InteriorCenterSolver(steps=10).fit(qp2d)
    assert est.n_iter_ == 10
    assert est.tau_ > 0.25 and est.tau_ - 0.25 < 1e-4
    assert clone(est).get_params() == {"steps": 10, "max_inner": 200}


def test_interior_center_explicit_start():
    p = get_builtin("TOY1D")
    # each center of -log(tau - x) - log(x) is tau / 2
    est = InteriorCenterSolver(steps=2).fit(p, x0=[0.7])
    assert est.x_[0] == pytest.approx(0.175, abs=1e-10)
