import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from wgbrinkman import BrinkmanProblem, InvalidArgument, WGBrinkmanSolver
from wgbrinkman.benchmarks import example1_pressure, example1_problem, example1_velocity


def test_params_round_trip():
    est = WGBrinkmanSolver(n=8, method="direct")
    params = est.get_params()
    assert params["n"] == 8 and params["method"] == "direct"
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(n=4)
    assert est.n == 4


def test_fit_predict_linear_exact():
    mu, kinv = 1.0, 2.0

    def u(x, y):
        return np.stack([2 * np.asarray(x) - np.asarray(y), np.asarray(x) - 2 * np.asarray(y) + 1])
    prob = BrinkmanProblem(mu=mu, kappa_inv=lambda x, y: kinv + 0 * x,
                           force=lambda x, y: mu * kinv * u(x, y), boundary=u)
    est = WGBrinkmanSolver(n=6, method="direct").fit(prob)
    X = np.random.default_rng(0).uniform(0, 1, (40, 2))
    np.testing.assert_allclose(est.predict(X), u(X[:, 0], X[:, 1]).T, atol=1e-9)
    np.testing.assert_allclose(est.predict_pressure(X), 0.0, atol=1e-9)
    assert est.report_.residual <= 1e-10


def test_example1_prediction_close():
    est = WGBrinkmanSolver(n=16).fit(example1_problem(10.0, 1.0))
    X = np.random.default_rng(1).uniform(0.05, 0.95, (100, 2))
    err = est.predict(X) - example1_velocity(X[:, 0], X[:, 1]).T
    assert np.sqrt(np.mean(err**2)) < 0.05
    perr = est.predict_pressure(X) - example1_pressure(X[:, 0], X[:, 1])
    # piecewise-constant pressure: compare in the mean-square sense
    assert np.sqrt(np.mean(perr**2)) < 0.2


def test_validation():
    est = WGBrinkmanSolver(n=4)
    with pytest.raises(NotFittedError):
        est.predict([[0.5, 0.5]])
    with pytest.raises(InvalidArgument):
        est.fit("not a problem")
    est.fit(example1_problem())
    with pytest.raises(InvalidArgument):
        est.predict([[0.5, 0.5, 0.5]])
    with pytest.raises(InvalidArgument):
        est.predict([[2.0, 0.5]])
    with pytest.raises(ValueError):
        est.predict([[np.nan, 0.5]])
    with pytest.raises(InvalidArgument):
        WGBrinkmanSolver(n=0).fit(example1_problem())


def test_estimator_overrides_problem_discretization():
    est = WGBrinkmanSolver(n=2, order=2, stab_visc_scaling=False).fit(example1_problem(order=1))
    assert est.problem_.order == 2 and est.problem_.stab_visc_scaling is False
    assert est.velocity_.dofmap.order == 2
