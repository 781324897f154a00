import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from gsfw.estimators import (CoSaMPRegressor, DMOFrankWolfeRegressor, GenMPRegressor,
                             GraphIHTRegressor)
from gsfw.experiments import gen_gaussian_matrix, gen_grid_signal, gen_measurements


@pytest.fixture(scope="module")
def grid_data():
    graph, x = gen_grid_signal(8, 8, 6, 1, seed=2)
    A = gen_gaussian_matrix(40, 64, 2)
    return graph, x, A, gen_measurements(A, x, 0.0, 2)


ESTIMATORS = [
    lambda g: DMOFrankWolfeRegressor(graph=g, s=6, L=1.0, max_iter=50),
    lambda g: DMOFrankWolfeRegressor(graph=g, s=6, variant="fw", option="II", oracle="greedy",
                                     max_iter=50),
    lambda g: GraphIHTRegressor(graph=g, s=6, max_iter=30),
    lambda g: GenMPRegressor(graph=g, s=6, max_iter=30),
    lambda g: CoSaMPRegressor(s=6, max_iter=10),
]


@pytest.mark.parametrize("make", ESTIMATORS)
def test_fit_predict(make, grid_data):
    graph, x, A, y = grid_data
    est = make(graph)
    params = est.get_params()
    assert clone(est).get_params() == params
    with pytest.raises(NotFittedError):
        est.predict(A)
    assert est.fit(A, y, x_true=x, f_star=0.0) is est
    assert est.coef_.shape == (64,) and est.n_features_in_ == 64
    assert np.count_nonzero(est.coef_) > 0
    np.testing.assert_allclose(est.predict(A), A @ est.coef_)
    assert est.trace_.f[est.trace_.best_index] <= est.trace_.f[0]
    assert est.score(A, y) > 0
    with pytest.raises(ValueError):
        est.predict(A[:, :10])


def test_cardinality_default_and_validation(grid_data):
    _, x, A, y = grid_data
    est = DMOFrankWolfeRegressor(s=6, L=1.0, max_iter=20).fit(A, y)
    assert est.trace_.meta["oracle"] == "top-s"
    with pytest.raises(ValueError):
        DMOFrankWolfeRegressor(s=0).fit(A, y)
    with pytest.raises(ValueError):
        DMOFrankWolfeRegressor(s=100).fit(A, y)
    with pytest.raises(ValueError):
        DMOFrankWolfeRegressor(s=3).fit(A, y[:-1])
    with pytest.raises(TypeError):
        GraphIHTRegressor(graph="grid", s=3).fit(A, y)


def test_graph_size_mismatch(grid_data):
    graph, _, A, y = grid_data
    with pytest.raises(ValueError):
        GenMPRegressor(graph=graph, s=3).fit(A[:, :20], y)


def test_seeded_determinism(grid_data):
    graph, _, A, y = grid_data
    a = DMOFrankWolfeRegressor(graph=graph, s=6, L=1.0, max_iter=30).fit(A, y).coef_
    b = DMOFrankWolfeRegressor(graph=graph, s=6, L=1.0, max_iter=30).fit(A, y).coef_
    np.testing.assert_array_equal(a, b)
