"""scikit-learn style regressors wrapping the solvers.

Each estimator fits ``min 0.5 ||X w - y||^2`` over graph-structured sparse
coefficient vectors and exposes ``coef_`` and the solver trace in
``trace_``.  ``graph=None`` means the plain cardinality model ``|S| <= s``.
"""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .graph import Graph, SubgraphModel
from .objectives import LeastSquares
from .oracles import OracleKind, make_oracle
from .rng import ORACLE, Stream
from .solvers import SolverConfig, cosamp_lite, gen_mp, iht, run


class _SensingRegressor(RegressorMixin, BaseEstimator):

    def _model(self, d):
        if self.graph is None:
            return None
        if not isinstance(self.graph, Graph):
            raise TypeError("graph must be a gsfw.graph.Graph or None")
        if self.graph.d != d:
            raise ValueError(f"graph has {self.graph.d} nodes but X has {d} features")
        return SubgraphModel(self.graph, s=self.s, g=self.g, C=self.C)

    def _oracle_name(self):
        kind = OracleKind.parse(self.oracle)
        if self.graph is None and kind.name in ("heuristic", "greedy", "brute"):
            return "top-s"
        return str(kind)

    def _prepare(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if not 1 <= self.s <= X.shape[1]:
            raise ValueError(f"s must lie in [1, {X.shape[1]}], got {self.s}")
        return X, y, LeastSquares(X, y), self._model(X.shape[1])

    def _finish(self, trace):
        self.trace_ = trace
        self.coef_ = trace.x_best.copy()
        self.n_iter_ = int(trace.t[-1])
        self.n_features_in_ = self.coef_.size
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.coef_.size:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.coef_.size}")
        return X @ self.coef_


class DMOFrankWolfeRegressor(_SensingRegressor):
    """DMO-FW / DMO-AccFW least-squares regressor.

    ``delta`` is the Option II scaling; ``None`` takes the oracle's own
    guarantee.  ``L=None`` estimates the smoothness constant.
    """

    def __init__(self, graph=None, s=10, g=1, C=1.0, variant="accfw", option="I",
                 oracle="heuristic", delta=None, L=None, max_iter=100, seed=0):
        self.graph = graph
        self.s = s
        self.g = g
        self.C = C
        self.variant = variant
        self.option = option
        self.oracle = oracle
        self.delta = delta
        self.L = L
        self.max_iter = max_iter
        self.seed = seed

    def fit(self, X, y, x_true=None, f_star=None):
        X, y, obj, model = self._prepare(X, y)
        oracle = self._oracle_name()
        delta = self.delta
        if delta is None:
            delta = OracleKind.parse(oracle).guarantee(model, self.s) or 1.0
        cfg = SolverConfig(variant=self.variant, option=self.option, delta=delta, L=self.L,
                           C=self.C, max_iter=self.max_iter, seed=self.seed, oracle=oracle)
        return self._finish(run(cfg, obj, model, s=self.s, x_star=x_true, f_star=f_star))


class GraphIHTRegressor(_SensingRegressor):
    """Iterative hard thresholding with a DMO support as the projection proxy."""

    def __init__(self, graph=None, s=10, g=1, C=1.0, oracle="heuristic", L=None,
                 max_iter=100, seed=0):
        self.graph = graph
        self.s = s
        self.g = g
        self.C = C
        self.oracle = oracle
        self.L = L
        self.max_iter = max_iter
        self.seed = seed

    def fit(self, X, y, x_true=None, f_star=None):
        X, y, obj, model = self._prepare(X, y)
        fn = make_oracle(self._oracle_name(), model=model, s=self.s,
                         rng=Stream(self.seed, ORACLE))
        return self._finish(iht(obj, model, L=self.L, T=self.max_iter, thresholding=fn,
                                s=self.s, C=self.C, x_star=x_true, f_star=f_star))


class GenMPRegressor(_SensingRegressor):
    """Generalised matching pursuit over the model's extreme points."""

    def __init__(self, graph=None, s=10, g=1, C=1.0, oracle="heuristic", L=None,
                 max_iter=100, seed=0):
        self.graph = graph
        self.s = s
        self.g = g
        self.C = C
        self.oracle = oracle
        self.L = L
        self.max_iter = max_iter
        self.seed = seed

    def fit(self, X, y, x_true=None, f_star=None):
        X, y, obj, model = self._prepare(X, y)
        fn = make_oracle(self._oracle_name(), model=model, s=self.s,
                         rng=Stream(self.seed, ORACLE))
        return self._finish(gen_mp(obj, fn, self.max_iter, L=self.L, C=self.C,
                                   x_star=x_true, f_star=f_star))


class CoSaMPRegressor(_SensingRegressor):
    """CoSaMP with plain top-s thresholding; ``graph`` is ignored."""

    def __init__(self, s=10, max_iter=100):
        self.s = s
        self.max_iter = max_iter

    graph = None

    def fit(self, X, y, x_true=None, f_star=None):
        X, y, obj, _ = self._prepare(X, y)
        return self._finish(cosamp_lite(obj, self.s, self.max_iter, x_star=x_true,
                                        f_star=f_star))
