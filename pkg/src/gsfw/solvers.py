"""Frank-Wolfe solvers driven by dual maximisation oracles, plus baselines.

``DMO-FW`` runs the oracle on ``-grad f(x_t)``; ``DMO-AccFW`` runs it on the
gradient-step point ``x_t - grad f(x_t) / (L * eta_t)``.  Either way the next
iterate moves towards the extreme point ``C * u_S / ||u_S||`` built from the
oracle support ``S`` and the direction ``u`` the oracle saw.  Option I keeps
iterates in the support-set hull; Option II stretches the vertex by
``1/delta`` and lets iterates live in the hull scaled by ``1/delta``.

Every solver returns an :class:`IterateTrace` with one record per iterate,
``t = 0..T``.
"""
from dataclasses import dataclass, field
import logging
import math
import time
from typing import Optional

import numpy as np

from .graph import SubgraphModel, is_member, support_of
from .objectives import LeastSquares, estimate_L
from .oracles import (DegenerateDirectionError, OracleKind, make_oracle,
                      support_to_vertex, top_s_dmo)
from .rng import ORACLE, Stream

log = logging.getLogger(__name__)

VARIANTS = {"fw": "DmoFw", "accfw": "DmoAccFw"}
OPTIONS = ("I", "II")
TRACE_COLUMNS = ("t", "f", "h", "grad_inf", "gap", "est_err", "nnz", "xgrad")


@dataclass
class SolverConfig:
    variant: str = "fw"
    option: str = "I"
    delta: float = 1.0
    L: Optional[float] = None
    C: float = 1.0
    max_iter: int = 100
    seed: int = 0
    oracle: str = "heuristic"
    x0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.variant = self.variant.lower()
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {sorted(VARIANTS)}, got {self.variant!r}")
        self.option = str(self.option).upper()
        if self.option not in OPTIONS:
            raise ValueError(f"option must be 'I' or 'II', got {self.option!r}")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if self.L is not None and not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")
        self.max_iter = int(self.max_iter)
        self.oracle = str(OracleKind.parse(self.oracle))

    @property
    def label(self):
        return f"{VARIANTS[self.variant]}-{self.option}"


@dataclass
class IterateTrace:
    """Per-iterate records of one solver run.

    ``gap`` is ``<grad f(x_t), x_t - v_t>`` for the vertex the step used and
    ``xgrad`` is ``<x_t, grad f(x_t)>`` (needed for instance-adaptive rate
    bounds).  ``h`` and ``est_err`` are NaN when no reference optimum or
    planted signal was supplied.
    """
    t: np.ndarray
    f: np.ndarray
    h: np.ndarray
    grad_inf: np.ndarray
    gap: np.ndarray
    est_err: np.ndarray
    nnz: np.ndarray
    xgrad: np.ndarray
    vertex_size: np.ndarray
    x_final: np.ndarray
    x_best: np.ndarray
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def best_index(self):
        return int(np.argmin(self.f))

    def __len__(self):
        return len(self.t)

    def column(self, name):
        return getattr(self, name)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for k in range(len(self.t)):
                row = []
                for name in TRACE_COLUMNS:
                    val = getattr(self, name)[k]
                    row.append(str(int(val)) if name in ("t", "nnz") else format(float(val), ".17g"))
                fh.write(",".join(row) + "\n")

    def write_meta(self, path):
        write_meta(path, self.meta)

    @classmethod
    def from_csv(cls, path):
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
        data = np.atleast_1d(data)
        cols = {name: np.asarray(data[name]) for name in data.dtype.names}
        missing = [c for c in TRACE_COLUMNS if c not in cols]
        if missing:
            raise ValueError(f"{path}: missing trace columns {missing}")
        n = len(cols["t"])
        return cls(t=cols["t"].astype(int), f=cols["f"], h=cols["h"],
                   grad_inf=cols["grad_inf"], gap=cols["gap"], est_err=cols["est_err"],
                   nnz=cols["nnz"].astype(int), xgrad=cols["xgrad"],
                   vertex_size=np.zeros(n, dtype=int),
                   x_final=np.array([]), x_best=np.array([]))


def write_meta(path, meta):
    with open(path, "w") as fh:
        for key in sorted(meta):
            fh.write(f"{key}: {meta[key]}\n")


def read_meta(path):
    meta = {}
    with open(path) as fh:
        for line in fh:
            if ":" in line:
                key, _, value = line.partition(":")
                meta[key.strip()] = value.strip()
    return meta


class _Recorder:
    def __init__(self, x_star, f_star):
        self.x_star = None if x_star is None else np.asarray(x_star, dtype=float)
        self.f_star = f_star
        self.rows = {name: [] for name in TRACE_COLUMNS}
        self.rows["vertex_size"] = []
        self.best_f = math.inf
        self.x_best = None

    def add(self, t, x, f, grad, v, vertex_size):
        r = self.rows
        r["t"].append(t)
        r["f"].append(f)
        r["h"].append(f - self.f_star if self.f_star is not None else math.nan)
        r["grad_inf"].append(float(np.max(np.abs(grad))) if grad.size else 0.0)
        r["gap"].append(float(grad @ (x - v)) if v is not None else math.nan)
        r["est_err"].append(float(np.linalg.norm(x - self.x_star))
                            if self.x_star is not None else math.nan)
        r["nnz"].append(int(np.count_nonzero(x)))
        r["xgrad"].append(float(x @ grad))
        r["vertex_size"].append(vertex_size)
        if f < self.best_f:
            self.best_f = f
            self.x_best = x.copy()

    def finish(self, x_final, started, meta):
        r = self.rows
        return IterateTrace(
            t=np.array(r["t"], dtype=int), f=np.array(r["f"]), h=np.array(r["h"]),
            grad_inf=np.array(r["grad_inf"]), gap=np.array(r["gap"]),
            est_err=np.array(r["est_err"]), nnz=np.array(r["nnz"], dtype=int),
            xgrad=np.array(r["xgrad"]), vertex_size=np.array(r["vertex_size"], dtype=int),
            x_final=x_final.copy(), x_best=self.x_best.copy(),
            wall_time=time.perf_counter() - started, meta=meta)


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise FloatingPointError("non-finite value in objective or gradient")


def _fw_step(x, t, config, L, f_grad, oracle_fn, prev_v=None):
    """One step of the DMO-driven update.

    Returns ``(x_next, v, f, grad, support_size)``; ``v`` is None when the
    iterate is stationary.
    """
    f, grad = f_grad
    eta = 2.0 / (t + 2.0)
    if config.variant == "fw":
        u = -grad
    else:
        u = x - grad / (L * eta)
    res = oracle_fn(u)
    try:
        v = support_to_vertex(u, res.support, config.C)
    except DegenerateDirectionError:
        if not np.any(u):
            return x, None, f, grad, 0
        log.info("direction vanishes on oracle support at t=%d; reusing previous vertex", t)
        v = prev_v
        if v is None:
            return x, None, f, grad, 0
    target = v if config.option == "I" else v / config.delta
    return x + eta * (target - x), v, f, grad, len(res.support)


def _value_grad(obj, x):
    f, grad = obj.value_and_gradient(x)
    _check_finite(f, grad)
    return f, grad


def fw_step(x, t, config, obj, oracle_fn, L=None):
    """Single update ``x_t -> x_{t+1}`` of DMO-FW / DMO-AccFW."""
    if L is None:
        L = config.L if config.L is not None else estimate_L(obj)
    x = np.asarray(x, dtype=float)
    x_next, *_ = _fw_step(x, t, config, L, _value_grad(obj, x), oracle_fn)
    return x_next


def _resolve_oracle(config, model, s, oracle_fn):
    if oracle_fn is not None:
        return oracle_fn
    sparsity = s if s is not None else (model.s if model is not None else None)
    return make_oracle(config.oracle, model=model, s=sparsity,
                       rng=Stream(config.seed, ORACLE))


def _initial_point(config, d, model):
    if config.x0 is None:
        return np.zeros(d)
    x0 = np.asarray(config.x0, dtype=float).copy()
    if x0.shape != (d,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({d},)")
    radius = config.C if config.option == "I" else config.C / config.delta
    if np.linalg.norm(x0) > radius * (1 + 1e-12):
        raise ValueError(f"x0 has norm {np.linalg.norm(x0):.6g} > {radius:.6g}")
    if isinstance(model, SubgraphModel) and not is_member(support_of(x0), model):
        raise ValueError("support of x0 is not a model member")
    return x0


def run(config, obj, model=None, *, s=None, oracle_fn=None, x_star=None, f_star=None):
    """Run ``config.max_iter`` steps of DMO-FW / DMO-AccFW.

    :param config: a :class:`SolverConfig`.
    :param obj: objective with ``value_and_gradient``.
    :param model: a :class:`SubgraphModel` for graph oracles (optional for
        ``top-s`` / ``ksupport`` when ``s`` is given).
    :param oracle_fn: overrides the oracle named in ``config``.
    :param x_star: planted signal for the estimation-error column.
    :param f_star: reference optimum for the primal-error column.
    """
    started = time.perf_counter()
    L = config.L if config.L is not None else estimate_L(obj)
    oracle = _resolve_oracle(config, model, s, oracle_fn)
    x = _initial_point(config, obj.d, model)
    rec = _Recorder(x_star, f_star)
    v = None
    for t in range(config.max_iter + 1):
        x_next, v_new, f, grad, vsize = _fw_step(x, t, config, L, _value_grad(obj, x),
                                                 oracle, prev_v=v)
        rec.add(t, x, f, grad, v_new, vsize)
        if v_new is not None:
            v = v_new
        if t < config.max_iter:
            x = x_next
    meta = {"solver": config.label, "variant": config.variant, "option": config.option,
            "delta": config.delta, "L": L, "C": config.C, "max_iter": config.max_iter,
            "seed": config.seed, "oracle": config.oracle if oracle_fn is None else "custom",
            "rng": "philox4x64-10/box-muller"}
    return rec.finish(x, started, meta)


def gen_mp(obj, oracle_fn, T, L=None, C=1.0, *, x_star=None, f_star=None):
    """Generalised matching pursuit with curvature-scaled line search.

    Each step adds ``gamma * v`` for the oracle atom ``v`` of ``-grad f``, with
    ``gamma = max(0, -<grad, v> / (L ||v||^2))``.
    """
    started = time.perf_counter()
    L = L if L is not None else estimate_L(obj)
    x = np.zeros(obj.d)
    rec = _Recorder(x_star, f_star)
    for t in range(T + 1):
        f, grad = _value_grad(obj, x)
        v = None
        size = 0
        if np.any(grad):
            res = oracle_fn(-grad)
            size = len(res.support)
            try:
                v = support_to_vertex(-grad, res.support, C)
            except DegenerateDirectionError:
                v = None
        rec.add(t, x, f, grad, v, size)
        if t < T and v is not None:
            gamma = max(0.0, -float(grad @ v) / (L * float(v @ v)))
            x = x + gamma * v
    meta = {"solver": "GenMP", "L": L, "C": C, "max_iter": T}
    return rec.finish(x, started, meta)


def _threshold_fn(thresholding, model, s):
    if callable(thresholding):
        return thresholding
    if thresholding in ("top-s", "top_s"):
        k = s if s is not None else model.s
        return lambda w: top_s_dmo(w, k)
    if thresholding in ("heuristic", "heuristic_dmo"):
        return make_oracle("heuristic", model=model)
    raise ValueError(f"unknown thresholding {thresholding!r}")


def iht(obj, model=None, L=None, T=100, thresholding="top-s", *, s=None, C=None,
        x_star=None, f_star=None):
    """Iterative hard thresholding with step ``1/L``.

    The projection keeps the entries of the gradient-step vector on the
    support selected by ``thresholding`` (``top-s``, ``heuristic`` or a
    callable returning a DmoResult), then rescales into the radius-C ball.
    """
    started = time.perf_counter()
    L = L if L is not None else estimate_L(obj)
    if C is None:
        C = model.C if model is not None else math.inf
    select = _threshold_fn(thresholding, model, s)
    x = np.zeros(obj.d)
    rec = _Recorder(x_star, f_star)
    for t in range(T + 1):
        f, grad = _value_grad(obj, x)
        rec.add(t, x, f, grad, None, 0)
        if t == T:
            break
        w = x - grad / L
        sup = list(select(w).support)
        x = np.zeros_like(w)
        x[sup] = w[sup]
        norm = np.linalg.norm(x)
        if norm > C:
            x *= C / norm
    meta = {"solver": "IHT", "L": L, "C": C, "max_iter": T,
            "thresholding": thresholding if isinstance(thresholding, str) else "custom"}
    return rec.finish(x, started, meta)


def _restricted_lstsq(A, y, cols, ridge=1e-12):
    As = A[:, cols]
    gram = As.T @ As
    rhs = As.T @ y
    try:
        return np.linalg.solve(gram + ridge * np.eye(len(cols)), rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(As, y, rcond=None)[0]


def cosamp_lite(obj, s, T=100, *, x_star=None, f_star=None):
    """CoSaMP with plain top-s thresholding (no graph projections)."""
    if not isinstance(obj, LeastSquares):
        raise TypeError("cosamp_lite needs a LeastSquares objective")
    started = time.perf_counter()
    A, y = obj.A, obj.y
    d = obj.d
    x = np.zeros(d)
    rec = _Recorder(x_star, f_star)
    for t in range(T + 1):
        f, grad = _value_grad(obj, x)
        rec.add(t, x, f, grad, None, 0)
        if t == T:
            break
        proxy = -grad
        omega = np.argsort(-np.abs(proxy), kind="stable")[:min(2 * s, d)]
        merged = np.union1d(omega, np.flatnonzero(x))
        b = np.zeros(d)
        b[merged] = _restricted_lstsq(A, y, merged)
        keep = np.argsort(-np.abs(b), kind="stable")[:s]
        x = np.zeros(d)
        x[keep] = b[keep]
    meta = {"solver": "CoSaMP-lite", "s": s, "max_iter": T}
    return rec.finish(x, started, meta)


def reference_optimum(obj, s=None, C=1.0, n_iter=100_000, L=None, oracle_fn=None):
    """High-accuracy reference value for ``min_D f`` via exact DMO-AccFW-I.

    Returns ``(f_ref, f_lower)``: the best objective value seen (an upper
    bound on the optimum) and the best Frank-Wolfe duality-gap lower bound
    ``f(x) - max_v <grad f(x), x - v>``.  With ``oracle_fn=None`` the exact
    cardinality oracle for sparsity ``s`` is used, with a Gram-matrix fast
    path for least squares.
    """
    L = L if L is not None else estimate_L(obj)
    d = obj.d
    x = np.zeros(d)
    best = math.inf
    lower = -math.inf
    fast = isinstance(obj, LeastSquares) and oracle_fn is None
    if fast:
        G = obj.A.T @ obj.A
        aty = obj.A.T @ obj.y
        half_yy = 0.5 * float(obj.y @ obj.y)
    elif oracle_fn is None:
        oracle_fn = lambda u: top_s_dmo(u, s)
    for t in range(n_iter + 1):
        if fast:
            grad = G @ x - aty
            f = 0.5 * float(x @ grad) - 0.5 * float(aty @ x) + half_yy
        else:
            f, grad = obj.value_and_gradient(x)
        if f < best:
            best = f
        if t % 100 == 0 or t == n_iter:
            if fast:
                top = np.argpartition(-np.abs(grad), s - 1)[:s]
                dual = math.sqrt(float(grad[top] @ grad[top]))
            else:
                dual = oracle_fn(-grad).dual_value
            lower = max(lower, f - float(x @ grad) - C * dual)
        if t == n_iter:
            break
        eta = 2.0 / (t + 2.0)
        u = x - grad / (L * eta)
        if fast:
            sup = np.argpartition(-np.abs(u), s - 1)[:s]
        else:
            sup = list(oracle_fn(u).support)
        v = np.zeros(d)
        nu = np.linalg.norm(u[sup])
        if nu == 0.0:
            continue
        v[sup] = C * u[sup] / nu
        x += eta * (v - x)
    return best, lower
