"""Rate bounds for the DMO-driven Frank-Wolfe methods, as plain functions.

All bounds take the iteration index ``t`` and a :class:`BoundParams`.  Where a
quantity may vary with ``t`` (the adaptive constant ``A_t`` or the gradient
bound ``B_t``) the parameter can be a scalar or a sequence indexed by ``t``.

The practical envelopes use an implementation constant ``c`` (default 2);
the underlying results only state them up to a big-O constant.
"""
from dataclasses import dataclass
import math
from typing import Optional, Sequence, Union

import numpy as np

Scalar = Union[float, Sequence[float], np.ndarray]

PRACTICAL_C = 2.0
PRACTICAL_LABEL = "envelope (implementation constant)"


@dataclass(frozen=True)
class BoundParams:
    delta: float = 1.0
    L: float = 1.0
    C: float = 1.0
    mu: Optional[float] = None
    h0: float = 0.0
    s: int = 1
    B: Optional[Scalar] = None
    nu: float = 1.0
    Dstar: float = 0.0
    A: Optional[Scalar] = None

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"nu must lie in (0, 1], got {self.nu}")
        for name in ("L", "C"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.mu is not None and not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.h0 < 0 or self.Dstar < 0 or self.s < 1:
            raise ValueError("h0 and Dstar must be nonnegative and s >= 1")

    def with_(self, **changes):
        fields = dict(self.__dict__)
        fields.update(changes)
        return BoundParams(**fields)


def _at(value, t, name):
    if value is None:
        raise ValueError(f"bound needs {name}")
    if np.ndim(value) == 0:
        return float(value)
    seq = np.asarray(value, dtype=float)
    if t >= len(seq):
        raise ValueError(f"{name} sequence has length {len(seq)}, need index {t}")
    return float(seq[t])


def _check_t(t, floor=1):
    if t < floor:
        raise ValueError(f"t must be >= {floor}, got {t}")


def _need_mu(p):
    if p.mu is None:
        raise ValueError("bound needs the quadratic-growth constant mu")
    return p.mu


def lemma_P(t, delta, nu, h0, A):
    """``(1-d) 9^d h0 / (t+2)^(2d) + (ln(t+1)+1) A / (t+2)^nu``."""
    return ((1.0 - delta) * 9.0 ** delta / (t + 2.0) ** (2 * delta) * h0
            + (math.log(t + 1.0) + 1.0) / (t + 2.0) ** nu * A)


def lemma_S(t, delta, h0, A):
    """``(3 (1-delta) h0 + A) / ((2 delta - 1)(t+2))``; needs delta > 1/2."""
    if delta <= 0.5:
        return math.inf
    return (3.0 * (1.0 - delta) * h0 + A) / ((2.0 * delta - 1.0) * (t + 2.0))


def lemma_P_hat(t, delta, h0, A):
    """Composite recurrence bound: P(d, 2d) for d <= 1/2, else min(P(d, 1), S)."""
    if delta <= 0.5:
        return lemma_P(t, delta, 2.0 * delta, h0, A)
    return min(lemma_P(t, delta, 1.0, h0, A), lemma_S(t, delta, h0, A))


def bound_fw1(t, p):
    """Primal-error bound for DMO-FW-I.

    For ``delta <= 1/2`` the bound is ``min(2 C sqrt(s) B_t, P(delta, 2 delta))``
    (the first term only when ``B`` is given); otherwise
    ``min(P(delta, 1), (3 (1-delta) h0 + A_t) / ((2 delta - 1)(t+2)))``.
    """
    _check_t(t)
    A = _at(p.A, t, "A_t")
    d = p.delta
    if d <= 0.5:
        val = lemma_P(t, d, 2.0 * d, p.h0, A)
        if p.B is not None:
            val = min(val, 2.0 * p.C * math.sqrt(p.s) * _at(p.B, t, "B_t"))
        return val
    return min(lemma_P(t, d, 1.0, p.h0, A), lemma_S(t, d, p.h0, A))


def bound_fw2(t, p):
    """``8 L C^2 / (delta^2 (t+2))`` for DMO-FW-II."""
    _check_t(t)
    return 8.0 * p.L * p.C ** 2 / (p.delta ** 2 * (t + 2.0))


def bound_accfw_boundary(t, p):
    """``4 exp(4L/mu) h0 / (t+2)^2`` when the optimum lies on the boundary."""
    _check_t(t)
    mu = _need_mu(p)
    return 4.0 * math.exp(4.0 * p.L / mu) * p.h0 / (t + 2.0) ** 2


def bound_accfw_interior(t, p):
    """``min(3 L e^(2L/mu)(C^2 - D*^2)/(t+2) + 4 e^(4L/mu) h0/(t+2)^2, Z_t)``
    with ``Z_t = 2 L (5 C^2 - D*^2) / (t+2)``."""
    _check_t(t)
    mu = _need_mu(p)
    first = (3.0 * p.L * math.exp(2.0 * p.L / mu) * (p.C ** 2 - p.Dstar ** 2) / (t + 2.0)
             + 4.0 * math.exp(4.0 * p.L / mu) * p.h0 / (t + 2.0) ** 2)
    z_t = 2.0 * p.L * (5.0 * p.C ** 2 - p.Dstar ** 2) / (t + 2.0)
    return min(first, z_t)


def bound_accfw2(t, p):
    """``4 e^(4L/mu) h0 / (t+3)^2 + 28 L^2 (C^2/delta^2 - D*^2) / (5 mu (t+3))``."""
    _check_t(t)
    mu = _need_mu(p)
    return (4.0 * math.exp(4.0 * p.L / mu) * p.h0 / (t + 3.0) ** 2
            + 28.0 * p.L ** 2 * (p.C ** 2 / p.delta ** 2 - p.Dstar ** 2) / (5.0 * mu * (t + 3.0)))


def bound_practical(t, p, decaying, c=PRACTICAL_C):
    """Big-O envelopes with the implementation constant ``c``.

    ``decaying=True``: ``c B C sqrt(s) / t^nu`` (gradient sup-norm decaying
    like ``t^-nu``).  ``decaying=False``: ``c B C sqrt(s) (1-delta)/delta``.
    """
    _check_t(t)
    B = _at(p.B, t, "B")
    scale = c * B * p.C * math.sqrt(p.s)
    if decaying:
        return scale / t ** p.nu
    return scale * (1.0 - p.delta) / p.delta


def recurrence_H(t, delta, h0, A_seq):
    """Closed unroll of ``h_{k+1} = (1 - 2 delta/(k+2)) h_k + A_k/(k+2)^2``.

    Returns the bound on ``h_{t+1}``:
    ``prod_{i<=t} r_i h0 + sum_{j<t} A_j/(j+2)^2 prod_{j<k<=t} r_k + A_t/(t+2)^2``
    with ``r_i = 1 - 2 delta/(i+2)``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    A = np.broadcast_to(np.asarray(A_seq, dtype=float), (t + 1,)) if np.ndim(A_seq) == 0 \
        else np.asarray(A_seq, dtype=float)[:t + 1]
    if len(A) < t + 1:
        raise ValueError(f"A_seq needs {t + 1} entries, got {len(A)}")
    k = np.arange(t + 1, dtype=float)
    r = 1.0 - 2.0 * delta / (k + 2.0)
    # tail[j] = prod_{k=j+1..t} r_k, with tail[t] = 1
    tail = np.ones(t + 1)
    if t > 0:
        tail[:-1] = np.cumprod(r[::-1])[:-1][::-1]
    head = float(np.prod(r)) * h0
    return head + float(np.sum(A / (k + 2.0) ** 2 * tail))


def simulate_recurrence(t, delta, h0, A_seq):
    """Step the recurrence directly; ``h_{t+1}`` (test oracle for H)."""
    h = h0
    for k in range(t + 1):
        a = A_seq if np.ndim(A_seq) == 0 else A_seq[k]
        h = (1.0 - 2.0 * delta / (k + 2.0)) * h + a / (k + 2.0) ** 2
    return h


def bound_comparison(ts, deltas, h0, A):
    """Table of ``(t, delta, H, P, S, P_hat)`` rows comparing recurrence bounds."""
    rows = []
    for d in deltas:
        for t in ts:
            nu = 2.0 * d if d <= 0.5 else 1.0
            rows.append((t, d, recurrence_H(t, d, h0, A), lemma_P(t, d, nu, h0, A),
                         lemma_S(t, d, h0, A), lemma_P_hat(t, d, h0, A)))
    return rows


def adaptive_A(xgrad, delta, L, C):
    """``A_t = max_{i<=t} 4 (1-delta)(i+2) |<x_i, grad f(x_i)>| + 8 L C^2``."""
    xgrad = np.abs(np.asarray(xgrad, dtype=float))
    i = np.arange(len(xgrad), dtype=float)
    return np.maximum.accumulate(4.0 * (1.0 - delta) * (i + 2.0) * xgrad) + 8.0 * L * C ** 2


def estimation_error_bound(h_t, p, grad_inf_at_opt):
    """``sqrt(2 sqrt(s) C ||grad f(x~*)||_inf / mu) + sqrt(2 h_t / mu)``."""
    mu = _need_mu(p)
    return (math.sqrt(2.0 * math.sqrt(p.s) * p.C * grad_inf_at_opt / mu)
            + math.sqrt(2.0 * max(h_t, 0.0) / mu))


def fit_loglog_slope(t, h):
    """Least-squares slope of ``log h`` against ``log t`` (positive h only)."""
    t = np.asarray(t, dtype=float)
    h = np.asarray(h, dtype=float)
    keep = h > 0
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(t[keep]), np.log(h[keep]), 1)[0])


BOUND_FUNCTIONS = {
    "fw1": bound_fw1,
    "fw2": bound_fw2,
    "accfw_boundary": bound_accfw_boundary,
    "accfw_interior": bound_accfw_interior,
    "accfw2": bound_accfw2,
}


def bounds_table(trace_t, trace_h, p, names=None):
    """Rows ``(t, h, bound_1, ...)`` for every ``t >= 1`` and each applicable bound.

    A bound is applicable when its parameters are present (mu for the
    accelerated bounds, A for the DMO-FW-I bound).
    """
    if names is None:
        names = [n for n in BOUND_FUNCTIONS
                 if not (n.startswith("acc") and p.mu is None) and not (n == "fw1" and p.A is None)]
    rows = []
    for t, h in zip(trace_t, trace_h):
        t = int(t)
        if t < 1:
            continue
        rows.append([t, float(h)] + [BOUND_FUNCTIONS[n](t, p) for n in names])
    return names, rows
