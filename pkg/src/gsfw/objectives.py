"""Smooth convex objectives and smoothness estimation."""
from dataclasses import dataclass
from typing import Optional
import warnings

import numpy as np

from .rng import INIT, Stream


def _check_dim(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape != (d,):
        raise ValueError(f"x has shape {x.shape}, expected ({d},)")
    return x


class LeastSquares:
    """``f(x) = 0.5 * ||A x - y||^2``."""

    def __init__(self, A, y):
        A = np.asarray(A, dtype=float)
        y = np.asarray(y, dtype=float)
        if A.ndim != 2 or y.shape != (A.shape[0],):
            raise ValueError(f"incompatible shapes A{A.shape}, y{y.shape}")
        self.A = A
        self.y = y

    @property
    def d(self):
        return self.A.shape[1]

    def value(self, x):
        r = self.A @ _check_dim(x, self.d) - self.y
        return 0.5 * float(r @ r)

    def gradient(self, x):
        return self.A.T @ (self.A @ _check_dim(x, self.d) - self.y)

    def value_and_gradient(self, x):
        r = self.A @ _check_dim(x, self.d) - self.y
        return 0.5 * float(r @ r), self.A.T @ r

    def estimate_L(self, tol=1e-8, max_iter=1000):
        return estimate_L(self, tol=tol, max_iter=max_iter)


class ShiftedQuadratic:
    """``f(x) = 0.5 * x.x - x.b``; 1-smooth and 1-strongly convex."""

    def __init__(self, b):
        self.b = np.asarray(b, dtype=float).copy()
        if self.b.ndim != 1:
            raise ValueError("b must be a vector")

    @property
    def d(self):
        return self.b.size

    def value(self, x):
        x = _check_dim(x, self.d)
        return 0.5 * float(x @ x) - float(x @ self.b)

    def gradient(self, x):
        return _check_dim(x, self.d) - self.b

    def value_and_gradient(self, x):
        return self.value(x), self.gradient(x)

    def estimate_L(self, tol=1e-8, max_iter=1000):
        return 1.0


def value(obj, x):
    return obj.value(x)


def gradient(obj, x):
    return obj.gradient(x)


@dataclass(frozen=True)
class SmoothnessInfo:
    L: float
    mu: Optional[float] = None

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.mu is not None and not 0 < self.mu <= self.L:
            raise ValueError(f"need 0 < mu <= L, got mu={self.mu}, L={self.L}")


def estimate_L(obj, tol=1e-8, max_iter=1000, seed=0):
    """Largest eigenvalue of ``A^T A`` by power iteration.

    Stops when successive Rayleigh quotients agree to relative ``tol``; on
    non-convergence a ``RuntimeWarning`` is issued and the last quotient is
    returned.
    """
    if not isinstance(obj, LeastSquares):
        return float(obj.estimate_L(tol=tol, max_iter=max_iter))
    A = obj.A
    if not np.any(A):
        raise ValueError("A is identically zero")
    v = Stream(seed, INIT).normal(A.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the null space; restart along a fixed direction
            v = np.ones(A.shape[1]) / np.sqrt(A.shape[1])
            continue
        v = w / nw
        if abs(lam_new - lam) <= tol * abs(lam_new):
            # Rayleigh quotient at the new vector is never below the old one
            w = A.T @ (A @ v)
            return max(lam_new, float(v @ w))
        lam = lam_new
    warnings.warn(f"power iteration did not converge in {max_iter} steps",
                  RuntimeWarning, stacklevel=2)
    return lam


def load_matrix(path):
    """Rows of whitespace-separated decimals; a single row is a vector."""
    arr = np.loadtxt(path, dtype=float, ndmin=2)
    return arr[0] if arr.shape[0] == 1 else arr


def save_matrix(path, arr):
    np.savetxt(path, np.atleast_2d(arr), fmt="%.17g")
