import math

import numpy as np
import pytest

from gsfw.theory import (BoundParams, adaptive_A, bound_accfw2, bound_accfw_boundary,
                         bound_accfw_interior, bound_comparison, bound_fw1, bound_fw2,
                         bound_practical, bounds_table, estimation_error_bound,
                         fit_loglog_slope, lemma_P, lemma_P_hat, lemma_S, recurrence_H,
                         simulate_recurrence)


def test_params_validation():
    for bad in (dict(delta=0.0), dict(nu=1.5), dict(L=0.0), dict(mu=-1.0), dict(h0=-1.0)):
        with pytest.raises(ValueError):
            BoundParams(**bad)


def test_fw1_delta_one():
    p = BoundParams(delta=1.0, L=1.0, C=1.0, h0=3.0, A=8.0)
    for t in (1, 5, 100):
        assert bound_fw1(t, p) == pytest.approx(8.0 / (t + 2))


def test_fw1_delta_half_arithmetic():
    p = BoundParams(delta=0.5, h0=2.0, A=5.0)
    expected = 0.5 * 3.0 / 3.0 * 2.0 + (math.log(2) + 1) / 3.0 * 5.0
    assert bound_fw1(1, p) == pytest.approx(expected)
    assert bound_fw1(1, p.with_(B=0.01, s=4)) == pytest.approx(min(expected, 2 * 2 * 0.01))


def test_fw1_needs_A():
    with pytest.raises(ValueError):
        bound_fw1(1, BoundParams())
    with pytest.raises(ValueError):
        bound_fw1(0, BoundParams(A=1.0))


def test_fw1_dominates_recurrence():
    for delta in np.linspace(0.1, 1.0, 10):
        p = BoundParams(delta=float(delta), h0=1.0, A=4.0)
        for t in range(1, 300, 7):
            assert recurrence_H(t - 1, delta, 1.0, 4.0) <= bound_fw1(t, p) * (1 + 1e-12)


def test_fw2_examples():
    p = BoundParams(delta=1.0, L=1.0, C=1.0)
    assert bound_fw2(2, p) == pytest.approx(2.0)
    assert bound_fw2(2, p.with_(delta=0.5)) == pytest.approx(8.0)


def test_accfw_boundary():
    p = BoundParams(L=1.0, mu=1.0, h0=0.5)
    assert bound_accfw_boundary(3, p) == pytest.approx(4 * math.e ** 4 * 0.5 / 25)
    assert bound_accfw_boundary(2 * 5 + 2, p) == pytest.approx(bound_accfw_boundary(5, p) / 4)
    with pytest.raises(ValueError):
        bound_accfw_boundary(1, BoundParams())


def test_accfw_interior():
    p = BoundParams(L=1.0, C=1.0, mu=1.0, h0=0.2, Dstar=1.0)
    t = 4
    assert bound_accfw_interior(t, p) == pytest.approx(
        min(4 * math.exp(4) * 0.2 / 36, 2 * 4 / 6))
    q = BoundParams(L=1.0, C=1.0, mu=1.0, h0=0.0, Dstar=0.0)
    first = 3 * math.exp(2) / 5
    assert bound_accfw_interior(3, q) == pytest.approx(min(first, 2.0))
    assert bound_accfw_interior(3, q) <= first and bound_accfw_interior(3, q) <= 2.0


def test_accfw2():
    p = BoundParams(delta=1.0, L=1.0, C=1.0, mu=1.0, h0=1.0, Dstar=1.0)
    assert bound_accfw2(2, p) == pytest.approx(4 * math.exp(4) / 25)
    q = BoundParams(delta=1.0, L=1.0, C=1.0, mu=2.0, h0=0.0)
    base = bound_accfw2(1, q)
    assert bound_accfw2(1, q.with_(delta=0.5)) == pytest.approx(4 * base)


def test_practical():
    p = BoundParams(delta=1.0, B=0.5, C=1.0, s=9, nu=1.0)
    assert bound_practical(5, p, decaying=False) == 0.0
    assert bound_practical(10, p, True) == pytest.approx(bound_practical(5, p, True) / 2)
    q = p.with_(delta=0.5)
    assert bound_practical(3, q, False) == bound_practical(300, q, False) == pytest.approx(2 * 0.5 * 3)


def test_recurrence_matches_simulation():
    A_seq = np.linspace(1.0, 3.0, 60)
    for delta in (0.1, 0.5, 0.77, 1.0):
        for t in (0, 1, 10, 59):
            a = recurrence_H(t, delta, 2.0, A_seq)
            b = simulate_recurrence(t, delta, 2.0, A_seq)
            assert a == pytest.approx(b, rel=1e-10)
    assert recurrence_H(0, 0.3, 2.0, 5.0) == pytest.approx(0.7 * 2.0 + 5.0 / 4)
    with pytest.raises(ValueError):
        recurrence_H(5, 0.5, 1.0, [1.0, 2.0])


def test_lemma_pieces():
    assert lemma_S(3, 0.5, 1.0, 1.0) == math.inf
    assert lemma_P_hat(3, 0.4, 1.0, 2.0) == lemma_P(3, 0.4, 0.8, 1.0, 2.0)
    assert lemma_P_hat(3, 0.9, 1.0, 2.0) == min(lemma_P(3, 0.9, 1.0, 1.0, 2.0),
                                                lemma_S(3, 0.9, 1.0, 2.0))
    rows = bound_comparison([1, 10], [0.3, 1.0], 1.0, 2.0)
    assert len(rows) == 4 and all(r[2] <= r[5] for r in rows)


def test_bounds_positive_and_monotone():
    p = BoundParams(delta=0.6, L=2.0, C=1.0, mu=1.0, h0=1.0, s=4, B=1.0, Dstar=0.5, A=20.0)
    ts = np.arange(10, 2000)
    for fn in (bound_fw1, bound_fw2, bound_accfw_boundary, bound_accfw_interior, bound_accfw2):
        vals = np.array([fn(int(t), p) for t in ts])
        assert np.all(vals > 0)
        assert np.all(np.diff(vals) <= 1e-15)
    low = p.with_(delta=0.2)
    vals = np.array([bound_fw1(int(t), low) for t in ts])
    assert np.all(vals > 0) and np.all(np.diff(vals) <= 1e-15)


def test_adaptive_A():
    A = adaptive_A([0.0, -1.0, 0.5], 0.5, 1.0, 1.0)
    np.testing.assert_allclose(A, [8.0, 8.0 + 6.0, 8.0 + 6.0])
    np.testing.assert_allclose(adaptive_A([3.0, 2.0], 1.0, 2.0, 1.0), [16.0, 16.0])


def test_estimation_error_bound():
    p = BoundParams(mu=0.5, s=4, C=1.0)
    assert estimation_error_bound(0.02, p, 0.0) == pytest.approx(math.sqrt(0.08))
    assert estimation_error_bound(0.0, p, 0.0) == 0.0
    assert estimation_error_bound(0.0, p, 0.1) == pytest.approx(math.sqrt(2 * 2 * 0.1 / 0.5))


def test_slope_and_table():
    t = np.arange(1, 50)
    assert fit_loglog_slope(t, 3.0 / t ** 2) == pytest.approx(-2.0)
    assert math.isnan(fit_loglog_slope(t, np.zeros_like(t, dtype=float)))
    names, rows = bounds_table([0, 1, 2], [1.0, 0.5, 0.3], BoundParams(A=8.0))
    assert names == ["fw1", "fw2"] and [r[0] for r in rows] == [1, 2]
