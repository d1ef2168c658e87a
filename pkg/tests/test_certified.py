import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcbound import _backend, imc
from pcbound.certified import (CertifiedSign, ErrBounded, InconclusiveSolve, certified_sign, eval_poly,
                               exact_mean_drift, format_drift_table, mean_drift_value, stationary_solve)
from pcbound.poly import IntPoly

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
errs = st.floats(min_value=0, max_value=1e-3, allow_nan=False)


def _exact(x: ErrBounded, sign_pick: float) -> Fraction:
    """A point of the enclosure, chosen by sign_pick in [-1, 1]."""
    return Fraction(x.value) + Fraction(sign_pick) * Fraction(x.err)


@given(finite, errs, finite, errs, st.floats(-1, 1), st.floats(-1, 1))
def test_arithmetic_encloses_exact_results(a, ea, b, eb, sa, sb):
    x, y = ErrBounded(a, ea), ErrBounded(b, eb)
    xa, yb = _exact(x, sa), _exact(y, sb)
    assert (x + y).contains(xa + yb)
    assert (x - y).contains(xa - yb)
    assert (x * y).contains(xa * yb)
    if abs(b) > 2 * eb:
        try:
            quot = x / y
        except (OverflowError, ZeroDivisionError):
            return
        assert quot.contains(xa / yb)


def test_division_by_enclosure_of_zero():
    with pytest.raises(ZeroDivisionError):
        ErrBounded(1.0) / ErrBounded(1e-3, 1e-3)


def test_negative_error_rejected():
    with pytest.raises(ValueError):
        ErrBounded(1.0, -1.0)


def test_certified_sign():
    assert certified_sign(ErrBounded(-1e-6, 1e-12)) is CertifiedSign.NEGATIVE
    assert certified_sign(ErrBounded(1e-6, 1e-12)) is CertifiedSign.POSITIVE
    assert certified_sign(ErrBounded(1e-12, 1e-6)) is CertifiedSign.INCONCLUSIVE
    assert certified_sign(ErrBounded(0.0, 0.0)) is CertifiedSign.INCONCLUSIVE


@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=12),
       st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_polynomial_evaluation_is_enclosed(coeffs, q):
    poly = IntPoly(coeffs)
    assert eval_poly(poly, q).contains(poly(Fraction(q)))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([0, 1, 2]), st.floats(min_value=0.01, max_value=0.99))
def test_mean_drift_enclosure_contains_exact_value(order, q):
    m = mean_drift_value(order, q)
    assert m.contains(exact_mean_drift(order, q))


def test_mean_drift_order_three_spot_checks():
    rng = random.Random(3)
    for _ in range(5):
        q = rng.uniform(0.05, 0.95)
        assert mean_drift_value(3, q).contains(exact_mean_drift(3, q))


@pytest.mark.parametrize("order", [1, 3, 5])
def test_stationary_measure_solves_balance_equations(order):
    q = 0.37
    mat = imc.transition_matrix(order)
    pi = stationary_solve(mat, q)
    assert pi.total().contains(1)
    qm = np.array([[float(mat.entry(l, m)(q)) for m in range(mat.size)] for l in range(mat.size)])
    assert np.max(np.abs(pi.values @ qm - pi.values)) < 1e-13
    assert np.all(pi.values > 0)


def test_stationary_order_one_closed_form():
    q = Fraction(2, 5)
    mat = imc.transition_matrix(1)
    pi = stationary_solve(mat, float(q))
    den = 1 - q + q**2 + q**3 - q**4
    exact = [q**2 / den, (1 - q + q**3 - q**4) / den]
    # q is not a double; the solve used float(q), so compare with a loose bound.
    for got, want in zip(pi.values, exact):
        assert abs(got - float(want)) < 1e-15


@pytest.mark.parametrize("order", [0, 2, 4])
def test_drift_increasing_in_p(order):
    qs = np.linspace(0.2, 0.6, 9)
    vals = [mean_drift_value(order, float(q)) for q in qs]
    for a, b in zip(vals, vals[1:]):
        # larger q means smaller p, so the drift should fall
        assert b.hi < a.lo


def test_inconclusive_pivot_detected():
    a = np.array([[1e-300, 1.0], [1.0, 1.0]])
    ea = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(InconclusiveSolve):
        _backend.kernels.gauss_tracked(a.copy(), ea.copy(), np.ones(2), np.zeros(2))


@given(st.integers(2, 6), st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_gauss_tracked_encloses_exact_solution(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(-9, 10, size=(n, n)).astype(float)
    a += np.diag(np.full(n, 30.0))
    b = rng.integers(-9, 10, size=n).astype(float)
    x, ex = _backend.kernels.gauss_tracked(a.copy(), np.zeros((n, n)), b.copy(), np.zeros(n))
    # exact rational solve
    rows = [[Fraction(int(v)) for v in a[r]] + [Fraction(int(b[r]))] for r in range(n)]
    for c in range(n):
        piv = max(range(c, n), key=lambda r: abs(rows[r][c]))
        rows[c], rows[piv] = rows[piv], rows[c]
        for r in range(n):
            if r != c:
                f = rows[r][c] / rows[c][c]
                rows[r] = [u - f * v for u, v in zip(rows[r], rows[c])]
    exact = [rows[c][n] / rows[c][c] for c in range(n)]
    for xi, ei, want in zip(x, ex, exact):
        assert abs(Fraction(float(xi)) - want) <= Fraction(float(ei))


def test_q_range_checked():
    with pytest.raises(ValueError):
        mean_drift_value(1, 1.0)
    with pytest.raises(ValueError):
        mean_drift_value(1, 0.0)


def test_drift_table_formats():
    rows = [("0.604233", -1.35e-6, 7.7e-16)]
    csv = format_drift_table(rows, "csv")
    assert csv.splitlines()[0] == "p,M_num,Delta_M"
    assert "-1.350000E-06" in csv
    assert "0.604233" in format_drift_table(rows)
