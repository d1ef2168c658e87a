from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pcbound.poly import IntPoly, PolynomialDivisionError, RationalFn, format_poly, poly_gcd

coeffs = st.lists(st.integers(-50, 50), max_size=7)
points = st.fractions(min_value=-3, max_value=3, max_denominator=50)


@given(coeffs, coeffs, points)
def test_ring_ops_agree_with_pointwise_evaluation(a, b, x):
    pa, pb = IntPoly(a), IntPoly(b)
    assert (pa + pb)(x) == pa(x) + pb(x)
    assert (pa - pb)(x) == pa(x) - pb(x)
    assert (pa * pb)(x) == pa(x) * pb(x)


@given(coeffs, st.lists(st.integers(-5, 5), min_size=1, max_size=4).filter(lambda c: c[-1] in (1, -1)))
def test_divmod_reconstructs(a, b):
    pa, pb = IntPoly(a), IntPoly(b)
    quot, rem = pa.divmod_exact(pb)
    assert quot * pb + rem == pa
    assert rem.degree < pb.degree


def test_exact_div_rejects_remainder():
    with pytest.raises(PolynomialDivisionError):
        IntPoly([1, 0, 1]).exact_div(IntPoly([1, 1]))
    assert IntPoly([1, 0, -1]).exact_div(IntPoly([1, 1])) == IntPoly([1, -1])


def test_format():
    assert format_poly([0, 1, 0, -1, 1]) == "q-q^3+q^4"
    assert format_poly([-1, 3, 0, -2]) == "-1+3q-2q^3"
    assert format_poly([]) == "0"
    assert str(IntPoly([1, -2, -1])) == "1-2q-q^2"


def test_compose_one_minus():
    p = IntPoly([1, -2, -1])
    for x in (Fraction(1, 3), Fraction(2, 7)):
        assert p.compose_one_minus()(x) == p(1 - x)


def _rem_q(a, b):
    """Remainder of a by b over the rationals."""
    a = [Fraction(c) for c in a]
    while len(a) >= len(b) and any(a):
        t = a[-1] / b[-1]
        shift = len(a) - len(b)
        for j, cb in enumerate(b):
            a[shift + j] -= t * cb
        a.pop()
    return a


@given(coeffs.filter(any), coeffs.filter(any), coeffs)
def test_gcd_contains_common_factor(a, b, c):
    pc = IntPoly(c)
    if pc.degree < 1:
        return
    x, y = IntPoly(a) * pc, IntPoly(b) * pc
    g = poly_gcd(x, y)
    assert not any(_rem_q(g.coeffs, pc.coeffs))
    assert not any(_rem_q(x.coeffs, g.coeffs))
    assert not any(_rem_q(y.coeffs, g.coeffs))
    assert g.coeffs[-1] > 0 and g.content() == 1


@given(coeffs.filter(lambda c: any(c)), coeffs.filter(lambda c: any(c)), points)
def test_rational_reduction_preserves_value(a, b, x):
    num, den = IntPoly(a), IntPoly(b)
    if den(x) == 0:
        return
    r = RationalFn(num * IntPoly([1, 1]), den * IntPoly([1, 1]))
    if den(x) != 0 and x != -1:
        assert r(x) == Fraction(num(x)) / den(x)
    low = next(c for c in r.den.coeffs if c)
    assert low > 0


def test_rational_arithmetic():
    a = RationalFn(IntPoly([1]), IntPoly([1, -1]))
    b = RationalFn(IntPoly([1]), IntPoly([1, 1]))
    assert a + b == RationalFn(IntPoly([2]), IntPoly([1, 0, -1]))
    assert (a * b).den == IntPoly([1, 0, -1])
    assert (a / a) == RationalFn(1)
    with pytest.raises(ZeroDivisionError):
        RationalFn(1, 0)
