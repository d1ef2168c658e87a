"""Exact polynomials in ``q`` with integer coefficients, and their quotients.

``IntPoly`` stores coefficients lowest power first as Python ints, so every
operation is exact.  ``RationalFn`` is a pair of ``IntPoly`` kept in lowest
terms (gcd taken over the rationals, then scaled back to primitive integer
polynomials).
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Iterable, Sequence


class PolynomialDivisionError(ArithmeticError):
    """Raised when an exact polynomial division leaves a remainder."""


def _trim(coeffs: list) -> tuple:
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


class IntPoly:
    """Immutable polynomial with integer coefficients.

    >>> p = IntPoly([1, -2, -1])
    >>> str(p)
    '1-2q-q^2'
    >>> p(Fraction(1, 2))
    Fraction(-1, 4)
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[int] = ()):
        cs = [int(c) for c in coeffs]
        object.__setattr__(self, "coeffs", _trim(cs))

    def __setattr__(self, name, value):
        raise AttributeError("IntPoly is immutable")

    @classmethod
    def constant(cls, c: int) -> "IntPoly":
        return cls([c])

    @classmethod
    def monomial(cls, power: int, c: int = 1) -> "IntPoly":
        return cls([0] * power + [c])

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, k: int) -> int:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def __len__(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = IntPoly([other])
        if not isinstance(other, IntPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"IntPoly({list(self.coeffs)})"

    def __str__(self) -> str:
        return format_poly(self.coeffs)

    def _coerce(self, other) -> "IntPoly":
        if isinstance(other, IntPoly):
            return other
        if isinstance(other, int):
            return IntPoly([other])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = max(len(self.coeffs), len(other.coeffs))
        return IntPoly([self[k] + other[k] for k in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return IntPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return IntPoly()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for a, ca in enumerate(self.coeffs):
            if ca:
                for b, cb in enumerate(other.coeffs):
                    out[a + b] += ca * cb
        return IntPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = IntPoly([1])
        for _ in range(k):
            out = out * self
        return out

    def divmod_exact(self, divisor: "IntPoly") -> tuple["IntPoly", "IntPoly"]:
        """Long division over the integers.

        The divisor's leading coefficient must divide every intermediate
        leading term; otherwise ``PolynomialDivisionError`` is raised.
        """
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        lead = divisor.coeffs[-1]
        dd = divisor.degree
        quot = [0] * max(len(rem) - dd, 0)
        for k in range(len(rem) - 1, dd - 1, -1):
            c = rem[k]
            if c == 0:
                continue
            t, r = divmod(c, lead)
            if r:
                raise PolynomialDivisionError("non-integral quotient coefficient")
            quot[k - dd] = t
            for j, cd in enumerate(divisor.coeffs):
                rem[k - dd + j] -= t * cd
        return IntPoly(quot), IntPoly(rem)

    def exact_div(self, divisor: "IntPoly") -> "IntPoly":
        """Quotient of an exact division; a nonzero remainder is an error."""
        quot, rem = self.divmod_exact(divisor)
        if not rem.is_zero():
            raise PolynomialDivisionError(f"{self} is not divisible by {divisor}")
        return quot

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def content(self) -> int:
        return reduce(gcd, self.coeffs, 0)

    def primitive(self) -> "IntPoly":
        g = self.content()
        if g in (0, 1):
            return self
        return IntPoly([c // g for c in self.coeffs])

    def derivative(self) -> "IntPoly":
        return IntPoly([k * c for k, c in enumerate(self.coeffs)][1:])

    def compose_one_minus(self) -> "IntPoly":
        """Return ``self(1 - x)``, i.e. rewrite a polynomial in q as one in p."""
        out = IntPoly()
        base = IntPoly([1, -1])
        power = IntPoly([1])
        for c in self.coeffs:
            out = out + power * c
            power = power * base
        return out


ONE = IntPoly([1])
ZERO = IntPoly()
Q = IntPoly([0, 1])
ONE_MINUS_Q = IntPoly([1, -1])
ONE_MINUS_Q2 = IntPoly([1, 0, -1])
Q2 = IntPoly([0, 0, 1])


def format_poly(coeffs: Sequence[int], var: str = "q") -> str:
    """Ascending-power rendering, e.g. ``q-q^3+q^4``."""
    terms = []
    for k, c in enumerate(coeffs):
        if c == 0:
            continue
        mag = abs(c)
        if k == 0:
            body = str(mag)
        else:
            mono = var if k == 1 else f"{var}^{k}"
            body = mono if mag == 1 else f"{mag}{mono}"
        sign = "-" if c < 0 else "+"
        if not terms:
            terms.append(body if c > 0 else "-" + body)
        else:
            terms.append(sign + body)
    return "".join(terms) if terms else "0"


def _fpoly_trim(c: list) -> list:
    while c and c[-1] == 0:
        c.pop()
    return c


def _fpoly_rem(a: list, b: list) -> list:
    a = list(a)
    db = len(b) - 1
    while len(a) - 1 >= db and a:
        t = a[-1] / b[-1]
        shift = len(a) - 1 - db
        for j, cb in enumerate(b):
            a[shift + j] -= t * cb
        _fpoly_trim(a)
    return a


def poly_gcd(a: IntPoly, b: IntPoly) -> IntPoly:
    """Primitive gcd (over Q, scaled to Z) with positive leading coefficient."""
    x = [Fraction(c) for c in a.coeffs]
    y = [Fraction(c) for c in b.coeffs]
    while y:
        x, y = y, _fpoly_rem(x, y)
    if not x:
        return IntPoly()
    den = reduce(lambda acc, f: acc * f.denominator // gcd(acc, f.denominator), x, 1)
    g = IntPoly([int(f * den) for f in x]).primitive()
    if g.coeffs[-1] < 0:
        g = -g
    return g


class RationalFn:
    """Quotient ``num/den`` of integer polynomials in lowest terms.

    Normalization: the common content is removed and the lowest-order nonzero
    coefficient of the denominator is positive.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: IntPoly | int, den: IntPoly | int = 1, reduce_terms: bool = True):
        num = num if isinstance(num, IntPoly) else IntPoly([num])
        den = den if isinstance(den, IntPoly) else IntPoly([den])
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if reduce_terms:
            if num.is_zero():
                den = ONE
            else:
                g = poly_gcd(num, den)
                if g.degree > 0:
                    num = _div_q(num, g)
                    den = _div_q(den, g)
                c = gcd(num.content(), den.content())
                if c > 1:
                    num = IntPoly([v // c for v in num.coeffs])
                    den = IntPoly([v // c for v in den.coeffs])
            low = next(v for v in den.coeffs if v != 0)
            if low < 0:
                num, den = -num, -den
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("RationalFn is immutable")

    def _coerce(self, other):
        if isinstance(other, RationalFn):
            return other
        if isinstance(other, (IntPoly, int)):
            return RationalFn(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RationalFn(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFn(-self.num, self.den, reduce_terms=False)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RationalFn(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.num.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFn(self.num * other.den, self.den * other.num)

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.num * other.den == other.num * self.den

    def __hash__(self):
        return hash((self.num, self.den))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __call__(self, x):
        d = self.den(x)
        return Fraction(self.num(x)) / d if isinstance(x, (int, Fraction)) else self.num(x) / d

    def __repr__(self):
        return f"RationalFn({self.num!r}, {self.den!r})"

    def __str__(self):
        if self.den == ONE:
            return str(self.num)
        return f"({self.num})/({self.den})"


def _div_q(a: IntPoly, g: IntPoly) -> IntPoly:
    """Divide ``a`` by a factor ``g`` over Q; the quotient is scaled to Z."""
    quot = [Fraction(0)] * (a.degree - g.degree + 1)
    rem = [Fraction(c) for c in a.coeffs]
    dg = g.degree
    for k in range(a.degree, dg - 1, -1):
        t = rem[k] / g.coeffs[-1]
        quot[k - dg] = t
        if t:
            for j, cg in enumerate(g.coeffs):
                rem[k - dg + j] -= t * cg
    if any(rem[:dg]):
        raise ArithmeticError("gcd does not divide polynomial")
    den = reduce(lambda acc, f: acc * f.denominator // gcd(acc, f.denominator), quot, 1)
    if den != 1:
        # Gauss's lemma: a primitive factor leaves an integral quotient.
        raise ArithmeticError("non-integral quotient after gcd reduction")
    return IntPoly([int(f) for f in quot])
