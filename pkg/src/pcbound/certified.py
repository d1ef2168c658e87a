"""Floating-point evaluation with rigorous forward error bounds.

Every quantity is carried as a value plus an absolute error bound on its
distance from the exact real number it approximates.  Each IEEE operation
contributes at most ``ROUND_REL * |result| + ROUND_ABS``; error bounds are
themselves accumulated with upward-rounded arithmetic (``nextafter`` after
every operation), so the reported bound is never an underestimate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _backend
from ._kernels_py import ROUND_ABS, ROUND_REL
from .imc import DriftVector, TransitionMatrix, build_chain
from .poly import IntPoly

InconclusiveSolve = _backend.InconclusiveSolve


def _up(x: float) -> float:
    return math.nextafter(x, math.inf)


def _down(x: float) -> float:
    return math.nextafter(x, -math.inf)


def _rnd(x: float) -> float:
    return _up(_up(ROUND_REL * abs(x)) + ROUND_ABS)


class CertifiedSign(enum.Enum):
    NEGATIVE = -1
    INCONCLUSIVE = 0
    POSITIVE = 1


@dataclass(frozen=True)
class ErrBounded:
    """A float ``value`` with ``|exact - value| <= err``."""

    value: float
    err: float = 0.0

    def __post_init__(self):
        if not self.err >= 0.0:
            raise ValueError("error bound must be nonnegative")
        if not math.isfinite(self.value):
            raise OverflowError("value is not finite")

    @classmethod
    def exact(cls, x: float) -> "ErrBounded":
        return cls(float(x), 0.0)

    @property
    def lo(self) -> float:
        return _down(self.value - self.err)

    @property
    def hi(self) -> float:
        return _up(self.value + self.err)

    def contains(self, x) -> bool:
        """Exact check that ``x`` lies within the enclosure."""
        if math.isinf(self.err):
            return True
        return abs(Fraction(x) - Fraction(self.value)) <= Fraction(self.err)

    def _coerce(self, other) -> "ErrBounded":
        return other if isinstance(other, ErrBounded) else ErrBounded.exact(other)

    def __neg__(self):
        return ErrBounded(-self.value, self.err)

    def __add__(self, other):
        other = self._coerce(other)
        s = self.value + other.value
        return ErrBounded(s, _up(_up(self.err + other.err) + _rnd(s)))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        pr = self.value * other.value
        e = _up(_up(abs(self.value) * other.err) + _up(abs(other.value) * self.err))
        e = _up(e + _up(self.err * other.err))
        return ErrBounded(pr, _up(e + _rnd(pr)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        b = abs(other.value)
        if not other.err < b:
            raise ZeroDivisionError("divisor enclosure contains zero")
        qt = self.value / other.value
        # |A/P - a/p| <= (|a| ep / |p| + ea) / (|p| - ep)
        den = _down(b - other.err)
        if not den > 0.0:
            raise ZeroDivisionError("divisor enclosure too close to zero")
        num = _up(_up(_up(abs(self.value) * other.err) / b) + self.err)
        return ErrBounded(qt, _up(_up(num / den) + _rnd(qt)))

    def __rtruediv__(self, other):
        return self._coerce(other) / self


def certified_sign(x: ErrBounded) -> CertifiedSign:
    if x.value + x.err < 0.0 and _up(x.value + x.err) < 0.0:
        return CertifiedSign.NEGATIVE
    if x.value - x.err > 0.0 and _down(x.value - x.err) > 0.0:
        return CertifiedSign.POSITIVE
    return CertifiedSign.INCONCLUSIVE


# ---------------------------------------------------------------- polynomial evaluation

def _coeffs_to_float(coeffs) -> np.ndarray:
    arr = np.asarray(coeffs)
    if arr.dtype == object:
        if any(abs(int(c)) > 2**53 for c in arr.ravel()):
            raise OverflowError("coefficient not exactly representable as a double")
    elif arr.size and int(np.max(np.abs(arr))) > 2**53:
        raise OverflowError("coefficient not exactly representable as a double")
    return arr.astype(np.float64)


def _trimmed(coeffs: np.ndarray) -> np.ndarray:
    used = np.nonzero(np.any(coeffs != 0, axis=tuple(range(coeffs.ndim - 1))))[0]
    return coeffs[..., : int(used[-1]) + 1] if used.size else coeffs[..., :1]


def _vup(x):
    return np.nextafter(x, np.inf)


def _vrnd(x):
    return _vup(_vup(ROUND_REL * np.abs(x)) + ROUND_ABS)


def eval_poly_array(coeffs: np.ndarray, q: float, q_err: float = 0.0):
    """Horner evaluation of polynomials stored along the last axis.

    Returns ``(values, errors)``; ``q_err`` bounds the distance of ``q`` from
    the exact evaluation point.
    """
    c = _coeffs_to_float(coeffs)
    aq = abs(q)
    r = c[..., -1].copy()
    e = np.zeros_like(r)
    for t in range(c.shape[-1] - 2, -1, -1):
        pr = r * q
        epr = _vup(_vup(np.abs(r) * q_err) + _vup(aq * e))
        epr = _vup(epr + _vup(e * q_err))
        s = pr + c[..., t]
        e = _vup(_vup(epr + _vrnd(pr)) + _vrnd(s))
        r = s
    return r, e


def eval_poly(poly: IntPoly, q) -> ErrBounded:
    """Evaluate an integer polynomial at an (error-bounded) point."""
    q = q if isinstance(q, ErrBounded) else ErrBounded.exact(q)
    if poly.is_zero():
        return ErrBounded(0.0, 0.0)
    v, e = eval_poly_array(np.array(poly.coeffs, dtype=object), q.value, q.err)
    return ErrBounded(float(v), float(e))


def matrix_at(matrix: TransitionMatrix, q: float):
    """Transition probabilities at ``q`` with per-entry error bounds."""
    return eval_poly_array(_coeffs_to_float(_trimmed(matrix.coeffs)), q)


def drift_at(dv: DriftVector, q: float):
    """Per-state drifts ``M_l(q)`` with error bounds."""
    num, enum_ = eval_poly_array(_coeffs_to_float(dv.numerators), q)
    den, eden = eval_poly_array(_coeffs_to_float(np.array(dv.denominator.coeffs, dtype=np.int64)), q)
    den = float(den)
    eden = float(eden)
    out = [ErrBounded(float(a), float(b)) / ErrBounded(den, eden) for a, b in zip(num, enum_)]
    return np.array([x.value for x in out]), np.array([x.err for x in out])


# ---------------------------------------------------------------- stationary measure

@dataclass(frozen=True)
class StationaryMeasure:
    order: int
    q: float
    values: np.ndarray
    errors: np.ndarray

    @property
    def entries(self) -> list[ErrBounded]:
        return [ErrBounded(float(v), float(e)) for v, e in zip(self.values, self.errors)]

    def total(self) -> ErrBounded:
        acc = ErrBounded(0.0)
        for x in self.entries:
            acc = acc + x
        return acc


def _check_q(q: float) -> float:
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    return q


def stationary_solve(matrix: TransitionMatrix, q: float, backend=None) -> StationaryMeasure:
    """Stationary law of the window chain at ``q`` with forward error bounds.

    Solves ``pi (Q - I) = 0`` with one balance equation replaced by
    ``sum(pi) = 1``; the replaced equation is the one whose diagonal entry
    ``1 - Q_ll`` is largest.
    """
    q = _check_q(q)
    kern = backend or _backend.kernels
    qv, qe = matrix_at(matrix, q)
    n = qv.shape[0]
    a = np.ascontiguousarray(qv.T)
    ea = np.ascontiguousarray(qe.T)
    diag = np.diag(a) - 1.0
    ediag = _vup(np.diag(ea) + _vrnd(diag))
    idx = np.arange(n)
    a[idx, idx] = diag
    ea[idx, idx] = ediag
    r = int(np.argmax(np.abs(diag)))
    a[r, :] = 1.0
    ea[r, :] = 0.0
    b = np.zeros(n)
    b[r] = 1.0
    eb = np.zeros(n)
    x, ex = kern.gauss_tracked(a, ea, b, eb)
    return StationaryMeasure(matrix.order, q, np.asarray(x), np.asarray(ex))


def mean_drift_value(order: int, q: float, backend=None) -> ErrBounded:
    """Stationary mean edge drift at ``q`` with a rigorous error bound."""
    q = _check_q(q)
    mat, dv = build_chain(order)
    pi = stationary_solve(mat, q, backend=backend)
    num, enum_ = eval_poly_array(_coeffs_to_float(_trimmed(dv.numerators)), q)
    den, eden = eval_poly_array(_coeffs_to_float(np.array(dv.denominator.coeffs, dtype=np.int64)), q)
    den_b = ErrBounded(float(den), float(eden))
    acc = ErrBounded(0.0)
    for l in range(mat.size):
        m_l = ErrBounded(float(num[l]), float(enum_[l])) / den_b
        acc = acc + m_l * ErrBounded(float(pi.values[l]), float(pi.errors[l]))
    return acc


def exact_mean_drift(order: int, q) -> Fraction:
    """Exact rational mean drift at a rational ``q`` (independent oracle, small orders)."""
    q = Fraction(q)
    mat, dv = build_chain(order)
    n = mat.size
    rows = [[mat.entry(l, m)(q) - (1 if l == m else 0) for l in range(n)] + [Fraction(0)] for m in range(n - 1)]
    rows.append([Fraction(1)] * n + [Fraction(1)])
    for c in range(n):
        piv = next(r for r in range(c, n) if rows[r][c] != 0)
        rows[c], rows[piv] = rows[piv], rows[c]
        for r in range(n):
            if r != c and rows[r][c] != 0:
                f = rows[r][c] / rows[c][c]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[c])]
    pi = [rows[c][n] / rows[c][c] for c in range(n)]
    den = Fraction(dv.denominator(q))
    return sum(Fraction(dv.raw(l)[0](q)) / den * pi[l] for l in range(n))


def format_drift_table(rows, style: str = "pretty") -> str:
    """Rows of ``(p, value, err)`` as CSV or the aligned three-column table."""
    if style == "csv":
        lines = ["p,M_num,Delta_M"]
        lines += [f"{p},{v:.6E},{e:.2E}" for p, v, e in rows]
    else:
        lines = [f"{'p':>10}  {'M_num(p)':>12}  {'Delta M(p)':>10}"]
        lines += [f"{p!s:>10}  {v:>+12.2E}  {e:>10.1E}" for p, v, e in rows]
    return "\n".join(lines) + "\n"
