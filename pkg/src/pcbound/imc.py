"""Exact one-step law, transition matrix and drift vector of the induced chain.

State of the window chain of order ``i``: the edge site is occupied, the
bits ``b_1..b_i`` give the occupancy at ``edge - 2j``, and every site deeper
than ``edge - 2i`` is occupied by force.  One time step later each candidate
site ``edge + 1 - 2k`` is fed by two bonds that no other site uses, so the
new occupancies are independent with probabilities

    ``theta = new_site_poly(left neighbour, right neighbour)``.

The new edge is the first occupied candidate; the new window is read off the
``i`` candidates below it.  For ``k >= i + 2`` every factor is the
forced-region value ``1 - q^2``, which makes the tail geometric with ratio
``q^2`` and lets it be summed in closed form.

Coefficient work is done on ``int64`` arrays.  Every coefficient is bounded
by ``(i + 3) * 2**(2i + 4)`` in absolute value (products of at most
``2i + 4`` factors of L1 norm at most 2), which is checked against the
``int64`` range before construction, so the arithmetic is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .poly import IntPoly, ONE_MINUS_Q2, RationalFn, format_poly

MAX_ORDER = 10

# Site codes: 0 never occupied, 1 exactly one feeding neighbour (prob p = 1-q),
# 2 both neighbours occupied (prob 1-q^2).
_THETA = np.array([[0, 0, 0], [1, -1, 0], [1, 0, -1]], dtype=np.int64)
_COMP = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.int64)


class ConsistencyError(RuntimeError):
    """An internal algebraic invariant failed (indicates a construction bug)."""


def label_to_bits(label: int, order: int) -> tuple[int, ...]:
    """Window bits ``(b_1, ..., b_i)`` for a label; ``b_1`` is the most significant."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    if not 0 <= label < (1 << order):
        raise ValueError(f"label {label} out of range for order {order}")
    return tuple((label >> (order - j)) & 1 for j in range(1, order + 1))


def bits_to_label(bits) -> int:
    label = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError("bits must be 0 or 1")
        label = (label << 1) | b
    return label


def new_site_poly(a: int, b: int) -> IntPoly:
    """Occupation probability of a site whose left/right feeders have occupancy a/b."""
    return IntPoly(_THETA[_site_code(a, b)])


def _site_code(a: int, b: int) -> int:
    if a not in (0, 1) or b not in (0, 1):
        raise ValueError("neighbour occupancies must be 0 or 1")
    return a + b


def site_codes(order: int, label: int) -> list[int]:
    """Codes of candidate sites ``k = 0..i+1`` below (and including) ``edge + 1``."""
    bits = label_to_bits(label, order)
    occ = [1, *bits]  # occupancy at edge - 2j, j = 0..i
    codes = [_site_code(1, 0)]
    for k in range(1, order + 2):
        left = occ[k] if k <= order else 1
        codes.append(_site_code(left, occ[k - 1]))
    return codes


def _degree_bound(order: int) -> int:
    return 4 * order + 7


def _check_range(order: int) -> None:
    if order < 0:
        raise ValueError("order must be nonnegative")
    if (order + 3) * 2 ** (2 * order + 4) >= 2**62:
        raise OverflowError(f"order {order} exceeds the exact int64 coefficient range")


def _mul_small(arr: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Multiply polynomials stored along the last axis by a degree <= 2 polynomial."""
    out = arr * f[0]
    if f[1]:
        out[..., 1:] += arr[..., :-1] * f[1]
    if f[2]:
        out[..., 2:] += arr[..., :-2] * f[2]
    return out


def _window_products(start: np.ndarray, codes: list[int]) -> np.ndarray:
    """All ``2**len(codes)`` products ``start * prod_j (theta_j or 1 - theta_j)``.

    Row index is the label of the bit pattern, first code most significant.
    """
    arr = start[None, :]
    for c in codes:
        nxt = np.empty((2 * arr.shape[0], arr.shape[1]), dtype=np.int64)
        nxt[0::2] = _mul_small(arr, _COMP[c])
        nxt[1::2] = _mul_small(arr, _THETA[c])
        arr = nxt
    return arr


def _prefix_survivals(codes: list[int], depth: int, width: int) -> np.ndarray:
    """``A_k = prod_{k' < k} (1 - theta_k')`` for ``k = 0..depth``."""
    out = np.zeros((depth + 1, width), dtype=np.int64)
    out[0, 0] = 1
    for k in range(depth):
        out[k + 1] = _mul_small(out[k], _COMP[codes[k] if k < len(codes) else 2])
    return out


def _law_arrays(order: int, label: int, width: int):
    """Head tensor ``(i + 2, 2**i, width)`` and tail coefficients ``(2**i, width)``."""
    codes = site_codes(order, label)
    surv = _prefix_survivals(codes, order + 2, width)
    n_states = 1 << order
    head = np.zeros((order + 2, n_states, width), dtype=np.int64)
    for k in range(order + 2):
        if codes[k] == 0:
            continue
        base = _mul_small(surv[k], _THETA[codes[k]])
        window = [codes[k + j] if k + j <= order + 1 else 2 for j in range(1, order + 1)]
        head[k] = _window_products(base, window)
    tail_start = _mul_small(surv[order + 2], _THETA[2])
    tail = _window_products(tail_start, [2] * order)
    return codes, surv, head, tail


def _div_one_minus_q2(arr: np.ndarray) -> np.ndarray:
    """Exact division of coefficient arrays by ``1 - q^2`` (zero remainder enforced)."""
    out = np.zeros_like(arr)
    w = arr.shape[-1]
    for k in range(w):
        out[..., k] = arr[..., k] + (out[..., k - 2] if k >= 2 else 0)
    if np.any(out[..., w - 2:]):
        raise ConsistencyError("nonzero remainder dividing by 1-q^2")
    return out


def _to_intpoly(row) -> IntPoly:
    return IntPoly(int(c) for c in row)


@dataclass(frozen=True)
class JumpLaw:
    """Exact law of (jump index k, target label m) from one source label.

    ``head`` lists ``(k, m, P)`` for ``k <= i + 1`` with ``P`` not identically
    zero.  For ``k >= i + 2`` the probability is ``tail[m] * q^(2(k - i - 2))``.
    The jump of the edge is ``1 - 2k``.
    """

    order: int
    label: int
    head: list
    tail: list

    def prob(self, k: int, m: int) -> IntPoly:
        if k < 0 or not 0 <= m < (1 << self.order):
            raise ValueError("jump index or target label out of range")
        if k <= self.order + 1:
            for kk, mm, poly in self.head:
                if kk == k and mm == m:
                    return poly
            return IntPoly()
        return self.tail[m] * IntPoly.monomial(2 * (k - self.order - 2))

    def total(self) -> RationalFn:
        """Sum of all probabilities, with the geometric tail summed exactly."""
        head = sum((poly for _, _, poly in self.head), IntPoly())
        tail = sum(self.tail, IntPoly())
        return RationalFn(head * ONE_MINUS_Q2 + tail, ONE_MINUS_Q2)

    def drift(self) -> RationalFn:
        first = self.order + 2
        head = sum(((1 - 2 * k) * poly for k, _, poly in self.head), IntPoly())
        tail = sum(self.tail, IntPoly())
        a = 1 - 2 * first
        num = head * ONE_MINUS_Q2 * ONE_MINUS_Q2 + tail * (a * ONE_MINUS_Q2 - IntPoly([0, 0, 2]))
        return RationalFn(num, ONE_MINUS_Q2 * ONE_MINUS_Q2)

    def evaluate(self, q: float, k_max: int) -> np.ndarray:
        """Float table ``P[k, m]`` for ``k < k_max`` (monitoring and tests only)."""
        n = 1 << self.order
        out = np.zeros((k_max, n))
        for k, m, poly in self.head:
            if k < k_max:
                out[k, m] = float(poly(q))
        for k in range(self.order + 2, k_max):
            ratio = q ** (2 * (k - self.order - 2))
            for m in range(n):
                out[k, m] = float(self.tail[m](q)) * ratio
        return out


def one_step_law(order: int, label: int) -> JumpLaw:
    _check_range(order)
    width = _degree_bound(order)
    _, _, head, tail = _law_arrays(order, label, width)
    entries = []
    for k in range(order + 2):
        for m in range(1 << order):
            if head[k, m].any():
                entries.append((k, m, _to_intpoly(head[k, m])))
    return JumpLaw(order, label, entries, [_to_intpoly(r) for r in tail])


@dataclass(frozen=True)
class TransitionMatrix:
    """``coeffs[l, m, :]`` holds the polynomial ``q_lm`` (lowest power first)."""

    order: int
    coeffs: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return 1 << self.order

    def entry(self, l: int, m: int) -> IntPoly:
        return _to_intpoly(self.coeffs[l, m])

    def rows(self):
        return [[self.entry(l, m) for m in range(self.size)] for l in range(self.size)]


@dataclass(frozen=True)
class DriftVector:
    """``M_l = numerators[l] / denominator`` for every source label."""

    order: int
    numerators: np.ndarray = field(repr=False)
    denominator: IntPoly

    def entry(self, l: int) -> RationalFn:
        return RationalFn(_to_intpoly(self.numerators[l]), self.denominator)

    def raw(self, l: int) -> tuple[IntPoly, IntPoly]:
        return _to_intpoly(self.numerators[l]), self.denominator


def _build(order: int) -> tuple[TransitionMatrix, DriftVector]:
    _check_range(order)
    width = _degree_bound(order)
    n = 1 << order
    mat = np.zeros((n, n, width), dtype=np.int64)
    drift_num = np.zeros((n, width), dtype=np.int64)
    den2 = np.array([1, 0, -2, 0, 1], dtype=np.int64)  # (1 - q^2)^2
    a = 1 - 2 * (order + 2)
    tail_factor = np.array([a, 0, -a - 2], dtype=np.int64)  # a(1 - q^2) - 2q^2
    for l in range(n):
        codes, surv, head, tail = _law_arrays(order, l, width)
        mat[l] = head.sum(axis=0) + _div_one_minus_q2(tail)
        head_m = np.zeros(width, dtype=np.int64)
        for k in range(order + 2):
            if codes[k]:
                head_m += (1 - 2 * k) * _mul_small(surv[k], _THETA[codes[k]])
        num = np.convolve(head_m, den2)[:width] + np.convolve(tail.sum(axis=0), tail_factor)[:width]
        drift_num[l] = num
    row_sums = mat.sum(axis=1)
    expected = np.zeros(width, dtype=np.int64)
    expected[0] = 1
    if not np.array_equal(row_sums, np.broadcast_to(expected, row_sums.shape)):
        raise ConsistencyError(f"order {order}: transition rows do not sum to 1")
    # num / (1 - q^2)^2 -> num' / (1 - q^2); the tail term carries the factor.
    drift_num = _div_one_minus_q2(drift_num)
    return TransitionMatrix(order, mat), DriftVector(order, drift_num, ONE_MINUS_Q2)


@lru_cache(maxsize=4)
def build_chain(order: int, max_order: int = MAX_ORDER) -> tuple[TransitionMatrix, DriftVector]:
    """Transition matrix and drift vector for one order (cached)."""
    if order > max_order:
        raise ValueError(f"order {order} exceeds configured maximum {max_order}")
    return _build(order)


def transition_matrix(order: int, max_order: int = MAX_ORDER) -> TransitionMatrix:
    return build_chain(order, max_order)[0]


def drift_vector(order: int, max_order: int = MAX_ORDER) -> DriftVector:
    return build_chain(order, max_order)[1]


def symbolic_mean_drift(order: int) -> RationalFn:
    """Exact stationary mean drift as a reduced rational function (orders <= 2)."""
    if order > 2:
        raise ValueError("exact symbolic stationary solve is limited to order <= 2")
    pi = symbolic_stationary(order)
    dv = drift_vector(order)
    total = RationalFn(0)
    for l in range(1 << order):
        total = total + dv.entry(l) * pi[l]
    return total


def symbolic_stationary(order: int) -> list[RationalFn]:
    """Stationary measure by Gaussian elimination over the rational functions in q."""
    mat = transition_matrix(order)
    n = mat.size
    # Unknowns pi_0..pi_{n-1}; equations sum_l pi_l (q_lm - delta_lm) = 0 for
    # m < n - 1, plus normalization.
    rows = []
    for m in range(n - 1):
        rows.append([RationalFn(mat.entry(l, m) - (1 if l == m else 0)) for l in range(n)] + [RationalFn(0)])
    rows.append([RationalFn(1)] * n + [RationalFn(1)])
    for c in range(n):
        piv = next(r for r in range(c, n) if not rows[r][c].is_zero())
        rows[c], rows[piv] = rows[piv], rows[c]
        for r in range(n):
            if r != c and not rows[r][c].is_zero():
                f = rows[r][c] / rows[c][c]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[c])]
    return [rows[c][n] / rows[c][c] for c in range(n)]


def to_json(order: int) -> str:
    mat, dv = build_chain(order)
    payload = {
        "order": order,
        "variable": "q",
        "coefficient_order": "lowest power first",
        "matrix": [[list(mat.entry(l, m).coeffs) for m in range(mat.size)] for l in range(mat.size)],
        "drift": {
            "numerators": [list(dv.raw(l)[0].coeffs) for l in range(mat.size)],
            "denominator": list(dv.denominator.coeffs),
        },
    }
    return json.dumps(payload, indent=1)


def pretty(order: int) -> str:
    mat, dv = build_chain(order)
    lines = [f"transition matrix, order {order} (rows: source label l, columns: target label m)"]
    for l in range(mat.size):
        lines.append(f"  l={l}: " + "  |  ".join(str(mat.entry(l, m)) for m in range(mat.size)))
    lines.append(f"drift vector M_l = numerator / ({dv.denominator})")
    for l in range(mat.size):
        lines.append(f"  l={l}: {format_poly(dv.raw(l)[0].coeffs)}")
    return "\n".join(lines) + "\n"
