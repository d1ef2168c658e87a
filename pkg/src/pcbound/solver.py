"""Certified brackets for the root of the stationary mean drift.

Probabilities on a decimal grid are rarely doubles, so each grid point is
handled by directed rounding of ``q = 1 - p``: to certify ``M < 0`` at a
grid point we evaluate at the largest double ``q`` with ``1 - q >= p``, and
to certify ``M > 0`` at the smallest double ``q`` with ``1 - q <= p``.  The
drift is non-decreasing in ``p``, so each claim transfers to the grid point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal
from fractions import Fraction
from typing import Mapping

from .certified import CertifiedSign, ErrBounded, InconclusiveSolve, certified_sign, mean_drift_value
from .imc import MAX_ORDER


class BracketError(RuntimeError):
    """No certified sign change could be located."""


def grid_fraction(grid_step) -> Fraction:
    """Validate a grid step of the form ``10^-k`` and return it exactly."""
    step = Fraction(str(grid_step)) if isinstance(grid_step, float) else Fraction(grid_step)
    k = 0
    while Fraction(1, 10**k) > step and k < 16:
        k += 1
    if step != Fraction(1, 10**k) or k == 0:
        raise ValueError(f"grid step must be 10^-k with 1 <= k <= 16, got {grid_step}")
    return step


def q_toward(p: Fraction, p_side: str) -> float:
    """Double ``q`` near ``1 - p`` with ``1 - q`` on the requested side of ``p``.

    ``p_side="above"`` gives ``1 - q >= p``; ``"below"`` gives ``1 - q <= p``.
    """
    exact = 1 - Fraction(p)
    q = float(exact)
    if p_side == "above":
        if Fraction(q) > exact:
            q = math.nextafter(q, -math.inf)
    elif p_side == "below":
        if Fraction(q) < exact:
            q = math.nextafter(q, math.inf)
    else:
        raise ValueError(p_side)
    return q


@dataclass(frozen=True)
class SignEvidence:
    """Certified sign of ``M`` at an exact probability ``p``."""

    p: Fraction
    sign: CertifiedSign
    drift: ErrBounded | None
    q: float | None


class DriftOracle:
    """Caches certified drift evaluations for one order."""

    def __init__(self, order: int, backend=None):
        self.order = order
        self.backend = backend
        self._cache: dict[float, ErrBounded | None] = {}

    def at_q(self, q: float) -> ErrBounded | None:
        if q not in self._cache:
            try:
                self._cache[q] = mean_drift_value(self.order, q, backend=self.backend)
            except InconclusiveSolve:
                self._cache[q] = None
        return self._cache[q]

    def sign_at_q(self, q: float) -> SignEvidence:
        m = self.at_q(q)
        s = CertifiedSign.INCONCLUSIVE if m is None else certified_sign(m)
        return SignEvidence(1 - Fraction(q), s, m, q)

    def sign_at_p(self, p: Fraction) -> SignEvidence:
        """Certified sign at an exact probability, using monotonicity in ``p``."""
        p = Fraction(p)
        q_neg = q_toward(p, "above")
        ev = self.sign_at_q(q_neg)
        if ev.sign is CertifiedSign.NEGATIVE:
            return SignEvidence(p, ev.sign, ev.drift, q_neg)
        q_pos = q_toward(p, "below")
        ev2 = ev if q_pos == q_neg else self.sign_at_q(q_pos)
        if ev2.sign is CertifiedSign.POSITIVE:
            return SignEvidence(p, ev2.sign, ev2.drift, q_pos)
        return SignEvidence(p, CertifiedSign.INCONCLUSIVE, ev.drift, q_neg)


@dataclass(frozen=True)
class Enclosure:
    """``M(p_lo) < 0 < M(p_hi)`` certified, so the root lies in ``(p_lo, p_hi)``."""

    order: int
    p_lo: Fraction
    p_hi: Fraction
    drift_lo: ErrBounded
    drift_hi: ErrBounded
    grid_step: Fraction
    refined: int = 0
    stopped_inconclusive: bool = False

    def __post_init__(self):
        if not self.p_lo < self.p_hi:
            raise ValueError("empty enclosure")
        if certified_sign(self.drift_lo) is not CertifiedSign.NEGATIVE:
            raise ValueError("lower endpoint sign not certified negative")
        if certified_sign(self.drift_hi) is not CertifiedSign.POSITIVE:
            raise ValueError("upper endpoint sign not certified positive")

    @property
    def width(self) -> Fraction:
        return self.p_hi - self.p_lo

    def contains(self, p) -> bool:
        return self.p_lo < Fraction(p) < self.p_hi


def format_p(p: Fraction, digits: int, rounding=ROUND_FLOOR) -> str:
    """Decimal rendering of an exact probability, rounded down or up to ``digits`` places."""
    v = Fraction(p) * 10**digits
    n = math.floor(v) if rounding == ROUND_FLOOR else math.ceil(v)
    return f"{Decimal(n).scaleb(-digits):.{digits}f}"


def _err_str(err: float, digits: int) -> str:
    """Scientific notation rounded up, so the printed bound is still a bound."""
    if err == 0:
        return f"{0.0:.{digits}E}"
    d = Decimal(err)
    q = Decimal(1).scaleb(d.adjusted() - digits)
    return f"{float(d.quantize(q, rounding=ROUND_CEILING)):.{digits}E}"


def _grid_digits(step: Fraction) -> int:
    return len(str(step.denominator)) - 1


def bracket_root(order: int, grid_step=Fraction(1, 10**6), max_refine: int = 0,
                 lo_hint=None, backend=None) -> Enclosure:
    """Certified enclosure of the root of ``M`` at the given order.

    Works on grid indices ``p = j * grid_step``: bisection locates adjacent
    grid points of opposite certified sign, then up to ``max_refine`` extra
    bisections on double midpoints of ``q`` narrow the bracket while the
    signs stay certified.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in 0..{MAX_ORDER}")
    h = grid_fraction(grid_step)
    n_grid = h.denominator // h.numerator
    oracle = DriftOracle(order, backend)

    def sign(j):
        return oracle.sign_at_p(j * h)

    j_lo = n_grid // 2 if lo_hint is None else max(1, math.floor(Fraction(lo_hint) / h))
    ev_lo = sign(j_lo)
    while ev_lo.sign is not CertifiedSign.NEGATIVE:
        if j_lo <= 1:
            raise BracketError(f"order {order}: no certified negative drift on the grid")
        j_lo //= 2
        ev_lo = sign(j_lo)
    j_hi = max(j_lo + 1, (7 * n_grid) // 10)
    ev_hi = sign(j_hi)
    while ev_hi.sign is not CertifiedSign.POSITIVE:
        if ev_hi.sign is CertifiedSign.NEGATIVE:
            j_lo, ev_lo = j_hi, ev_hi
        if j_hi >= n_grid - 1:
            raise BracketError(f"order {order}: no certified positive drift on the grid")
        j_hi = (j_hi + n_grid) // 2
        ev_hi = sign(j_hi)

    stopped = False
    while j_hi - j_lo > 1:
        mid = (j_lo + j_hi) // 2
        ev = sign(mid)
        if ev.sign is CertifiedSign.NEGATIVE:
            j_lo, ev_lo = mid, ev
        elif ev.sign is CertifiedSign.POSITIVE:
            j_hi, ev_hi = mid, ev
        else:
            stopped = True
            break
    p_lo, p_hi = j_lo * h, j_hi * h
    m_lo, m_hi = ev_lo.drift, ev_hi.drift

    refined = 0
    if max_refine and not stopped:
        # Continue on the exact doubles that certified the grid endpoints.
        q_neg, q_pos = ev_lo.q, ev_hi.q
        for _ in range(max_refine):
            q_mid = (q_neg + q_pos) / 2
            if q_mid in (q_neg, q_pos):
                break
            ev = oracle.sign_at_q(q_mid)
            if ev.sign is CertifiedSign.NEGATIVE:
                q_neg, p_lo, m_lo = q_mid, 1 - Fraction(q_mid), ev.drift
            elif ev.sign is CertifiedSign.POSITIVE:
                q_pos, p_hi, m_hi = q_mid, 1 - Fraction(q_mid), ev.drift
            else:
                stopped = True
                break
            refined += 1
    return Enclosure(order, p_lo, p_hi, m_lo, m_hi, h, refined, stopped)


@dataclass
class BoundTable:
    """Enclosures for orders ``0..I``."""

    rows: list[Enclosure] = field(default_factory=list)

    def lower_bound(self) -> Fraction:
        return max(r.p_lo for r in self.rows)

    def is_monotone(self) -> bool:
        lows = [r.p_lo for r in self.rows]
        return all(a <= b for a, b in zip(lows, lows[1:]))

    def final_line(self) -> str:
        best = max(self.rows, key=lambda r: r.p_lo)
        return f"p_c ≥ {_p_str(best.p_lo, best, ROUND_FLOOR)}"

    def to_csv(self) -> str:
        lines = ["i,p_lo,p_hi,M(p_lo),ΔM(p_lo),M(p_hi),ΔM(p_hi)"]
        for r in self.rows:
            lines.append(
                f"{r.order},{_p_str(r.p_lo, r, ROUND_FLOOR)},{_p_str(r.p_hi, r, ROUND_CEILING)},"
                f"{r.drift_lo.value:.6E},{_err_str(r.drift_lo.err, 2)},{r.drift_hi.value:.6E},{_err_str(r.drift_hi.err, 2)}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        rows = [{
            "i": r.order,
            "p_lo": _p_str(r.p_lo, r, ROUND_FLOOR),
            "p_hi": _p_str(r.p_hi, r, ROUND_CEILING),
            "p_lo_exact": f"{r.p_lo.numerator}/{r.p_lo.denominator}",
            "p_hi_exact": f"{r.p_hi.numerator}/{r.p_hi.denominator}",
            "M_lo": r.drift_lo.value, "dM_lo": r.drift_lo.err,
            "M_hi": r.drift_hi.value, "dM_hi": r.drift_hi.err,
            "grid_step": str(r.grid_step), "refined": r.refined,
            "stopped_inconclusive": r.stopped_inconclusive,
        } for r in self.rows]
        return json.dumps({"rows": rows, "bound": self.final_line()}, indent=2, ensure_ascii=False) + "\n"

    def to_text(self) -> str:
        head = f"{'i':>3}  {'p_lo':>12}  {'p_hi':>12}  {'M(p_lo)':>12}  {'dM(p_lo)':>9}  {'M(p_hi)':>12}  {'dM(p_hi)':>9}"
        lines = [head]
        for r in self.rows:
            lines.append(
                f"{r.order:>3}  {_p_str(r.p_lo, r, ROUND_FLOOR):>12}  {_p_str(r.p_hi, r, ROUND_CEILING):>12}  "
                f"{r.drift_lo.value:>+12.3E}  {_err_str(r.drift_lo.err, 1):>9}  {r.drift_hi.value:>+12.3E}  {_err_str(r.drift_hi.err, 1):>9}"
            )
        lines.append(self.final_line())
        return "\n".join(lines) + "\n"


def _p_str(p: Fraction, enc: Enclosure, rounding) -> str:
    digits = _grid_digits(enc.grid_step)
    if (p / enc.grid_step).denominator == 1:
        return f"{Decimal(p.numerator) / Decimal(p.denominator):.{digits}f}"
    # Refined endpoints are binary fractions; round outward to 17 places.
    return format_p(p, 17, rounding)


def convergence_table(max_order: int, grid_step=Fraction(1, 10**6), max_refine: int = 0,
                      backend=None, progress=None) -> BoundTable:
    """Enclosures for every order up to ``max_order``.

    ``grid_step`` may be a single step or a mapping from order to step.
    Each order's search starts at the previous lower endpoint; that point is
    re-certified, not assumed.
    """
    table = BoundTable()
    hint = None
    for i in range(max_order + 1):
        step = grid_step[i] if isinstance(grid_step, Mapping) else grid_step
        enc = bracket_root(i, step, max_refine, lo_hint=hint, backend=backend)
        table.rows.append(enc)
        hint = enc.p_lo
        if progress:
            progress(enc)
    return table


def mixed_grids(max_order: int) -> dict[int, Fraction]:
    """``10^-6`` for orders up to 8 and ``10^-5`` from 9 on."""
    return {i: Fraction(1, 10**6) if i <= 8 else Fraction(1, 10**5) for i in range(max_order + 1)}
