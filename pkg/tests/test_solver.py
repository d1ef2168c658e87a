import csv
import io
import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pcbound.certified import CertifiedSign
from pcbound.solver import (BoundTable, DriftOracle, Enclosure, bracket_root, convergence_table, format_p,
                            grid_fraction, mixed_grids, q_toward)

probs = st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100), max_denominator=10**12)


@given(probs)
def test_q_toward_sides(p):
    above, below = q_toward(p, "above"), q_toward(p, "below")
    assert 1 - Fraction(above) >= p
    assert 1 - Fraction(below) <= p
    # neighbouring doubles: no double strictly between them
    assert below - above <= 2 * math.ulp(above)


def test_q_toward_rejects_unknown_side():
    with pytest.raises(ValueError):
        q_toward(Fraction(1, 2), "sideways")


@pytest.mark.parametrize("bad", [0, 1, 0.3, Fraction(2, 10**6), Fraction(1, 10**17), -1e-6])
def test_grid_validation(bad):
    with pytest.raises(ValueError):
        grid_fraction(bad)


def test_grid_accepts_powers_of_ten():
    assert grid_fraction(1e-6) == Fraction(1, 10**6)
    assert grid_fraction("0.001") == Fraction(1, 1000)


def test_order_zero_fine_grid_contains_closed_form():
    enc = bracket_root(0, Fraction(1, 10**9))
    assert enc.width <= Fraction(1, 10**9)
    root = 2 - math.sqrt(2)
    assert enc.p_lo <= Fraction(root) + Fraction(1, 10**15)
    assert Fraction(root) - Fraction(1, 10**15) <= enc.p_hi


def test_order_zero_refined():
    enc = bracket_root(0, Fraction(1, 10**6), max_refine=60)
    assert enc.refined > 20 and enc.width < Fraction(1, 10**12)
    assert abs(float(enc.p_lo) - (2 - math.sqrt(2))) < 1e-12


def test_order_two_enclosure():
    enc = bracket_root(2)
    assert enc.p_lo == Fraction(614187, 10**6) and enc.width == Fraction(1, 10**6)
    assert enc.drift_lo.hi < 0 < enc.drift_hi.lo
    assert bracket_root(2, lo_hint=Fraction(6, 10)).p_lo == enc.p_lo
    assert bracket_root(2, lo_hint=Fraction(7, 10)).p_lo == enc.p_lo


def test_enclosure_rejects_uncertified_signs():
    enc = bracket_root(1)
    with pytest.raises(ValueError):
        Enclosure(1, enc.p_lo, enc.p_hi, enc.drift_hi, enc.drift_lo, enc.grid_step)
    with pytest.raises(ValueError):
        Enclosure(1, enc.p_hi, enc.p_lo, enc.drift_lo, enc.drift_hi, enc.grid_step)


def test_sign_evidence_is_transferable():
    oracle = DriftOracle(1)
    p = Fraction(604233, 10**6)
    ev = oracle.sign_at_p(p)
    assert ev.sign is CertifiedSign.NEGATIVE and 1 - Fraction(ev.q) >= p
    ev = oracle.sign_at_p(p + Fraction(1, 10**6))
    assert ev.sign is CertifiedSign.POSITIVE and 1 - Fraction(ev.q) <= p + Fraction(1, 10**6)


@pytest.fixture(scope="module")
def table():
    return convergence_table(4)


def test_table_monotone_and_final_line(table):
    assert table.is_monotone()
    assert [r.order for r in table.rows] == [0, 1, 2, 3, 4]
    assert table.lower_bound() == Fraction(624211, 10**6)
    assert table.final_line() == "p_c ≥ 0.624211"


def test_table_csv(table):
    rows = list(csv.reader(io.StringIO(table.to_csv())))
    assert rows[0] == ["i", "p_lo", "p_hi", "M(p_lo)", "ΔM(p_lo)", "M(p_hi)", "ΔM(p_hi)"]
    assert rows[2][:3] == ["1", "0.604233", "0.604234"]
    for r in rows[1:]:
        assert float(r[3]) + float(r[4]) < 0 < float(r[5]) - float(r[6])


def test_table_json_and_text(table):
    data = json.loads(table.to_json())
    assert data["bound"] == table.final_line()
    assert Fraction(data["rows"][3]["p_lo_exact"]) == table.rows[3].p_lo
    text = table.to_text().splitlines()
    assert text[-1] == table.final_line() and len(text) == 7


def test_format_p_rounds_outward():
    x = Fraction(1, 3)
    assert format_p(x, 4) == "0.3333"
    assert format_p(x, 4, rounding="ROUND_CEILING") == "0.3334"


def test_refined_rows_render_outward():
    t = BoundTable([bracket_root(1, max_refine=10)])
    row = next(csv.reader(io.StringIO(t.to_csv().splitlines()[1])))
    r = t.rows[0]
    assert Fraction(row[1]) <= r.p_lo and Fraction(row[2]) >= r.p_hi


def test_mixed_grids():
    g = mixed_grids(10)
    assert g[8] == Fraction(1, 10**6) and g[9] == g[10] == Fraction(1, 10**5)


@pytest.mark.slow
def test_idempotent():
    assert bracket_root(3) == bracket_root(3)


@given(st.floats(min_value=1e-300, max_value=1.0))
def test_printed_error_bounds_round_up(err):
    from pcbound.solver import _err_str
    assert float(_err_str(err, 2)) >= err
    assert float(_err_str(err, 1)) >= err
