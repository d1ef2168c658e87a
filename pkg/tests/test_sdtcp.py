import math

import numpy as np
import pytest

from pcbound import imc
from pcbound.bond_field import UniformBondField
from pcbound.sdtcp import (DiedOut, InfectionConfig, config_leq, coupled_paths, coupling_violations, forced_reinfections,
                           imc_readout, initial_config_canonical, initial_config_from_label,
                           initial_config_truncated, batch_disagreements, one_step_batch, run_coupled,
                           run_trajectory, step)


def test_canonical_configuration():
    c = initial_config_canonical()
    assert (c.occupancy(0), c.occupancy(2), c.occupancy(-2)) == (1, 0, 1)
    assert c.edge == 0
    assert imc_readout(c, 2).label == 3


def test_from_label():
    c = initial_config_from_label(2, 0)
    assert c.sites(-8, 0) == [1, 1, 0, 0, 1]
    c = initial_config_from_label(2, 3)
    assert c.occupancy(-2) == 1 and c.occupancy(-4) == 1
    with pytest.raises(ValueError):
        initial_config_from_label(1, 2)
    for label in range(8):
        assert imc_readout(initial_config_from_label(3, label, time=4, edge=6), 3).label == label


def test_readout_examples():
    c = InfectionConfig(0, -4, (1, 0, 1), 0)
    w = imc_readout(c, 2)
    assert w.edge == 0 and w.bits == (0, 1) and w.label == 1
    assert imc_readout(initial_config_from_label(3, 5), 0).label == 0
    with pytest.raises(DiedOut):
        imc_readout(InfectionConfig(0, 0, (), 0), 1)


def test_p_one_moves_right_every_step():
    for order in (0, 2, None):
        rec = run_trajectory(order, 1.0, 3, 30)
        assert np.array_equal(rec.edges, np.arange(1, 31))


@pytest.mark.parametrize("order", [0, 1, 3])
def test_forced_region_and_jump_bound(order):
    field = UniformBondField(11)
    cfg = initial_config_canonical()
    for _ in range(300):
        nxt = step(cfg, field, 0.6, order)
        assert nxt.edge - cfg.edge <= 1
        e = nxt.edge
        assert all(nxt.occupancy(m) == 1 for m in range(e - 2 * order - 40, e - 2 * order, 2))
        assert all(nxt.occupancy(m) == 0 for m in range(e + 2, e + 20, 2))
        cfg = nxt


def test_unforced_process_can_die():
    field = UniformBondField(0)
    with pytest.raises(DiedOut):
        cfg = initial_config_truncated(0)
        for _ in range(200):
            cfg = step(cfg, field, 0.2, None)
    with pytest.raises(ValueError):
        step(initial_config_canonical(), field, 0.5, None)


def test_markov_property_of_readout():
    """Stepping a trajectory's config or the config rebuilt from its readout gives the same window."""
    order = 3
    field = UniformBondField(5)
    cfg = initial_config_canonical()
    for _ in range(200):
        w = imc_readout(cfg, order)
        twin = initial_config_from_label(order, w.label, time=cfg.time, edge=w.edge)
        a, b = step(cfg, field, 0.62, order), step(twin, field, 0.62, order)
        assert imc_readout(a, order) == imc_readout(b, order)
        cfg = a


def _exact_row(order, label, q, k_cap):
    law = imc.one_step_law(order, label)
    table = law.evaluate(q, k_cap)
    # geometric tail summed from k_cap on, for each target
    ratio = q ** (2 * (k_cap - order - 2)) / (1 - q * q)
    rest = np.array([float(t(q)) * ratio for t in law.tail])
    return np.vstack([table, rest[None, :]])


def _within_4_sigma(counts, probs):
    n = counts.sum()
    expected = n * probs
    small = expected < 5
    obs = np.append(counts[~small], counts[small].sum())
    exp = np.append(expected[~small], expected[small].sum())
    var = exp * (1 - exp / n)
    return np.all(np.abs(obs - exp) <= 4 * np.sqrt(np.maximum(var, 1e-12)) + 1e-9)


def test_order_zero_jump_law():
    q = 0.42
    counts = one_step_batch(0, 0, 1 - q, 200_000, 3, 8)
    probs = np.array([1 - q] + [q ** (2 * k - 1) * (1 - q * q) for k in range(1, 8)])
    probs = np.append(probs, 1 - probs.sum())
    assert _within_4_sigma(counts[:, 0], probs)


@pytest.mark.parametrize("order, label", [(1, 0), (1, 1), (2, 2)])
def test_bond_level_frequencies_match_exact_law(order, label):
    q, k_cap = 0.5, order + 6
    counts = one_step_batch(order, label, 1 - q, 100_000, 21, k_cap)
    assert _within_4_sigma(counts.ravel(), _exact_row(order, label, q, k_cap).ravel())


@pytest.mark.parametrize("order", [0, 2, 3])
def test_vectorized_batch_agrees_with_step(order):
    for label in range(1 << order):
        for p in (0.1, 0.6, 0.95):
            assert batch_disagreements(order, label, p, range(300), 9) == 0


def test_coupling_in_order():
    c = initial_config_canonical()
    assert coupling_violations((3, 0.6, c), (1, 0.6, c), range(20), 100) == []
    # the reverse direction must fail somewhere, or the check has no teeth
    assert coupling_violations((1, 0.6, c), (3, 0.6, c), range(5), 100)


def test_coupling_in_p():
    c = initial_config_canonical()
    assert coupling_violations((2, 0.5, c), (2, 0.7, c), range(20), 100) == []


def test_coupling_in_initial_condition():
    lo, hi = initial_config_from_label(2, 0), initial_config_from_label(2, 3)
    assert coupling_violations((2, 0.6, lo), (2, 0.6, hi), range(20), 100) == []


def test_unforced_is_dominated_by_forced():
    assert coupling_violations((None, 0.6, initial_config_truncated(250)), (3, 0.6, initial_config_canonical()),
                               range(10), 100) == []


@pytest.mark.parametrize("order", [1, 3])
def test_agreement_with_unforced_process_near_the_front(order):
    """Sites within 2i of n agree between the forced and unforced processes."""
    steps = 60
    for seed in range(15):
        forced, free = coupled_paths([order, None], [0.64, 0.64],
                                     [initial_config_canonical(), initial_config_truncated(2 * order + 2)],
                                     seed, steps)
        for n, (a, b) in enumerate(zip(forced, free)):
            lo = n - 2 * order
            assert a.sites(lo, n) == b.sites(lo, n), (seed, n)


def test_run_coupled_shares_the_field():
    recs = run_coupled([2, 2], [0.6], [None], 4, 50)
    assert np.array_equal(recs[0].edges, recs[1].edges)
    with pytest.raises(ValueError):
        run_coupled([1, 2], [0.5, 0.6, 0.7], [None], 1, 5)


def test_trajectory_record_and_csv():
    rec = run_trajectory(2, 0.6, 8, 25)
    assert rec.visits.sum() == rec.n_steps
    lines = rec.to_csv().splitlines()
    assert lines[0] == "n,edge,edge_over_n,label,forced"
    n, e, r, lab, forced = lines[5].split(",")
    assert int(n) == 5 and float(r) == int(e) / 5 and 0 <= int(lab) < 4


def test_config_leq():
    a = initial_config_from_label(2, 1)
    b = initial_config_from_label(2, 3)
    assert config_leq(a, b) and not config_leq(b, a)


@pytest.mark.slow
def test_speed_law_order_zero():
    q = 0.42
    rec = run_trajectory(0, 1 - q, 12345, 10**6)
    exact = (1 - 2 * q - q * q) / (1 - q * q)
    inc = np.diff(np.concatenate([[0], rec.edges]))
    batches = inc.reshape(1000, -1).mean(axis=1)
    se = batches.std(ddof=1) / math.sqrt(len(batches))
    assert abs(rec.edges[-1] / 10**6 - exact) <= 3 * se


def test_visit_fractions_order_one():
    q = 0.4
    rec = run_trajectory(1, 1 - q, 77, 40_000)
    den = 1 - q + q**2 + q**3 - q**4
    pi0 = q**2 / den
    labels = np.concatenate([[1], rec.labels[:-1]])
    ind = (labels == 0).astype(float).reshape(200, -1).mean(axis=1)
    se = ind.std(ddof=1) / math.sqrt(len(ind))
    assert abs(rec.visits[0] / rec.n_steps - pi0) <= 4 * se


def test_forced_reinfection_counts():
    field = UniformBondField(3)
    cfg = initial_config_canonical()
    total = 0
    for _ in range(300):
        nxt = step(cfg, field, 0.6, 2)
        f = forced_reinfections(cfg, nxt, field, 0.6, 2)
        # each counted site lies in the new forced region and is occupied there
        band = range(cfg.edge - 5, nxt.edge - 5, 2)
        assert 0 <= f <= len(band)
        assert all(nxt.occupancy(y) == 1 for y in band)
        total += f
        cfg = nxt
    assert total > 0
    assert run_trajectory(2, 1.0, 1, 20).forced.sum() == 0
    assert run_trajectory(None, 0.7, 1, 20).forced.sum() == 0
