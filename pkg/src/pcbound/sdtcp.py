"""Reference simulator of the strengthened contact process and its right edge.

A configuration at time ``n`` lives on sites ``m`` with ``n + m`` even.  It is
stored as an explicit run of bits on ``lo, lo + 2, ..., hi`` plus a fill bit
for everything left of ``lo``; everything right of ``hi`` is empty.

One step of order ``i``: a site becomes occupied when an occupied neighbour
at the previous time transmits through an open bond, or when it lies more
than ``2i`` to the left of the new right edge (forced occupation).  Order
``None`` drops the forcing; such runs need finite support and can die out.

This module favours clarity over speed; ``mc_edge`` has the fast chain.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bond_field import CoordinateError, Direction, UniformBondField
from .imc import bits_to_label, label_to_bits

# Per-label visit counts are kept only up to this order.
MAX_VISIT_ORDER = 20

LEFT = int(Direction.LEFT)
RIGHT = int(Direction.RIGHT)


class DiedOut(RuntimeError):
    """The process has no occupied site left."""

    def __init__(self, config: "InfectionConfig"):
        super().__init__(f"process died out at time {config.time}")
        self.config = config


@dataclass(frozen=True)
class InfectionConfig:
    time: int
    lo: int
    occ: tuple
    left_fill: int = 1

    def __post_init__(self):
        if (self.time + self.lo) % 2:
            raise CoordinateError(f"site {self.lo} has the wrong parity at time {self.time}")
        occ = tuple(int(b) for b in self.occ)
        lo = self.lo
        # Normalize: drop trailing zeros, and leading entries equal to the fill.
        end = len(occ)
        while end and occ[end - 1] == 0:
            end -= 1
        start = 0
        while start < end - 1 and occ[start] == self.left_fill:
            start += 1
        if end == 0:
            start = 0
        object.__setattr__(self, "occ", occ[start:end])
        object.__setattr__(self, "lo", lo + 2 * start)

    @property
    def hi(self) -> int:
        return self.lo + 2 * (len(self.occ) - 1)

    def is_empty(self) -> bool:
        return not self.left_fill and not any(self.occ)

    def occupancy(self, m: int) -> int:
        if (self.time + m) % 2:
            raise CoordinateError(f"site {m} has the wrong parity at time {self.time}")
        if m < self.lo:
            return self.left_fill
        k = (m - self.lo) // 2
        return self.occ[k] if k < len(self.occ) else 0

    @property
    def edge(self) -> int:
        """Rightmost occupied site."""
        if self.occ:
            return self.hi
        if self.left_fill:
            return self.lo - 2
        raise DiedOut(self)

    def sites(self, lo: int, hi: int) -> list[int]:
        """Occupancies on ``lo..hi`` (both of the right parity)."""
        return [self.occupancy(m) for m in range(lo, hi + 1, 2)]


def initial_config_canonical(time: int = 0) -> InfectionConfig:
    """Every site at or left of the origin occupied."""
    return InfectionConfig(time, 0 if time % 2 == 0 else -1, (1,), 1)


def initial_config_truncated(depth: int, time: int = 0) -> InfectionConfig:
    """Sites ``-2*depth..0`` occupied, nothing else (finite support)."""
    top = 0 if time % 2 == 0 else -1
    return InfectionConfig(time, top - 2 * depth, (1,) * (depth + 1), 0)


def initial_config_from_label(order: int, label: int, time: int = 0, edge: int = 0) -> InfectionConfig:
    """Edge at ``edge``, window bits from ``label``, everything deeper occupied."""
    bits = label_to_bits(label, order)
    occ = [1] + list(reversed(bits)) + [1]
    return InfectionConfig(time, edge - 2 * order - 2, tuple(occ), 1)


@dataclass(frozen=True)
class WindowState:
    order: int
    edge: int
    bits: tuple

    @property
    def label(self) -> int:
        return bits_to_label(self.bits)


def imc_readout(config: InfectionConfig, order: int) -> WindowState:
    e = config.edge
    return WindowState(order, e, tuple(config.occupancy(e - 2 * j) for j in range(1, order + 1)))


def _transmits(config: InfectionConfig, field: UniformBondField, p: float, x: int) -> int:
    n = config.time
    if config.occupancy(x - 1) and field.uniform(n, x - 1, RIGHT) <= p:
        return 1
    if config.occupancy(x + 1) and field.uniform(n, x + 1, LEFT) <= p:
        return 1
    return 0


def step(config: InfectionConfig, field: UniformBondField, p: float, order: int | None) -> InfectionConfig:
    """Advance one time unit; ``order=None`` is the unforced process."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    n1 = config.time + 1
    if order is None:
        if config.left_fill:
            raise ValueError("the unforced process needs a configuration with finite support")
        occ = [_transmits(config, field, p, x) for x in range(config.lo - 1, config.hi + 2, 2)]
        new = InfectionConfig(n1, config.lo - 1, tuple(occ), 0)
        if new.is_empty():
            raise DiedOut(new)
        return new
    if order < 0:
        raise ValueError("order must be nonnegative")
    if not config.left_fill:
        raise ValueError("a forced process needs an occupied left fill")
    if p <= 0.0:
        raise ValueError("p must be positive for the forced process")
    # New edge: scan left from the farthest reachable site.  Below the stored
    # run every site is occupied, so the scan ends after a geometric number
    # of extra sites.
    x = config.hi + 1
    while not _transmits(config, field, p, x):
        x -= 2
    window = [_transmits(config, field, p, y) for y in range(x - 2 * order, x, 2)]
    return InfectionConfig(n1, x - 2 * order - 2, (1, *window, 1), 1)


def forced_reinfections(before: InfectionConfig, after: InfectionConfig, field: UniformBondField,
                        p: float, order: int | None) -> int:
    """Sites the forcing rule switched on during one step.

    Counted between the old and new forced boundaries ``edge - 2i - 2``, over
    sites with a parent above the old boundary.  Deeper sites have both
    parents in the occupied region and are not counted.  Zero for the
    unforced process.
    """
    if order is None:
        return 0
    b_old = before.edge - 2 * order - 2
    b_new = after.edge - 2 * order - 2
    return sum(not _transmits(before, field, p, y) for y in range(b_old + 1, b_new + 1, 2))


def config_leq(a: InfectionConfig, b: InfectionConfig) -> bool:
    """Pointwise ``a <= b`` at equal times."""
    if a.time != b.time:
        raise ValueError("configurations at different times")
    if a.left_fill > b.left_fill:
        return False
    lo = min(a.lo, b.lo)
    hi = max(a.hi, b.hi)
    return all(x <= y for x, y in zip(a.sites(lo, hi), b.sites(lo, hi)))


@dataclass
class TrajectoryRecord:
    order: int | None
    p: float
    seed: int
    edges: np.ndarray
    labels: np.ndarray
    visits: np.ndarray
    configs: list = field(default_factory=list, repr=False)
    forced: np.ndarray | None = None

    @property
    def n_steps(self) -> int:
        return len(self.edges)

    def speed(self) -> np.ndarray:
        return self.edges / np.arange(1, len(self.edges) + 1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "edge", "edge_over_n", "label", "forced"])
        forced = self.forced if self.forced is not None else np.zeros_like(self.edges)
        for n, (e, lab, f) in enumerate(zip(self.edges, self.labels, forced), start=1):
            w.writerow([n, int(e), repr(float(e) / n), int(lab), int(f)])
        return buf.getvalue()


def run_trajectory(order: int | None, p: float, seed: int, n_steps: int,
                   initial: InfectionConfig | None = None, keep_configs: bool = False) -> TrajectoryRecord:
    """Simulate ``n_steps`` steps from ``initial`` (canonical by default).

    Labels are those of the window after each step (``-1`` for the unforced
    process and for large orders); ``visits`` counts window labels before each step, for orders
    up to ``MAX_VISIT_ORDER``.  ``forced`` holds the per-step count of
    ``forced_reinfections``.
    """
    return run_coupled([order], [p], [initial], seed, n_steps, keep_configs)[0]


def run_coupled(orders: Sequence, ps: Sequence[float], initials: Sequence, seed: int,
                n_steps: int, keep_configs: bool = False) -> list[TrajectoryRecord]:
    """Runs that share one bond field; list arguments broadcast from length one."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    k = max(len(orders), len(ps), len(initials))

    def expand(xs):
        xs = list(xs)
        if len(xs) == 1:
            return xs * k
        if len(xs) != k:
            raise ValueError("argument lists must have equal lengths or length one")
        return xs

    orders, ps, initials = expand(orders), expand(ps), expand(initials)
    fieldv = UniformBondField(seed)
    out = []
    for order, p, init in zip(orders, ps, initials):
        if init is None:
            init = initial_config_canonical() if order is not None else initial_config_truncated(2 * n_steps + 2)
        cfg = init
        e0 = cfg.edge
        edges = np.zeros(n_steps, dtype=np.int64)
        labels = np.full(n_steps, -1, dtype=np.int64)
        forced = np.zeros(n_steps, dtype=np.int64)
        track = order is not None and order <= MAX_VISIT_ORDER
        visits = np.zeros(1 << order if track else 0, dtype=np.int64)
        configs = [cfg] if keep_configs else []
        for t in range(n_steps):
            if track:
                visits[imc_readout(cfg, order).label] += 1
            prev, cfg = cfg, step(cfg, fieldv, p, order)
            forced[t] = forced_reinfections(prev, cfg, fieldv, p, order)
            edges[t] = cfg.edge - e0
            if track:
                labels[t] = imc_readout(cfg, order).label
            if keep_configs:
                configs.append(cfg)
        out.append(TrajectoryRecord(order, p, seed, edges, labels, visits, configs, forced))
    return out


def one_step_samples(order: int, label: int, p: float, samples, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Bond-level one-step transitions from a fixed window state.

    Sample ``s`` starts at time ``2s`` with its edge at the origin, so each
    sample reads its own bonds from one field.  Returns arrays ``(k, target)``
    where the edge moves by ``1 - 2k``.  Samples whose new edge lies below the
    vectorized candidates are finished with ``step``.
    """
    fieldv = UniformBondField(seed)
    samples = np.asarray(samples, dtype=np.int64)
    n_s = samples.size
    bits = label_to_bits(label, order)
    n_cand = 2 * order + 2
    old = np.ones(n_cand + 1, dtype=bool)
    old[1:order + 1] = np.array(bits, dtype=bool)
    t = 2 * samples
    none = np.zeros(n_s, dtype=bool)
    # Candidate c sits at 1 - 2c, between old offsets c - 1 and c.
    new = np.zeros((n_s, n_cand), dtype=bool)
    for c in range(n_cand):
        x = 1 - 2 * c
        from_right = fieldv.uniforms(t, x + 1, LEFT) <= p if c >= 1 and old[c - 1] else none
        from_left = fieldv.uniforms(t, x - 1, RIGHT) <= p if old[c] else none
        new[:, c] = from_left | from_right
    hit = new[:, : order + 2]
    found = hit.any(axis=1)
    k = np.where(found, hit.argmax(axis=1), 0).astype(np.int64)
    tgt = np.zeros(n_s, dtype=np.int64)
    for j in range(order):
        col = np.minimum(k + 1 + j, n_cand - 1)
        tgt = (tgt << 1) | new[np.arange(n_s), col]
    for si in np.nonzero(~found)[0]:
        init = initial_config_from_label(order, label, time=int(t[si]), edge=0)
        nxt = step(init, fieldv, p, order)
        k[si] = (1 - nxt.edge) // 2
        tgt[si] = imc_readout(nxt, order).label
    return k, tgt


def one_step_batch(order: int, label: int, p: float, n_samples: int, seed: int, k_cap: int) -> np.ndarray:
    """Counts of ``one_step_samples`` indexed by ``(min(k, k_cap), target)``."""
    counts = np.zeros((k_cap + 1, 1 << order), dtype=np.int64)
    chunk = 1 << 18
    for start in range(0, n_samples, chunk):
        k, tgt = one_step_samples(order, label, p, np.arange(start, min(start + chunk, n_samples)), seed)
        np.add.at(counts, (np.minimum(k, k_cap), tgt), 1)
    return counts


def batch_disagreements(order: int, label: int, p: float, samples, seed: int) -> int:
    """Samples where ``one_step_samples`` differs from the scalar ``step``."""
    samples = np.asarray(samples, dtype=np.int64)
    k, tgt = one_step_samples(order, label, p, samples, seed)
    fieldv = UniformBondField(seed)
    bad = 0
    for s, kk, tt in zip(samples, k, tgt):
        nxt = step(initial_config_from_label(order, label, time=2 * int(s), edge=0), fieldv, p, order)
        bad += ((1 - nxt.edge) // 2, imc_readout(nxt, order).label) != (int(kk), int(tt))
    return bad


@dataclass(frozen=True)
class Violation:
    seed: int
    step: int
    site: int


def _empty(time: int) -> InfectionConfig:
    return InfectionConfig(time, time % 2, (), 0)


def _first_excess(a: InfectionConfig, b: InfectionConfig) -> int | None:
    """A site where ``a`` is occupied and ``b`` is not, or ``None``."""
    lo = min(a.lo, b.lo)
    hi = max(a.hi, b.hi)
    for m in range(lo, hi + 1, 2):
        if a.occupancy(m) > b.occupancy(m):
            return m
    if a.left_fill > b.left_fill:
        return lo - 2
    return None


def coupled_paths(orders: Sequence, p_values: Sequence[float], initials: Sequence[InfectionConfig],
                  seed: int, n_steps: int) -> list[list[InfectionConfig]]:
    """Configurations of several runs over one bond field; extinct runs stay empty."""
    fieldv = UniformBondField(seed)
    out = []
    for order, p, cfg in zip(orders, p_values, initials):
        path = [cfg]
        for _ in range(n_steps):
            if cfg.is_empty():
                cfg = _empty(cfg.time + 1)
            else:
                try:
                    cfg = step(cfg, fieldv, p, order)
                except DiedOut as exc:
                    cfg = exc.config
            path.append(cfg)
        out.append(path)
    return out


def coupling_violations(lower: tuple, upper: tuple, seeds: Iterable[int], n_steps: int) -> list[Violation]:
    """Check that run ``lower`` stays pointwise below run ``upper``.

    Each run is ``(order, p, initial)``; both use the same bond field for
    every seed.  Returns every ``(seed, step, site)`` where the order fails.
    """
    bad = []
    for seed in seeds:
        a, b = coupled_paths([lower[0], upper[0]], [lower[1], upper[1]], [lower[2], upper[2]], seed, n_steps)
        for t, (x, y) in enumerate(zip(a, b)):
            site = _first_excess(x, y)
            if site is not None:
                bad.append(Violation(seed, t, site))
    return bad
