"""Fast Monte Carlo for the window chain, and plateau-based estimates of its root.

The window chain is sampled from its factorized one-step law (each candidate
site is occupied independently with probability ``0``, ``p`` or ``1 - q^2``),
so a step costs ``O(i)`` and large orders are practical.  Randomness comes
from a sequential xoshiro256** stream, not the keyed bond field.

A trajectory is *subcritical* when its plateau height (the mean of
``edge/n`` over the last fifth of the run) is below ``-3`` standard errors,
*supercritical* above ``+3``, and *undecided* otherwise.  The standard error
is the batch-means error of the overall speed ``edge/n``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from ._kernels_py import Xoshiro256, window_step
from .imc import bits_to_label, label_to_bits

SUBCRITICAL = "subcritical"
SUPERCRITICAL = "supercritical"
UNDECIDED = "undecided"

_MAX_LABEL_ORDER = 20


@dataclass(frozen=True)
class PackedWindow:
    """Edge position plus the window bits packed into an integer (``b_1`` high)."""

    order: int
    edge: int
    packed: int

    def __post_init__(self):
        if not 0 <= self.packed < (1 << self.order):
            raise ValueError("packed bits out of range")

    @classmethod
    def canonical(cls, order: int) -> "PackedWindow":
        return cls(order, 0, (1 << order) - 1)

    @property
    def bits(self) -> tuple[int, ...]:
        return label_to_bits(self.packed, self.order)


def fast_step(w: PackedWindow, p: float, rng: Xoshiro256) -> PackedWindow:
    """One step of the window chain drawn from its factorized law."""
    q = 1.0 - p
    q2 = q * q
    bits, k = window_step(list(w.bits), w.order, (0.0, p, 1.0 - q2), q2, rng)
    return PackedWindow(w.order, w.edge + 1 - 2 * k, bits_to_label(bits))


def one_step_frequencies(order: int, label: int, p: float, n_samples: int, seed: int,
                         k_cap: int, backend=None) -> np.ndarray:
    """Counts of ``(min(k, k_cap), target label)`` over ``n_samples`` steps from ``label``."""
    if order > _MAX_LABEL_ORDER:
        raise ValueError("label counts need a small order")
    kern = backend or _backend.kernels
    return np.asarray(kern.one_step_counts(order, p, label, n_samples, seed, k_cap))


@dataclass
class WindowTrajectory:
    order: int
    p: float
    seed: int
    n_steps: int
    stride: int
    edges: np.ndarray
    visits: np.ndarray | None = None

    @property
    def times(self) -> np.ndarray:
        return self.stride * np.arange(1, len(self.edges) + 1)

    @property
    def final_edge(self) -> int:
        return int(self.edges[-1])

    def speed(self) -> float:
        return self.final_edge / self.n_steps

    def speed_stderr(self) -> float:
        """Batch-means standard error of ``edge/n``, one batch per stride."""
        inc = np.diff(np.concatenate([[0], self.edges])) / self.stride
        nb = len(inc)
        if nb < 2:
            return math.inf
        return float(np.std(inc, ddof=1) / math.sqrt(nb))

    def plateau(self) -> float:
        """Mean of ``edge/n`` over the last fifth of the recorded points."""
        start = int(math.floor(0.8 * len(self.edges)))
        sl = slice(start, None)
        return float(np.mean(self.edges[sl] / self.times[sl]))

    def verdict(self) -> str:
        h, se = self.plateau(), self.speed_stderr()
        if h < -3.0 * se:
            return SUBCRITICAL
        if h > 3.0 * se:
            return SUPERCRITICAL
        return UNDECIDED

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "edge", "edge_over_n"])
        for n, e in zip(self.times, self.edges):
            w.writerow([int(n), int(e), repr(float(e) / float(n))])
        return buf.getvalue()


def run_window_trajectory(order: int, p: float, n_steps: int, seed: int, n_batches: int = 1000,
                          count_labels: bool = False, initial: PackedWindow | None = None,
                          backend=None) -> WindowTrajectory:
    """Simulate the window chain from the all-occupied window (or ``initial``)."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    if count_labels and order > _MAX_LABEL_ORDER:
        raise ValueError("label counts need a small order")
    kern = backend or _backend.kernels
    stride = max(1, n_steps // max(1, n_batches))
    n_steps = stride * (n_steps // stride)
    w = initial or PackedWindow.canonical(order)
    edges, _, visits, _ = kern.run_chain(order, p, n_steps, seed, list(w.bits), stride, count_labels)
    edges = np.asarray(edges) + w.edge
    return WindowTrajectory(order, p, seed, n_steps, stride, edges,
                            np.asarray(visits) if count_labels else None)


@dataclass
class PlateauPoint:
    p: float
    n_steps: int
    speed: float
    plateau: float
    stderr: float
    verdict: str


@dataclass
class PlateauScan:
    order: int
    seed: int
    points: list[PlateauPoint] = field(default_factory=list)
    trajectories: list[WindowTrajectory] = field(default_factory=list, repr=False)

    def verdicts(self) -> dict[float, str]:
        return {pt.p: pt.verdict for pt in self.points}

    def to_json(self) -> str:
        return json.dumps({"order": self.order, "seed": self.seed,
                           "points": [asdict(pt) for pt in self.points]}, indent=2)

    def to_csv(self) -> str:
        lines = ["p,n_steps,edge_over_n,plateau,stderr,verdict"]
        lines += [f"{pt.p!r},{pt.n_steps},{pt.speed!r},{pt.plateau!r},{pt.stderr!r},{pt.verdict}"
                  for pt in self.points]
        return "\n".join(lines) + "\n"


def _point(tr: WindowTrajectory) -> PlateauPoint:
    return PlateauPoint(tr.p, tr.n_steps, tr.speed(), tr.plateau(), tr.speed_stderr(), tr.verdict())


def _derive_seed(seed: int, *parts) -> int:
    """Independent stream seed for a sub-run; a fixed function of its inputs."""
    h = seed & 0xFFFFFFFFFFFFFFFF
    for x in parts:
        st = (h ^ (int(x) & 0xFFFFFFFFFFFFFFFF)) & 0xFFFFFFFFFFFFFFFF
        h = Xoshiro256(st).next64()
    return h


def _scan_job(args):
    order, p, n_steps, seed = args
    return run_window_trajectory(order, p, n_steps, seed)


def plateau_scan(order: int, p_list, n_steps: int, seed: int, keep: bool = False,
                 workers: int = 1) -> PlateauScan:
    """Plateau verdict for each ``p``; trajectory ``j`` uses its own derived seed.

    With ``workers > 1`` the runs go to a process pool; results do not depend
    on the worker count.
    """
    jobs = [(order, float(p), n_steps, _derive_seed(seed, j)) for j, p in enumerate(p_list)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(_scan_job, jobs))
    else:
        trajs = [_scan_job(j) for j in jobs]
    scan = PlateauScan(order, seed)
    for tr in trajs:
        scan.points.append(_point(tr))
        if keep:
            scan.trajectories.append(tr)
    return scan


@dataclass
class MCEstimate:
    order: int
    p_lo: float
    p_hi: float
    complete: bool
    history: list[PlateauPoint] = field(default_factory=list)

    @property
    def estimate(self) -> float:
        return 0.5 * (self.p_lo + self.p_hi)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.p_hi - self.p_lo)


def estimate_pc_mc(order: int, tol: float = 1e-3, budget: int = 10**9, seed: int = 1,
                   p_lo: float = 0.5, p_hi: float = 0.7, n_start: int = 10**6,
                   n_max: int = 10**8, backend=None) -> MCEstimate:
    """Bisection on ``p`` driven by plateau verdicts.

    At each probe the run length starts at ``n_start`` and doubles while the
    verdict is undecided, up to ``n_max``.  A midpoint still undecided at
    ``n_max`` lies close to the root, so the search probes ``mid -/+ tol/4``
    instead.  ``budget`` caps the total number of simulated steps.  Returns
    the narrowest decided bracket; it is marked incomplete (with a warning)
    if it is still wider than ``tol``.
    """
    if tol < 1e-5:
        raise ValueError("tol must be at least 1e-5")
    used = 0
    history: list[PlateauPoint] = []
    call = 0

    def decide(p):
        nonlocal used, call
        n = n_start
        while True:
            if used + n > budget:
                return UNDECIDED
            tr = run_window_trajectory(order, p, n, _derive_seed(seed, call), backend=backend)
            call += 1
            used += tr.n_steps
            pt = _point(tr)
            history.append(pt)
            if pt.verdict != UNDECIDED or n >= n_max:
                return pt.verdict
            n = min(2 * n, n_max)

    ok = decide(p_lo) == SUBCRITICAL
    ok = decide(p_hi) == SUPERCRITICAL and ok
    while ok and p_hi - p_lo > tol:
        mid = round(0.5 * (p_lo + p_hi), 12)
        probes = [mid]
        if decide(mid) == UNDECIDED:
            probes = [round(mid - tol / 4, 12), round(mid + tol / 4, 12)]
        moved = False
        for x in probes:
            if not p_lo < x < p_hi:
                continue
            v = decide(x) if len(probes) > 1 else history[-1].verdict
            if v == SUBCRITICAL:
                p_lo, moved = x, True
            elif v == SUPERCRITICAL:
                p_hi, moved = x, True
        ok = moved
    complete = ok and p_hi - p_lo <= tol
    if not complete:
        warnings.warn(f"order {order}: stopped with bracket ({p_lo}, {p_hi}) wider than {tol}", RuntimeWarning)
    return MCEstimate(order, p_lo, p_hi, complete, history)
