"""Pure-Python implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them operation for
operation so both backends return bit-identical results for equal inputs.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
UNIT_ROUNDOFF = 2.0**-53
# |fl(z) - z| <= ROUND_REL * |fl(z)| + ROUND_ABS for any single IEEE operation.
ROUND_REL = 2.0**-53 * (1.0 + 2.0**-52)
ROUND_ABS = 2.0**-1074
INV_2_53 = 2.0**-53


class InconclusiveSolve(ArithmeticError):
    """A pivot's error bound reached half its magnitude."""


# ---------------------------------------------------------------- RNG

def splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class Xoshiro256:
    """xoshiro256** seeded by splitmix64."""

    __slots__ = ("s",)

    def __init__(self, seed: int):
        st = seed & MASK64
        s = []
        for _ in range(4):
            st, z = splitmix64(st)
            s.append(z)
        self.s = s

    def next64(self) -> int:
        s = self.s
        s1 = s[1]
        x = (s1 * 5) & MASK64
        result = ((((x << 7) | (x >> 57)) & MASK64) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = ((s[3] << 45) | (s[3] >> 19)) & MASK64
        return result

    def uniform(self) -> float:
        return (self.next64() >> 11) * INV_2_53


# ---------------------------------------------------------------- window chain

def _code(occ: list, k: int, order: int) -> int:
    if k == 0:
        return 1
    left = occ[k] if k <= order else 1
    right = occ[k - 1] if k - 1 <= order else 1
    return left + right


def window_step(bits: list, order: int, probs: tuple, q2: float, rng: Xoshiro256) -> tuple[list, int]:
    """One step of the window chain; returns (new bits, jump index k)."""
    occ = [1, *bits]
    k = 0
    found = False
    while k <= order + 1:
        if rng.uniform() < probs[_code(occ, k, order)]:
            found = True
            break
        k += 1
    if not found:
        k = order + 2
        while rng.uniform() < q2:
            k += 1
    new = [0] * order
    for j in range(1, order + 1):
        new[j - 1] = 1 if rng.uniform() < probs[_code(occ, k + j, order)] else 0
    return new, k


def _label(bits) -> int:
    lab = 0
    for b in bits:
        lab = (lab << 1) | b
    return lab


def run_chain(order: int, p: float, n_steps: int, seed: int, init_bits, stride: int, count_labels: bool):
    q = 1.0 - p
    q2 = q * q
    probs = (0.0, p, 1.0 - q2)
    rng = Xoshiro256(seed)
    bits = [int(b) for b in init_bits]
    edge = 0
    n_rec = n_steps // stride
    edges = np.zeros(n_rec, dtype=np.int64)
    counts = np.zeros(1 << order if count_labels else 0, dtype=np.int64)
    rec = 0
    for n in range(1, n_steps + 1):
        if count_labels:
            counts[_label(bits)] += 1
        bits, k = window_step(bits, order, probs, q2, rng)
        edge += 1 - 2 * k
        if n % stride == 0:
            edges[rec] = edge
            rec += 1
    return edges, np.array(bits, dtype=np.uint8), counts, edge


def one_step_counts(order: int, p: float, label: int, n_samples: int, seed: int, k_cap: int):
    q = 1.0 - p
    q2 = q * q
    probs = (0.0, p, 1.0 - q2)
    rng = Xoshiro256(seed)
    bits = [(label >> (order - j)) & 1 for j in range(1, order + 1)]
    counts = np.zeros((k_cap + 1, 1 << order), dtype=np.int64)
    for _ in range(n_samples):
        new, k = window_step(bits, order, probs, q2, rng)
        counts[min(k, k_cap), _label(new)] += 1
    return counts


# ---------------------------------------------------------------- tracked Gaussian elimination

def _up(x):
    return np.nextafter(x, np.inf)


def _down(x):
    return np.nextafter(x, -np.inf)


def _rnd(x):
    return _up(_up(ROUND_REL * np.abs(x)) + ROUND_ABS)


def gauss_tracked(a: np.ndarray, ea: np.ndarray, b: np.ndarray, eb: np.ndarray):
    """Solve ``a x = b`` by partial pivoting, tracking forward error bounds.

    ``ea``/``eb`` bound the distance of the inputs from the exact system;
    the returned ``ex`` bounds ``|x_exact - x|`` componentwise.  Arrays are
    modified in place.
    """
    n = a.shape[0]
    for c in range(n):
        piv = c + int(np.argmax(np.abs(a[c:, c])))
        if piv != c:
            a[[c, piv]] = a[[piv, c]]
            ea[[c, piv]] = ea[[piv, c]]
            b[[c, piv]] = b[[piv, c]]
            eb[[c, piv]] = eb[[piv, c]]
        pv = a[c, c]
        epv = ea[c, c]
        apv = abs(pv)
        if not 2.0 * epv < apv:
            raise InconclusiveSolve(f"pivot {c}: |{pv}| not above twice its error {epv}")
        # |A/P - a/p| <= (|a| ep / |p| + ea) / (|p| - ep)
        lden = _down(apv - epv)
        if not lden > 0.0:
            raise InconclusiveSolve(f"pivot {c} too close to zero")
        if c == n - 1:
            break
        col = a[c + 1:, c]
        ecol = ea[c + 1:, c]
        lam = col / pv
        elam = _up(_up(_up(_up(_up(np.abs(col) * epv) / apv) + ecol) / lden) + _rnd(lam))
        alam = np.abs(lam)
        row = a[c, c + 1:]
        erow = ea[c, c + 1:]
        prod = lam[:, None] * row[None, :]
        new = a[c + 1:, c + 1:] - prod
        eprod = _up(_up(alam[:, None] * erow[None, :]) + _up(elam[:, None] * np.abs(row)[None, :]))
        eprod = _up(eprod + _up(elam[:, None] * erow[None, :]))
        enew = _up(_up(ea[c + 1:, c + 1:] + eprod) + _up(_rnd(prod) + _rnd(new)))
        a[c + 1:, c + 1:] = new
        ea[c + 1:, c + 1:] = enew
        a[c + 1:, c] = 0.0
        ea[c + 1:, c] = 0.0
        bprod = lam * b[c]
        bnew = b[c + 1:] - bprod
        ebprod = _up(_up(alam * eb[c]) + _up(elam * abs(b[c])))
        ebprod = _up(ebprod + _up(elam * eb[c]))
        eb[c + 1:] = _up(_up(eb[c + 1:] + ebprod) + _up(_rnd(bprod) + _rnd(bnew)))
        b[c + 1:] = bnew
    x = np.zeros(n)
    ex = np.zeros(n)
    for c in range(n - 1, -1, -1):
        s = float(b[c])
        es = float(eb[c])
        for k in range(c + 1, n):
            akc = float(a[c, k])
            pr = akc * x[k]
            epr = math.nextafter(abs(akc) * ex[k], math.inf)
            epr = math.nextafter(epr + math.nextafter(float(ea[c, k]) * abs(x[k]), math.inf), math.inf)
            epr = math.nextafter(epr + math.nextafter(float(ea[c, k]) * ex[k], math.inf), math.inf)
            s_new = s - pr
            es = math.nextafter(es + epr, math.inf)
            es = math.nextafter(es + _rnd_scalar(pr), math.inf)
            es = math.nextafter(es + _rnd_scalar(s_new), math.inf)
            s = s_new
        pv = float(a[c, c])
        epv = float(ea[c, c])
        apv = abs(pv)
        xc = s / pv
        lden = math.nextafter(apv - epv, -math.inf)
        num = math.nextafter(math.nextafter(abs(s) * epv, math.inf) / apv, math.inf)
        num = math.nextafter(num + es, math.inf)
        ex[c] = math.nextafter(math.nextafter(num / lden, math.inf) + _rnd_scalar(xc), math.inf)
        x[c] = xc
    return x, ex


def _rnd_scalar(x: float) -> float:
    return math.nextafter(math.nextafter(ROUND_REL * abs(x), math.inf) + ROUND_ABS, math.inf)
