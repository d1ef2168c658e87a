# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_kernels_py``.

Every function reproduces the reference operation order exactly; build with
``-ffp-contract=off`` so no fused multiply-add changes a rounding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport nextafter, fabs, INFINITY
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.string cimport memcpy

from ._kernels_py import InconclusiveSolve

cnp.import_array()

cdef double ROUND_REL = 2.0 ** -53 * (1.0 + 2.0 ** -52)
cdef double ROUND_ABS = 2.0 ** -1074
cdef double INV_2_53 = 2.0 ** -53


# ---------------------------------------------------------------- RNG

cdef struct Rng:
    uint64_t s0, s1, s2, s3


cdef inline uint64_t _splitmix_next(uint64_t* state) nogil:
    state[0] += 0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void _rng_seed(Rng* r, uint64_t seed) nogil:
    cdef uint64_t st = seed
    r.s0 = _splitmix_next(&st)
    r.s1 = _splitmix_next(&st)
    r.s2 = _splitmix_next(&st)
    r.s3 = _splitmix_next(&st)


cdef inline uint64_t _rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline double _uniform(Rng* r) nogil:
    cdef uint64_t result = _rotl(r.s1 * 5, 7) * 9
    cdef uint64_t t = r.s1 << 17
    r.s2 ^= r.s0
    r.s3 ^= r.s1
    r.s1 ^= r.s2
    r.s0 ^= r.s3
    r.s2 ^= t
    r.s3 = _rotl(r.s3, 45)
    return (result >> 11) * INV_2_53


# ---------------------------------------------------------------- window chain

cdef inline int _code(uint8_t* occ, Py_ssize_t k, Py_ssize_t order) nogil:
    cdef int left, right
    if k == 0:
        return 1
    left = occ[k] if k <= order else 1
    right = occ[k - 1] if k - 1 <= order else 1
    return left + right


cdef inline Py_ssize_t _window_step(uint8_t* occ, uint8_t* nxt, Py_ssize_t order,
                                    double* probs, double q2, Rng* rng) nogil:
    """occ[0] = 1 (edge), occ[1..order] = bits; new bits written to nxt[1..order]."""
    cdef Py_ssize_t k = 0, j
    cdef bint found = False
    while k <= order + 1:
        if _uniform(rng) < probs[_code(occ, k, order)]:
            found = True
            break
        k += 1
    if not found:
        k = order + 2
        while _uniform(rng) < q2:
            k += 1
    for j in range(1, order + 1):
        nxt[j] = 1 if _uniform(rng) < probs[_code(occ, k + j, order)] else 0
    return k


cdef inline Py_ssize_t _label(uint8_t* occ, Py_ssize_t order) nogil:
    cdef Py_ssize_t lab = 0, j
    for j in range(1, order + 1):
        lab = (lab << 1) | occ[j]
    return lab


def run_chain(Py_ssize_t order, double p, Py_ssize_t n_steps, uint64_t seed, init_bits,
              Py_ssize_t stride, bint count_labels):
    cdef double q = 1.0 - p
    cdef double q2 = q * q
    cdef double probs[3]
    probs[0] = 0.0
    probs[1] = p
    probs[2] = 1.0 - q2
    cdef Rng rng
    _rng_seed(&rng, seed)
    cdef cnp.ndarray[uint8_t, ndim=1] buf_a = np.ones(order + 1, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=1] buf_b = np.ones(order + 1, dtype=np.uint8)
    cdef Py_ssize_t j
    for j in range(order):
        buf_a[j + 1] = init_bits[j]
    cdef uint8_t* occ = &buf_a[0]
    cdef uint8_t* nxt = &buf_b[0]
    cdef uint8_t* tmp
    cdef Py_ssize_t n_rec = n_steps // stride
    cdef cnp.ndarray[int64_t, ndim=1] edges = np.zeros(n_rec, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] counts = np.zeros((1 << order) if count_labels else 0, dtype=np.int64)
    cdef int64_t edge = 0
    cdef Py_ssize_t n, k, rec = 0
    with nogil:
        for n in range(1, n_steps + 1):
            if count_labels:
                counts[_label(occ, order)] += 1
            k = _window_step(occ, nxt, order, probs, q2, &rng)
            tmp = occ
            occ = nxt
            nxt = tmp
            edge += 1 - 2 * k
            if n % stride == 0:
                edges[rec] = edge
                rec += 1
    final = np.array([occ[j + 1] for j in range(order)], dtype=np.uint8)
    return edges, final, counts, int(edge)


def one_step_counts(Py_ssize_t order, double p, Py_ssize_t label, Py_ssize_t n_samples,
                    uint64_t seed, Py_ssize_t k_cap):
    cdef double q = 1.0 - p
    cdef double q2 = q * q
    cdef double probs[3]
    probs[0] = 0.0
    probs[1] = p
    probs[2] = 1.0 - q2
    cdef Rng rng
    _rng_seed(&rng, seed)
    cdef cnp.ndarray[uint8_t, ndim=1] buf_a = np.ones(order + 1, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=1] buf_b = np.ones(order + 1, dtype=np.uint8)
    cdef Py_ssize_t j, s, k
    for j in range(1, order + 1):
        buf_a[j] = (label >> (order - j)) & 1
    cdef cnp.ndarray[int64_t, ndim=2] counts = np.zeros((k_cap + 1, 1 << order), dtype=np.int64)
    with nogil:
        for s in range(n_samples):
            k = _window_step(&buf_a[0], &buf_b[0], order, probs, q2, &rng)
            counts[k if k < k_cap else k_cap, _label(&buf_b[0], order)] += 1
    return counts


# ---------------------------------------------------------------- tracked Gaussian elimination

cdef inline double _up(double x) nogil:
    # Same result as nextafter(x, +inf) for finite x, without the libm call.
    cdef int64_t bits
    if x == 0.0:
        return 4.9406564584124654e-324
    memcpy(&bits, &x, 8)
    if x > 0.0:
        bits += 1
    else:
        bits -= 1
    memcpy(&x, &bits, 8)
    return x


cdef inline double _down(double x) nogil:
    return nextafter(x, -INFINITY)


cdef inline double _rnd(double x) nogil:
    return _up(_up(ROUND_REL * fabs(x)) + ROUND_ABS)


def gauss_tracked(double[:, ::1] a, double[:, ::1] ea, double[::1] b, double[::1] eb):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t c, r, k, piv
    cdef double best, pv, epv, apv, lam, elam, alam, lden, prod, new, eprod, t
    cdef double s, es, pr, epr, s_new, xc, num
    for c in range(n):
        piv = c
        best = fabs(a[c, c])
        for r in range(c + 1, n):
            if fabs(a[r, c]) > best:
                best = fabs(a[r, c])
                piv = r
        if piv != c:
            for k in range(n):
                t = a[c, k]; a[c, k] = a[piv, k]; a[piv, k] = t
                t = ea[c, k]; ea[c, k] = ea[piv, k]; ea[piv, k] = t
            t = b[c]; b[c] = b[piv]; b[piv] = t
            t = eb[c]; eb[c] = eb[piv]; eb[piv] = t
        pv = a[c, c]
        epv = ea[c, c]
        apv = fabs(pv)
        if not 2.0 * epv < apv:
            raise InconclusiveSolve(f"pivot {c}: |{pv}| not above twice its error {epv}")
        lden = _down(apv - epv)
        if not lden > 0.0:
            raise InconclusiveSolve(f"pivot {c} too close to zero")
        if c == n - 1:
            break
        with nogil:
            for r in range(c + 1, n):
                lam = a[r, c] / pv
                elam = _up(_up(_up(_up(_up(fabs(a[r, c]) * epv) / apv) + ea[r, c]) / lden) + _rnd(lam))
                alam = fabs(lam)
                for k in range(c + 1, n):
                    prod = lam * a[c, k]
                    new = a[r, k] - prod
                    eprod = _up(_up(alam * ea[c, k]) + _up(elam * fabs(a[c, k])))
                    eprod = _up(eprod + _up(elam * ea[c, k]))
                    ea[r, k] = _up(_up(ea[r, k] + eprod) + _up(_rnd(prod) + _rnd(new)))
                    a[r, k] = new
                a[r, c] = 0.0
                ea[r, c] = 0.0
                prod = lam * b[c]
                new = b[r] - prod
                eprod = _up(_up(alam * eb[c]) + _up(elam * fabs(b[c])))
                eprod = _up(eprod + _up(elam * eb[c]))
                eb[r] = _up(_up(eb[r] + eprod) + _up(_rnd(prod) + _rnd(new)))
                b[r] = new
    x = np.zeros(n)
    ex = np.zeros(n)
    cdef double[::1] xv = x
    cdef double[::1] exv = ex
    with nogil:
        for c in range(n - 1, -1, -1):
            s = b[c]
            es = eb[c]
            for k in range(c + 1, n):
                pr = a[c, k] * xv[k]
                epr = _up(fabs(a[c, k]) * exv[k])
                epr = _up(epr + _up(ea[c, k] * fabs(xv[k])))
                epr = _up(epr + _up(ea[c, k] * exv[k]))
                s_new = s - pr
                es = _up(es + epr)
                es = _up(es + _rnd(pr))
                es = _up(es + _rnd(s_new))
                s = s_new
            pv = a[c, c]
            epv = ea[c, c]
            apv = fabs(pv)
            xc = s / pv
            lden = _down(apv - epv)
            num = _up(_up(fabs(s) * epv) / apv)
            num = _up(num + es)
            exv[c] = _up(_up(num / lden) + _rnd(xc))
            xv[c] = xc
    return x, ex
