# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics are mirrored exactly by ``_fallback``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, fabs

cnp.import_array()


def circulant_gram_max(const signed char[::1] s, Py_ssize_t m):
    """Largest |off-diagonal| integer Gram entry of the m-row partial circulant.

    Column ``a`` holds ``s[(a - i) % p]`` for ``i < m``.  Returns
    ``(value, a, b)`` with ``a < b`` and the lexicographically smallest pair
    among ties.
    """
    cdef Py_ssize_t p = s.shape[0]
    cdef Py_ssize_t d, a, b, i, lo, hi
    cdef long g, ag
    cdef long best = -1
    cdef Py_ssize_t best_a = 0, best_b = 0
    if p < 2:
        raise ValueError("need at least two columns")
    if m < 1 or m > p:
        raise ValueError("need 1 <= m <= p")
    for d in range(1, p // 2 + 1):
        g = 0
        for i in range(m):
            g += s[(p - i) % p] * s[(d - i + p) % p]
        for a in range(p):
            b = a + d
            if b >= p:
                b -= p
            if a > 0:
                g += s[a] * s[b] - s[(a - m + p) % p] * s[(b - m + p) % p]
            ag = g if g >= 0 else -g
            if a < b:
                lo = a
                hi = b
            else:
                lo = b
                hi = a
            if ag > best or (ag == best and (lo < best_a or (lo == best_a and hi < best_b))):
                best = ag
                best_a = lo
                best_b = hi
    return int(best), int(best_a), int(best_b)


def sigma_delta_greedy(const double[::1] y, int r, double delta, long levels):
    """Greedy r-th order sigma-delta with a midrise alphabet of 2*levels points.

    Returns ``(q, u, overloaded)``; the states satisfy ``y - q = D^r u``.
    """
    cdef Py_ssize_t m = y.shape[0]
    cdef Py_ssize_t i, t
    cdef double v, qi
    cdef long j
    cdef bint overloaded = False
    if r < 0 or r > 3:
        raise ValueError("order must be 0..3")
    cdef double coef[4]
    cdef double binom[4]
    binom[0] = 1.0
    binom[1] = r
    binom[2] = r * (r - 1) / 2.0
    binom[3] = r * (r - 1) * (r - 2) / 6.0
    for t in range(1, 4):
        coef[t] = binom[t] if t % 2 == 1 else -binom[t]
    q_arr = np.empty(m, dtype=np.float64)
    u_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] q = q_arr
    cdef double[::1] u = u_arr
    for i in range(m):
        v = y[i]
        for t in range(1, r + 1):
            if i - t >= 0:
                v += coef[t] * u[i - t]
        j = <long> floor(v / delta)
        if j < -levels:
            j = -levels
            overloaded = True
        elif j > levels - 1:
            j = levels - 1
            overloaded = True
        qi = (j + 0.5) * delta
        q[i] = qi
        u[i] = v - qi
        if fabs(u[i]) > 0.5 * delta * (1.0 + 1e-12):
            overloaded = True
    return q_arr, u_arr, bool(overloaded)


def quadratic_char_sums(const signed char[::1] chi):
    """Scan every f(x) = (x - a)(x - b), a < b, over Z_p.

    Returns ``(max_complete, max_prefix, a, b, n)``: the largest
    ``|sum_{x<p} chi(f(x))|`` and the largest partial sum
    ``|sum_{x<=n} chi(f(x))|`` with its witness.
    """
    cdef Py_ssize_t p = chi.shape[0]
    cdef Py_ssize_t a, b, x
    cdef long long prod
    cdef long acc, aacc
    cdef long best_complete = 0, best_prefix = -1
    cdef Py_ssize_t wa = 0, wb = 0, wn = 0
    for a in range(p):
        for b in range(a + 1, p):
            acc = 0
            for x in range(p):
                prod = ((x - a + p) % p) * ((x - b + p) % p)
                acc += chi[prod % p]
                aacc = acc if acc >= 0 else -acc
                if aacc > best_prefix:
                    best_prefix = aacc
                    wa = a
                    wb = b
                    wn = x
            aacc = acc if acc >= 0 else -acc
            if aacc > best_complete:
                best_complete = aacc
    return int(best_complete), int(best_prefix), int(wa), int(wb), int(wn)
