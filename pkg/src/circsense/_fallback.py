"""Pure NumPy versions of the compiled kernels in ``_kernels.pyx``.

Each function returns exactly what its compiled twin returns, including
tie-breaking, so the two backends are interchangeable.
"""

from __future__ import annotations

from math import comb

import numpy as np

_CHUNK = 256


def circulant_gram_max(s, m):
    s = np.asarray(s, dtype=np.int64)
    p = s.shape[0]
    if p < 2:
        raise ValueError("need at least two columns")
    if m < 1 or m > p:
        raise ValueError("need 1 <= m <= p")
    a = np.arange(p)
    best, best_a, best_b = -1, 0, 0
    for start in range(1, p // 2 + 1, _CHUNK):
        d = np.arange(start, min(start + _CHUNK, p // 2 + 1))
        b = (a[None, :] + d[:, None]) % p
        prod = s[None, :] * s[b]
        # G[a, a + d] is the circular window sum of prod over indices a-m+1..a.
        csum = np.zeros((d.size, 2 * p + 1), dtype=np.int64)
        np.cumsum(np.concatenate([prod, prod], axis=1), axis=1, out=csum[:, 1:])
        g = np.abs(csum[:, p + 1 + a] - csum[:, p + 1 + a - m])
        top = int(g.max())
        if top < best:
            continue
        rows, cols = np.nonzero(g == top)
        lo = np.minimum(cols, b[rows, cols])
        hi = np.maximum(cols, b[rows, cols])
        k = np.lexsort((hi, lo))[0]
        cand = (int(lo[k]), int(hi[k]))
        if top > best or cand < (best_a, best_b):
            best, best_a, best_b = top, cand[0], cand[1]
    return best, best_a, best_b


def sigma_delta_greedy(y, r, delta, levels):
    y = np.asarray(y, dtype=np.float64)
    if r < 0 or r > 3:
        raise ValueError("order must be 0..3")
    coef = [0.0] + [(-1) ** (t + 1) * comb(r, t) for t in range(1, r + 1)]
    m = y.shape[0]
    q = np.empty(m)
    u = np.empty(m)
    overloaded = False
    for i in range(m):
        v = float(y[i])
        for t in range(1, r + 1):
            if i - t >= 0:
                v += coef[t] * u[i - t]
        j = int(np.floor(v / delta))
        if j < -levels:
            j, overloaded = -levels, True
        elif j > levels - 1:
            j, overloaded = levels - 1, True
        qi = (j + 0.5) * delta
        q[i] = qi
        u[i] = v - qi
        if abs(u[i]) > 0.5 * delta * (1.0 + 1e-12):
            overloaded = True
    return q, u, overloaded


def quadratic_char_sums(chi):
    chi = np.asarray(chi, dtype=np.int64)
    p = chi.shape[0]
    x = np.arange(p)
    best_complete, best_prefix, wa, wb, wn = 0, -1, 0, 0, 0
    for a in range(p - 1):
        b = np.arange(a + 1, p)
        vals = chi[(((x[None, :] - a) % p) * ((x[None, :] - b[:, None]) % p)) % p]
        partial = np.abs(np.cumsum(vals, axis=1))
        best_complete = max(best_complete, int(partial[:, -1].max()))
        top = int(partial.max())
        if top > best_prefix:
            # first occurrence in (b, x) row-major order matches the compiled scan
            row, n = np.unravel_index(int(np.argmax(partial)), partial.shape)
            best_prefix, wa, wb, wn = top, a, int(b[row]), int(n)
    return best_complete, best_prefix, wa, wb, wn
