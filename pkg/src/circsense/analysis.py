"""Coherence, coherence-derived guarantees, and empirical character-sum checks.

All logarithms are natural logarithms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .circulant import max_gram_entry
from .constructions import PartialCirculantMatrix
from .kernels import quadratic_char_sums
from .numtheory import ceil_pow_frac, check_prime, legendre_table

__all__ = [
    "CoherenceReport",
    "WeylSumRecord",
    "QuadraticSumReport",
    "P1Report",
    "coherence",
    "chirp_coherence",
    "coherence_bound",
    "restricted_coherence_bound",
    "rip_from_coherence",
    "max_sparsity",
    "coherence_max_sparsity",
    "incomplete_weyl_sum",
    "quadratic_sum_check",
    "p1_check",
    "loglog_slope",
]

COHERENCE_CSV_HEADER = "p,m,mu,bound,argmax_a,argmax_b"
DEFAULT_COLUMN_BUDGET = 4096


@dataclass(frozen=True)
class CoherenceReport:
    p: int | None
    m: int
    mu: float
    bound: float
    a: int
    b: int
    approximate: bool = False
    log_base: str = "e"

    def csv_row(self) -> str:
        p = "" if self.p is None else str(self.p)
        return f"{p},{self.m},{self.mu!r},{self.bound!r},{self.a},{self.b}"


@dataclass(frozen=True)
class WeylSumRecord:
    p: int
    coeffs: tuple
    N: int
    value: int
    bound: float

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def within_bound(self) -> bool:
        return abs(self.value) <= self.bound


@dataclass(frozen=True)
class QuadraticSumReport:
    """Worst cases over all ``f(x) = (x - a)(x - b)``, ``a != b``, modulo ``p``."""

    p: int
    max_complete: int
    max_incomplete: int
    witness: tuple
    complete_bound: float
    incomplete_bound: float

    @property
    def ok(self) -> bool:
        return self.max_complete < self.complete_bound and self.max_incomplete <= self.incomplete_bound


@dataclass(frozen=True)
class P1Report:
    p: int
    m: int
    ell: int
    k: int
    mu_ell: float
    delta_2k_bound: float
    delta_2k_gershgorin: float
    holds: bool
    default_ell: int
    default_k: int
    restricted_bound: float


def coherence_bound(p) -> float:
    """``3 log p / p**(1/4)``; only claimed for sufficiently large ``p`` (>= 23)."""
    if p < 23:
        warnings.warn(f"coherence bound is only asserted for p >= 23 (got {p})", stacklevel=2)
    return 3.0 * math.log(p) / p**0.25


def restricted_coherence_bound(p) -> float:
    """``18 log p / p**(1/8)``, bound for the ``ceil(p**(5/8))``-row restriction."""
    return 18.0 * math.log(p) / p**0.125


def _dense_coherence(A, column_budget, seed=0):
    A = np.asarray(A)
    m, n = A.shape
    approximate = False
    cols = np.arange(n)
    if column_budget is not None and n > column_budget:
        rng = np.random.Generator(np.random.Philox(seed))
        cols = np.sort(rng.choice(n, size=column_budget, replace=False))
        approximate = True
    B = A[:, cols]
    norms = np.linalg.norm(B, axis=0)
    if np.any(norms == 0):
        raise ValueError("matrix has a zero column")
    B = B / norms
    G = np.abs(B.conj().T @ B)
    G = np.where(np.triu(np.ones(G.shape, dtype=bool), 1), G, -1.0)
    mu = float(G.max())
    a, b = np.argwhere(G == mu)[0]
    return m, mu, int(cols[a]), int(cols[b]), approximate


def coherence(M, column_budget=DEFAULT_COLUMN_BUDGET, p=None) -> CoherenceReport:
    """Largest absolute inner product between distinct normalized columns.

    A :class:`PartialCirculantMatrix` is scanned exactly over all column pairs
    in integer arithmetic.  Dense arrays use the Gram matrix; when they have
    more than ``column_budget`` columns a fixed pseudo-random subset is used
    and the report is flagged approximate.
    """
    if isinstance(M, PartialCirculantMatrix):
        top, a, b = max_gram_entry(M)
        bound = coherence_bound(M.p) if M.p >= 23 else float("nan")
        return CoherenceReport(M.p, M.m, top / M.m, bound, a, b)
    m, mu, a, b, approx = _dense_coherence(M, column_budget)
    bound = coherence_bound(p) if p is not None and p >= 23 else float("nan")
    return CoherenceReport(p, m, mu, bound, a, b, approximate=approx)


def chirp_coherence(p) -> CoherenceReport:
    """Exact coherence of the ``p x p**2`` chirp matrix over all column pairs.

    Inner products depend only on the column difference ``(dr, dl)``, and for
    fixed ``dr`` all ``dl`` come out of one FFT.
    """
    p = check_prime(p, minimum=3)
    t = np.arange(p)
    best, best_b = -1.0, 0
    for dr in range(p):
        w = np.exp(2j * np.pi * ((dr * t * t) % p) / p)
        vals = np.abs(np.fft.ifft(w))  # (1/p) sum_t w_t exp(2 pi i dl t / p)
        if dr == 0:
            vals[0] = -1.0
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, best_b = float(vals[j]), dr * p + j
    return CoherenceReport(p, p, best, p**-0.5, 0, best_b)


def rip_from_coherence(k, mu, *, gershgorin=False) -> float:
    """RIP-constant bound ``k * mu`` (or the Gershgorin ``(k - 1) * mu``)."""
    if k < 1 or not 0 <= mu <= 1:
        raise ValueError("need k >= 1 and 0 <= mu <= 1")
    return (k - 1) * mu if gershgorin else k * mu


def max_sparsity(p, alpha_num=3, alpha_den=4) -> int:
    """``floor(p**(alpha - 1/2) / (18 sqrt(2) log p))`` for ``1/2 < alpha < 1``."""
    alpha = alpha_num / alpha_den
    if not 0.5 < alpha < 1:
        raise ValueError("alpha must lie in (1/2, 1)")
    return math.floor(p ** (alpha - 0.5) / (18 * math.sqrt(2) * math.log(p)))


def coherence_max_sparsity(p) -> int:
    """Largest ``k`` with ``3 k log p / p**(1/4) < 1``: the ``alpha = 3/4`` scaling."""
    return math.ceil(p**0.25 / (3 * math.log(p))) - 1


def incomplete_weyl_sum(f_coeffs, p, N) -> WeylSumRecord:
    """Exact ``sum_{x=0}^{N} (f(x)/p)`` for monic ``f``.

    ``f_coeffs`` lists coefficients from the constant term up; the last one
    must be 1 modulo ``p``.
    """
    p = check_prime(p)
    coeffs = tuple(int(c) % p for c in f_coeffs)
    if len(coeffs) < 2 or coeffs[-1] != 1:
        raise ValueError("f must be monic of degree >= 1")
    if not 0 <= N <= p - 1:
        raise ValueError(f"need 0 <= N <= {p - 1}")
    x = np.arange(N + 1, dtype=np.int64)
    fx = np.zeros_like(x)
    for c in reversed(coeffs):
        fx = (fx * x + c) % p
    value = int(legendre_table(p)[fx].astype(np.int64).sum())
    d = len(coeffs) - 1
    return WeylSumRecord(p, coeffs, int(N), value, d * (1 + math.log(p)) * math.sqrt(p))


def quadratic_sum_check(p) -> QuadraticSumReport:
    """Exhaustive worst case of complete and partial sums for split quadratics."""
    p = check_prime(p)
    top_complete, top_partial, a, b, n = quadratic_char_sums(np.ascontiguousarray(legendre_table(p)))
    root = math.sqrt(p)
    return QuadraticSumReport(
        p, top_complete, top_partial, (a, b, n), 2 * root, 2 * (1 + math.log(p)) * root
    )


def p1_check(M: PartialCirculantMatrix, k=None, ell=None) -> P1Report:
    """Coherence proxy for property (P1): does ``2k * mu_ell < 1/9`` hold?

    ``mu_ell`` is the coherence of the first ``ell`` rows rescaled by
    ``1/sqrt(ell)``.  Defaults are ``ell = ceil(p**(5/8))`` and
    ``k = ceil(p**(1/8) / log p)``.
    """
    p = M.p
    default_ell = min(ceil_pow_frac(p, 5, 8), M.m)
    default_k = math.ceil(p**0.125 / math.log(p))
    ell = default_ell if ell is None else int(ell)
    k = default_k if k is None else int(k)
    if ell > M.m:
        raise ValueError(f"ell={ell} exceeds the {M.m} available rows")
    if ell < 1 or k < 1:
        raise ValueError("need ell >= 1 and k >= 1")
    top, _, _ = max_gram_entry(M.restrict(ell))
    mu = top / ell
    delta = 2 * k * mu
    return P1Report(
        p=p,
        m=M.m,
        ell=ell,
        k=k,
        mu_ell=mu,
        delta_2k_bound=delta,
        delta_2k_gershgorin=(2 * k - 1) * mu,
        holds=delta < 1 / 9,
        default_ell=default_ell,
        default_k=default_k,
        restricted_bound=restricted_coherence_bound(p),
    )


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
