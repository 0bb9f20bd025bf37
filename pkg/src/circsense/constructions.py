"""Measurement matrix constructions and the plain-text matrix file format.

The main object is :class:`PartialCirculantMatrix`, the first ``m`` rows of
the ``p x p`` circulant sign matrix whose first row is ``(1, (1/p), ...,
((p-1)/p))``.  It is stored compactly as its generator; dense baselines
(Bernoulli, DeVore, chirp, random Legendre) are plain ``numpy`` arrays.

Indices are zero-based throughout: entry ``(i, j)`` of the partial circulant
is ``generator[(j - i) % p] / sqrt(m)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numtheory import ceil_pow_frac, check_prime, floor_pow_frac, legendre_table

__all__ = [
    "DEFAULT_DENSE_BUDGET",
    "MatrixFormatError",
    "PartialCirculantMatrix",
    "legendre_partial_circulant",
    "to_dense",
    "random_legendre_matrix",
    "devore_matrix",
    "chirp_matrix",
    "bernoulli_matrix",
    "save_matrix",
    "load_matrix",
    "write_pgm",
]

DEFAULT_DENSE_BUDGET = 50_000_000


class MatrixFormatError(ValueError):
    """Raised for malformed matrix files."""


@dataclass(frozen=True, eq=False)
class PartialCirculantMatrix:
    """First ``m`` rows of the Legendre circulant matrix of prime order ``p``."""

    p: int
    m: int
    generator: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.generator)
        if g.shape != (self.p,):
            raise ValueError(f"generator must have length p={self.p}")
        if not 1 <= self.m <= self.p:
            raise ValueError(f"need 1 <= m <= p, got m={self.m}")
        if not np.all(np.abs(g) == 1):
            raise ValueError("generator entries must be +-1")

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(self.m)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.p)

    def entry(self, i: int, j: int) -> float:
        return self.generator[(j - i) % self.p] * self.scale

    def sign_matrix(self) -> np.ndarray:
        """Unnormalized ``m x p`` int8 sign pattern."""
        i = np.arange(self.m)[:, None]
        j = np.arange(self.p)[None, :]
        return self.generator[(j - i) % self.p]

    def restrict(self, rows: int) -> "PartialCirculantMatrix":
        """The first ``rows`` rows, renormalized by ``1/sqrt(rows)``."""
        if not 1 <= rows <= self.m:
            raise ValueError(f"cannot restrict {self.m} rows to {rows}")
        return PartialCirculantMatrix(self.p, rows, self.generator)

    def to_dense(self, budget: int = DEFAULT_DENSE_BUDGET) -> np.ndarray:
        return to_dense(self, budget)


def legendre_partial_circulant(p, alpha_num=3, alpha_den=4, *, floor=False, rows=None):
    """Build the ``ceil(p**alpha) x p`` Legendre partial circulant matrix.

    Parameters
    ----------
    p : int
        Prime, at least 3.
    alpha_num, alpha_den : int
        Row exponent ``alpha = alpha_num / alpha_den`` in ``(0, 1]``.
    floor : bool
        Use ``floor(p**alpha)`` rows instead of the ceiling.
    rows : int, optional
        Explicit row count; overrides ``alpha``.
    """
    p = check_prime(p, minimum=3)
    if rows is None:
        if alpha_den < 1 or not 0 < alpha_num <= alpha_den:
            raise ValueError(f"alpha = {alpha_num}/{alpha_den} must lie in (0, 1]")
        rows = (floor_pow_frac if floor else ceil_pow_frac)(p, alpha_num, alpha_den)
    rows = int(rows)
    if not 1 <= rows <= p:
        raise ValueError(f"row count {rows} outside [1, {p}]")
    gen = legendre_table(p).copy()
    # the only zero of the Legendre sequence sits at offset 0, i.e. the diagonal
    assert np.count_nonzero(gen == 0) == 1 and gen[0] == 0
    gen[0] = 1
    gen.setflags(write=False)
    return PartialCirculantMatrix(p, rows, gen)


def to_dense(M: PartialCirculantMatrix, budget: int = DEFAULT_DENSE_BUDGET) -> np.ndarray:
    """Materialize ``M`` as a float64 array; refuses when ``m*p > budget``."""
    if M.m * M.p > budget:
        raise MemoryError(f"{M.m}x{M.p} matrix exceeds dense budget of {budget} entries")
    return M.sign_matrix().astype(np.float64) * M.scale


def random_legendre_matrix(p, m, n, x=0, budget=DEFAULT_DENSE_BUDGET):
    """``m x n`` matrix with entry ``(i, j)`` equal to ``((x + m*j + i + 1)/p) / sqrt(m)``."""
    p = check_prime(p)
    if m < 1 or n < 1 or x < 0:
        raise ValueError("need m, n >= 1 and x >= 0")
    if m * n > budget:
        raise MemoryError(f"{m}x{n} matrix exceeds dense budget of {budget} entries")
    table = legendre_table(p)
    i = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    return table[(x + m * j + i + 1) % p].astype(np.float64) / np.sqrt(m)


def devore_matrix(q, degree=2, budget=DEFAULT_DENSE_BUDGET):
    """DeVore's binary matrix of shape ``q**2 x q**(degree + 1)``.

    Column ``c`` belongs to the polynomial whose coefficient of ``x**t`` is
    the ``t``-th base-``q`` digit of ``c`` (constant term fastest).  It has a
    one in row ``x*q + f(x)`` for every ``x`` in ``Z_q``, scaled to unit norm.
    """
    q = check_prime(q, minimum=2)
    if degree < 1:
        raise ValueError("degree must be >= 1")
    n = q ** (degree + 1)
    if q * q * n > budget:
        raise MemoryError(f"{q * q}x{n} matrix exceeds dense budget of {budget} entries")
    cols = np.arange(n)
    coeffs = np.stack([(cols // q**t) % q for t in range(degree + 1)])
    out = np.zeros((q * q, n))
    for x in range(q):
        fx = np.zeros(n, dtype=np.int64)
        for t in range(degree, -1, -1):
            fx = (fx * x + coeffs[t]) % q
        out[x * q + fx, cols] = 1.0
    return out / np.sqrt(q)


def chirp_matrix(p, budget=DEFAULT_DENSE_BUDGET):
    """Complex ``p x p**2`` chirp matrix; column ``r*p + l`` is ``exp(2 pi i (r t^2 + l t)/p)/sqrt(p)``."""
    p = check_prime(p, minimum=2)
    if p**3 > budget:
        raise MemoryError(f"{p}x{p * p} matrix exceeds dense budget of {budget} entries")
    t = np.arange(p)[:, None]
    r, l = np.divmod(np.arange(p * p), p)
    phase = (r[None, :] * t * t + l[None, :] * t) % p
    return np.exp(2j * np.pi * phase / p) / np.sqrt(p)


def bernoulli_matrix(m, n, seed):
    """I.i.d. equiprobable ``+-1/sqrt(m)`` entries, reproducible from ``seed``."""
    if m < 1 or n < 1:
        raise ValueError("need m, n >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.Philox(seed))
    signs = rng.integers(0, 2, size=(m, n), dtype=np.int8) * 2 - 1
    return signs.astype(np.float64) / np.sqrt(m)


def save_matrix(M, path):
    """Write ``M`` as ``rows cols real|complex`` followed by row-major values.

    Values use ``repr`` so that a load reproduces them bit for bit.
    """
    if isinstance(M, PartialCirculantMatrix):
        M = M.to_dense()
    M = np.atleast_2d(np.asarray(M))
    rows, cols = M.shape
    is_complex = np.iscomplexobj(M)
    with open(path, "w") as fh:
        fh.write(f"{rows} {cols} {'complex' if is_complex else 'real'}\n")
        for row in M:
            if is_complex:
                fh.write(" ".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in row))
            else:
                fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_matrix(path) -> np.ndarray:
    """Read a matrix written by :func:`save_matrix` (or by hand in that format)."""
    text = Path(path).read_text()
    lines = text.strip().splitlines()
    if not lines:
        raise MatrixFormatError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) not in (2, 3):
        raise MatrixFormatError(f"{path}: header must be 'rows cols [real|complex]'")
    try:
        rows, cols = int(header[0]), int(header[1])
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: bad header {lines[0]!r}") from exc
    kind = header[2] if len(header) == 3 else "real"
    if kind not in ("real", "complex") or rows < 1 or cols < 1:
        raise MatrixFormatError(f"{path}: bad header {lines[0]!r}")
    tokens = list(itertools.chain.from_iterable(line.split() for line in lines[1:]))
    if len(tokens) != rows * cols:
        raise MatrixFormatError(f"{path}: expected {rows * cols} values, found {len(tokens)}")
    try:
        if kind == "complex":
            vals = []
            for tok in tokens:
                re, im = tok.split(",")
                vals.append(complex(float(re), float(im)))
            data = np.array(vals, dtype=np.complex128)
        else:
            data = np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: unparsable value") from exc
    return data.reshape(rows, cols)


def write_pgm(M, path):
    """Plain PBM (``P1``) render of a sign pattern: +1 white (0), -1 black (1)."""
    signs = M.sign_matrix() if isinstance(M, PartialCirculantMatrix) else np.sign(np.asarray(M))
    bits = (signs < 0).astype(np.uint8)
    rows, cols = bits.shape
    with open(path, "w") as fh:
        fh.write(f"P1\n{cols} {rows}\n")
        for row in bits:
            fh.write(" ".join(map(str, row.tolist())))
            fh.write("\n")
    return bits
