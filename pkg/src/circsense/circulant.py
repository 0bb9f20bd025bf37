"""FFT-based products with a Legendre partial circulant matrix.

Row ``i`` of the matrix is the generator cyclically shifted right by ``i``,
so ``(A x)_i = sum_k g[k] x[(k + i) % p]`` is a circular correlation and
``A^T y`` is a circular convolution of the generator with zero-padded ``y``.
Both are evaluated with real FFTs of length ``p``.
"""

from __future__ import annotations

import numpy as np

from .constructions import PartialCirculantMatrix
from .kernels import circulant_gram_max

__all__ = ["CirculantOperator", "gram_column_inner", "gram_column_inner_int", "max_gram_entry"]


class CirculantOperator:
    """Matrix-free view of a :class:`PartialCirculantMatrix`.

    Immutable after construction; ``matvec`` and ``adjoint_matvec`` allocate
    their own workspace, so concurrent calls are safe.
    """

    def __init__(self, source: PartialCirculantMatrix):
        self.source = source
        gen = source.generator.astype(np.float64)
        spectrum = np.fft.fft(gen)
        spectrum.setflags(write=False)
        self.spectrum = spectrum
        self._rspec = np.fft.rfft(gen)
        self._scale = source.scale

    @property
    def shape(self):
        return self.source.shape

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        m, p = self.shape
        if x.shape != (p,):
            raise ValueError(f"expected vector of length {p}, got shape {x.shape}")
        full = np.fft.irfft(np.conj(self._rspec) * np.fft.rfft(x), n=p)
        return full[:m] * self._scale

    def adjoint_matvec(self, y):
        y = np.asarray(y, dtype=np.float64)
        m, p = self.shape
        if y.shape != (m,):
            raise ValueError(f"expected vector of length {m}, got shape {y.shape}")
        padded = np.zeros(p)
        padded[:m] = y
        return np.fft.irfft(self._rspec * np.fft.rfft(padded), n=p) * self._scale

    def restrict(self, rows: int) -> "CirculantOperator":
        return CirculantOperator(self.source.restrict(rows))


def _source(op):
    return op.source if isinstance(op, CirculantOperator) else op


def gram_column_inner_int(op, a: int, b: int) -> int:
    """``m * <column a, column b>`` as an exact integer (zero-based columns)."""
    M = _source(op)
    p, m = M.p, M.m
    if not (0 <= a < p and 0 <= b < p):
        raise IndexError(f"column index out of range for p={p}")
    i = np.arange(m)
    g = M.generator.astype(np.int64)
    return int(np.dot(g[(a - i) % p], g[(b - i) % p]))


def gram_column_inner(op, a: int, b: int) -> float:
    """Inner product of columns ``a`` and ``b`` of the normalized matrix."""
    return gram_column_inner_int(op, a, b) / _source(op).m


def max_gram_entry(op):
    """``(value, a, b)``: largest off-diagonal ``|m * <col a, col b>|`` with ``a < b``."""
    M = _source(op)
    return circulant_gram_max(np.ascontiguousarray(M.generator, dtype=np.int8), M.m)
