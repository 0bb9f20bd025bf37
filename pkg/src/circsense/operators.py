"""Minimal linear-operator protocol: ``shape``, ``matvec``, ``adjoint_matvec``."""

from __future__ import annotations

import numpy as np

from .circulant import CirculantOperator
from .constructions import PartialCirculantMatrix

__all__ = ["DenseOperator", "FirstColumns", "LeftMultiplied", "as_operator"]


class DenseOperator:
    """Wraps a real 2-D array."""

    def __init__(self, A):
        A = np.asarray(A)
        if A.ndim != 2:
            raise ValueError("expected a 2-D array")
        if np.iscomplexobj(A):
            raise ValueError("solvers work over the reals")
        self.A = np.ascontiguousarray(A, dtype=np.float64)
        self.shape = self.A.shape

    def matvec(self, x):
        return self.A @ x

    def adjoint_matvec(self, y):
        return self.A.T @ y


class FirstColumns:
    """Restriction of an operator to its first ``n`` columns."""

    def __init__(self, op, n):
        m, full = op.shape
        if not 1 <= n <= full:
            raise ValueError(f"cannot keep {n} of {full} columns")
        self.op = op
        self.shape = (m, n)
        self._full = full

    def matvec(self, x):
        padded = np.zeros(self._full)
        padded[: self.shape[1]] = x
        return self.op.matvec(padded)

    def adjoint_matvec(self, y):
        return self.op.adjoint_matvec(y)[: self.shape[1]]


class LeftMultiplied:
    """``U @ op`` for a dense square ``U``."""

    def __init__(self, U, op):
        U = np.asarray(U, dtype=np.float64)
        if U.shape != (op.shape[0], op.shape[0]):
            raise ValueError("U must be square and match the operator's rows")
        self.U = U
        self.op = op
        self.shape = op.shape

    def matvec(self, x):
        return self.U @ self.op.matvec(x)

    def adjoint_matvec(self, y):
        return self.op.adjoint_matvec(self.U.T @ y)


def as_operator(A):
    """Return ``A`` as an object with ``shape``, ``matvec`` and ``adjoint_matvec``."""
    if isinstance(A, PartialCirculantMatrix):
        return CirculantOperator(A)
    if hasattr(A, "matvec") and hasattr(A, "adjoint_matvec") and hasattr(A, "shape"):
        return A
    return DenseOperator(A)
