"""Greedy r-th order sigma-delta quantization and one-stage problem assembly.

The quantizer state obeys ``y - q = D^r u`` where ``D`` is the ``m x m``
first-difference matrix (ones on the diagonal, minus ones below it) and
states before the first sample are zero.  With a midrise alphabet of ``2L``
levels ``{+-(2l - 1) delta / 2}`` the greedy rule never overloads, and hence
keeps ``|u_i| <= delta / 2``, as long as
``max|y| <= (L - (2**r - 1) / 2) * delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .kernels import sigma_delta_greedy
from .operators import LeftMultiplied, as_operator

__all__ = [
    "DifferenceMatrix",
    "PreprocessedFrame",
    "QuantizationRun",
    "OneStageProblem",
    "difference_power",
    "svd_preprocess",
    "stable_range",
    "default_levels",
    "sigma_delta_quantize",
    "assemble_one_stage",
    "QUANTIZATION_CSV_HEADER",
]

QUANTIZATION_CSV_HEADER = "r,delta,levels,m,u_inf,stable"
MAX_ORDER = 3


@dataclass(frozen=True)
class DifferenceMatrix:
    """``D**r`` for the ``m x m`` first-difference matrix ``D``."""

    m: int
    r: int

    def dense(self) -> np.ndarray:
        i, j = np.indices((self.m, self.m))
        lag = i - j
        out = np.zeros((self.m, self.m))
        for t in range(self.r + 1):
            out[lag == t] = (-1) ** t * math.comb(self.r, t)
        return out

    def apply(self, x):
        """``D**r @ x`` by repeated first differences."""
        x = np.asarray(x, dtype=np.float64)
        for _ in range(self.r):
            x = np.diff(x, prepend=0.0)
        return x

    def apply_inverse(self, w):
        """``D**-r @ w`` by repeated cumulative sums."""
        w = np.asarray(w, dtype=np.float64)
        for _ in range(self.r):
            w = np.cumsum(w)
        return w


def difference_power(m: int, r: int) -> DifferenceMatrix:
    if m < 1 or r < 0:
        raise ValueError("need m >= 1 and r >= 0")
    return DifferenceMatrix(int(m), int(r))


@dataclass(frozen=True, eq=False)
class PreprocessedFrame:
    """SVD ``D**r = U diag(sigma) Vt`` with singular values in ascending order.

    Ascending order pairs the smallest singular values with the leading rows
    of the measurement matrix, which is what the restricted-row property
    of the decoder is stated for.
    """

    m: int
    r: int
    U: np.ndarray
    sigma: np.ndarray
    Vt: np.ndarray


@lru_cache(maxsize=32)
def svd_preprocess(m: int, r: int) -> PreprocessedFrame:
    """SVD of ``D**r`` with a deterministic sign convention.

    Each left singular vector is flipped so that its largest-magnitude entry
    is positive (first one wins on ties); the matching right vector is
    flipped with it.
    """
    Dr = difference_power(m, r).dense()
    try:
        U, s, Vt = np.linalg.svd(Dr)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"SVD of D^{r} ({m}x{m}) did not converge") from exc
    U, s, Vt = U[:, ::-1], s[::-1], Vt[::-1, :]
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(m)])
    signs[signs == 0] = 1.0
    U = np.ascontiguousarray(U * signs)
    Vt = np.ascontiguousarray(Vt * signs[:, None])
    for arr in (U, s, Vt):
        arr.setflags(write=False)
    return PreprocessedFrame(m, r, U, np.ascontiguousarray(s), Vt)


def stable_range(r: int, delta: float, levels: int) -> float:
    """Largest ``max|y|`` for which the greedy quantizer provably never overloads."""
    return (levels - (2**r - 1) / 2) * delta


def default_levels(y_inf: float, r: int, delta: float, margin: float = 0.2) -> int:
    """Fewest levels per side whose stable range covers ``(1 + margin) * y_inf``."""
    return max(1, math.ceil((1 + margin) * y_inf / delta + (2**r - 1) / 2))


@dataclass
class QuantizationRun:
    r: int
    delta: float
    levels: int
    y: np.ndarray
    q: np.ndarray
    u: np.ndarray
    stable: bool
    epsilon: float = 0.0

    @property
    def m(self) -> int:
        return self.q.shape[0]

    @property
    def u_inf(self) -> float:
        return float(np.max(np.abs(self.u))) if self.m else 0.0

    @property
    def state_constant(self) -> float:
        """``C_r`` with ``||u||_inf <= C_r * delta``: 1/2 when stable, else measured."""
        return 0.5 if self.stable else self.u_inf / self.delta

    def csv_row(self) -> str:
        return f"{self.r},{self.delta!r},{self.levels},{self.m},{self.u_inf!r},{int(self.stable)}"


def sigma_delta_quantize(y, r: int, delta: float, levels: int | None = None, epsilon: float = 0.0):
    """Greedy r-th order sigma-delta quantization of ``y``.

    Each step picks the alphabet point nearest to the running state (ties
    round up), which minimizes ``|u_i|``.  ``levels=None`` sizes the alphabet
    from ``y`` with a 20% margin.  An overload is reported through
    ``stable=False`` rather than raised.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("y must be a vector")
    if not 0 <= r <= MAX_ORDER:
        raise ValueError(f"order must be in 0..{MAX_ORDER}")
    if delta <= 0:
        raise ValueError("delta must be positive")
    y_inf = float(np.max(np.abs(y))) if y.size else 0.0
    if levels is None:
        levels = default_levels(y_inf, r, delta)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    q, u, overloaded = sigma_delta_greedy(y, int(r), float(delta), int(levels))
    return QuantizationRun(int(r), float(delta), int(levels), y, q, u, not overloaded, float(epsilon))


@dataclass
class OneStageProblem:
    """Data for the two-ball program ``min ||z||_1`` subject to
    ``||D**-r (A_eff z + nu - q)||_2 <= radius`` and ``||nu||_2 <= noise_radius``."""

    A_eff: object
    q: np.ndarray
    frame: PreprocessedFrame
    run: QuantizationRun
    radius: float
    noise_radius: float
    noise: np.ndarray = field(repr=False)

    @property
    def C_r(self) -> float:
        return self.run.state_constant


def assemble_one_stage(Phi, x, r, delta, *, levels=None, epsilon=0.0, rng=None) -> OneStageProblem:
    """Measure ``y = U Phi x + eta``, quantize it, and return the decoder data.

    ``eta`` has i.i.d. entries uniform on ``[-epsilon, epsilon]`` so that
    ``||eta||_2 <= epsilon sqrt(m)``; ``rng`` is required when ``epsilon > 0``.
    """
    op = as_operator(Phi)
    m, _ = op.shape
    frame = svd_preprocess(m, int(r))
    A_eff = LeftMultiplied(frame.U, op)
    y = A_eff.matvec(np.asarray(x, dtype=np.float64))
    if epsilon > 0:
        if rng is None:
            raise ValueError("rng is required for noisy measurements")
        noise = rng.uniform(-epsilon, epsilon, size=m)
    else:
        noise = np.zeros(m)
    run = sigma_delta_quantize(y + noise, r, delta, levels, epsilon)
    radius = run.state_constant * delta * math.sqrt(m)
    return OneStageProblem(A_eff, run.q, frame, run, radius, epsilon * math.sqrt(m), noise)
