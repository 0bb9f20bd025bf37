"""Deterministic Legendre partial circulant matrices for compressed sensing."""

from .kernels import BACKEND
from .numtheory import ceil_pow_frac, floor_pow_frac, is_prime, legendre_symbol, primes_in_range
from .constructions import (
    PartialCirculantMatrix,
    bernoulli_matrix,
    chirp_matrix,
    devore_matrix,
    legendre_partial_circulant,
    load_matrix,
    random_legendre_matrix,
    save_matrix,
    to_dense,
)
from .circulant import CirculantOperator, gram_column_inner
from .analysis import coherence, coherence_bound, p1_check
from .quantization import sigma_delta_quantize, assemble_one_stage
from .solver import SolverConfig, basis_pursuit, one_stage_recover, snr

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ceil_pow_frac",
    "floor_pow_frac",
    "is_prime",
    "legendre_symbol",
    "primes_in_range",
    "PartialCirculantMatrix",
    "bernoulli_matrix",
    "chirp_matrix",
    "devore_matrix",
    "legendre_partial_circulant",
    "load_matrix",
    "random_legendre_matrix",
    "save_matrix",
    "to_dense",
    "CirculantOperator",
    "gram_column_inner",
    "coherence",
    "coherence_bound",
    "p1_check",
    "sigma_delta_quantize",
    "assemble_one_stage",
    "SolverConfig",
    "basis_pursuit",
    "one_stage_recover",
    "snr",
]
