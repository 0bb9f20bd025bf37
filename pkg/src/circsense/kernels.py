"""Backend selection for the hot loops.

The compiled extension ``circsense._kernels`` is used when it imports;
otherwise, or when ``CIRCSENSE_PURE_PYTHON=1`` is set, the NumPy versions
in ``circsense._fallback`` are used.  Both expose the same three functions.
"""

from __future__ import annotations

import os

from . import _fallback

__all__ = ["BACKEND", "backends", "circulant_gram_max", "sigma_delta_greedy", "quadratic_char_sums"]

_compiled = None
if os.environ.get("CIRCSENSE_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _fallback
BACKEND = "compiled" if _compiled is not None else "python"

circulant_gram_max = _impl.circulant_gram_max
sigma_delta_greedy = _impl.sigma_delta_greedy
quadratic_char_sums = _impl.quadratic_char_sums


def backends():
    """Map of every importable backend name to its module (for tests and benchmarks)."""
    out = {"python": _fallback}
    if _compiled is not None:
        out["compiled"] = _compiled
    else:
        try:
            from . import _kernels

            out["compiled"] = _kernels
        except ImportError:
            pass
    return out
