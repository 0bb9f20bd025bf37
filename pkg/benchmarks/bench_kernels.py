"""Compare the compiled and pure-Python kernel backends.

Run from the repository root::

    python3 benchmarks/bench_kernels.py [--repeat N]

Each row reports the best wall time per backend and the speedup; every
call's outputs are cross-checked between backends before timing.
"""

import argparse
import time

import numpy as np

from circsense.kernels import backends
from circsense.numtheory import ceil_pow_frac, legendre_table


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases():
    for p in (199, 997, 4001):
        s = np.ascontiguousarray(legendre_table(p))
        yield f"gram_max p={p}", "circulant_gram_max", (s, ceil_pow_frac(p, 3, 4))
    rng = np.random.default_rng(0)
    for r in (1, 2, 3):
        y = rng.uniform(-1, 1, 20000)
        yield f"sigma_delta r={r} m=20000", "sigma_delta_greedy", (y, r, 0.05, 60)
    for p in (53, 101):
        yield f"char_sums p={p}", "quadratic_char_sums", (np.ascontiguousarray(legendre_table(p)),)


def _same(a, b):
    return all(np.array_equal(np.asarray(u), np.asarray(v)) for u, v in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    impls = backends()
    if "compiled" not in impls:
        print("compiled backend not built; only timing the Python fallback")
    names = [n for n in ("compiled", "python") if n in impls]
    print(f"{'kernel':<28}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")
    for label, fname, fargs in cases():
        outs = [getattr(impls[n], fname)(*fargs) for n in names]
        if len(outs) == 2 and not _same(*outs):
            raise SystemExit(f"{label}: backends disagree")
        times = [_best(lambda n=n: getattr(impls[n], fname)(*fargs), args.repeat) for n in names]
        speed = f"{times[1] / times[0]:>9.1f}x" if len(times) == 2 else ""
        print(f"{label:<28}" + "".join(f"{t:>11.4f}s" for t in times) + speed)


if __name__ == "__main__":
    main()
