"""Reproducible recovery experiments.

Every random draw comes from a Philox stream keyed by
``(seed, experiment, p, k, trial)`` (plus a purpose tag), so cells are
independent of each other and of the order in which they run: adding a
prime to a sweep leaves the other cells' numbers unchanged.  Signals in a
cell are shared by all constructions, which makes curve comparisons paired.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import chirp_coherence, coherence, loglog_slope
from .constructions import (
    bernoulli_matrix,
    devore_matrix,
    legendre_partial_circulant,
    load_matrix,
    random_legendre_matrix,
    write_pgm,
)
from .numtheory import ceil_pow_frac, check_prime, floor_pow_frac, is_prime
from .quantization import assemble_one_stage, difference_power
from .solver import SUCCESS_DB, SolverConfig, basis_pursuit, one_stage_recover, snr

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentSpec",
    "ExperimentReport",
    "TrialRecord",
    "substream",
    "sparse_signal",
    "build_matrix",
    "exp1_coherence_sweep",
    "exp2_success_vs_sparsity",
    "exp3_success_vs_p",
    "exp4_max_sparsity",
    "exp_quantized",
    "render_matrix",
]

EXP1, EXP2, EXP3, EXP4, EXPQ, ADHOC = 1, 2, 3, 4, 5, 6
# purpose tags folded into stream keys
_SIGNAL, _MATRIX, _NOISE = 0, 1, 2
_CONSTRUCTION_CODES = {"legendre": 0, "bernoulli": 1, "devore": 2, "chirp": 3, "random-legendre": 4}


@dataclass
class ExperimentSpec:
    experiment: str
    primes: list = field(default_factory=list)
    ks: list = field(default_factory=list)
    trials: int = 10
    seed: int = 0
    constructions: tuple = ("legendre",)
    n: int | None = None
    alpha: tuple = (3, 4)
    floor_m: bool = False
    r: int = 2
    delta: float = 0.05
    levels: int | None = None
    epsilon: float = 0.0
    threshold_db: float = SUCCESS_DB
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for p in self.primes:
            check_prime(p)


@dataclass
class TrialRecord:
    construction: str
    trial: int
    k: int
    p: int
    m: int
    snr_db: float
    success: bool
    iterations: int
    converged: bool = True

    def csv_row(self):
        return [self.trial, self.k, self.p, self.m, repr(self.snr_db), int(self.success), self.iterations]


@dataclass
class ExperimentReport:
    """Aggregate rows (one list per CSV line) plus per-trial records."""

    header: list
    rows: list
    trials: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    nonconverged: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()

    def trials_csv(self, construction=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "k", "p", "m", "snr_db", "success", "iterations"])
        for t in self.trials:
            if construction is None or t.construction == construction:
                w.writerow(t.csv_row())
        return buf.getvalue()


def substream(seed, *key) -> np.random.Generator:
    """Counter-based generator for one cell; keys are non-negative integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


def sparse_signal(rng, n, k):
    """``k``-sparse vector in ``R^n``: uniform support, standard normal values."""
    if not 0 <= k <= n:
        raise ValueError(f"sparsity {k} outside [0, {n}]")
    x = np.zeros(n)
    support = np.sort(rng.choice(n, size=k, replace=False))
    x[support] = rng.standard_normal(k)
    return x, support


def _devore_size(m, n):
    """Prime ``q`` whose square is nearest ``m``, and the smallest degree reaching ``n`` columns."""
    q = min((c for c in range(2, 2 * math.isqrt(m) + 3) if is_prime(c)), key=lambda c: (abs(c * c - m), c))
    degree = 1
    while q ** (degree + 1) < n:
        degree += 1
    return q, degree


def build_matrix(construction, p, *, n=None, alpha=(3, 4), floor_m=False, seed=0, experiment=ADHOC):
    """Dense real measurement matrix for ``construction``, restricted to ``n`` columns.

    ``construction`` is one of ``legendre``, ``bernoulli``, ``devore``,
    ``random-legendre`` or ``file:<path>``.  Bernoulli and random Legendre
    matrices draw from a stream keyed by ``(seed, experiment, p)``.
    """
    rows = (floor_pow_frac if floor_m else ceil_pow_frac)(p, *alpha)
    if construction == "legendre":
        M = legendre_partial_circulant(p, *alpha, floor=floor_m)
        A = M.to_dense()
    elif construction == "bernoulli":
        rng = substream(seed, experiment, p, _MATRIX, _CONSTRUCTION_CODES["bernoulli"])
        A = bernoulli_matrix(rows, n or p, rng)
    elif construction == "devore":
        q, degree = _devore_size(rows, n or p)
        A = devore_matrix(q, degree)
    elif construction == "random-legendre":
        rng = substream(seed, experiment, p, _MATRIX, _CONSTRUCTION_CODES["random-legendre"])
        A = random_legendre_matrix(p, rows, n or p, int(rng.integers(0, p)))
    elif construction.startswith("file:"):
        A = load_matrix(construction[5:])
    elif construction == "chirp":
        raise ValueError("the chirp matrix is complex; recovery experiments need real matrices")
    else:
        raise ValueError(f"unknown construction {construction!r}")
    if n is not None:
        if A.shape[1] < n:
            raise ValueError(f"{construction}: has {A.shape[1]} columns, need {n}")
        A = np.ascontiguousarray(A[:, :n])
    return A


def _map(fn, tasks, workers):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _bp_trial(A, x, cfg, threshold_db):
    res = basis_pursuit(A, A @ x, cfg)
    value = snr(x, res.x)
    return value, value > threshold_db, res.iterations, res.converged


# ---------------------------------------------------------------- experiment 1


def _coherence_task(task):
    construction, p, alpha = task
    if construction == "chirp":
        return chirp_coherence(p)
    return coherence(legendre_partial_circulant(p, *alpha))


def exp1_coherence_sweep(spec: ExperimentSpec) -> ExperimentReport:
    """Coherence per prime for each construction, with log-log slopes."""
    rows, summary = [], {}
    for construction in spec.constructions:
        if construction not in ("legendre", "chirp"):
            raise ValueError("experiment 1 supports the legendre and chirp constructions")
        reports = _map(_coherence_task, [(construction, p, spec.alpha) for p in spec.primes], spec.workers)
        for rep in reports:
            rows.append([construction, rep.p, rep.m, rep.mu, rep.bound, rep.a, rep.b])
        if len(reports) >= 2:
            summary[f"{construction}_slope"] = loglog_slope([r.p for r in reports], [r.mu for r in reports])
        over = [r.p for r in reports if construction == "legendre" and r.mu > min(1.0, r.bound)]
        if construction == "legendre":
            summary["legendre_bound_violations"] = over
    header = ["construction", "p", "m", "mu", "bound", "argmax_a", "argmax_b"]
    return ExperimentReport(header, rows, summary=summary)


# ---------------------------------------------------------------- experiment 2


def _exp2_cell(task):
    spec, k, mats, m_by_name = task
    cfg = SolverConfig()
    out = []
    for trial in range(spec.trials):
        x, _ = sparse_signal(substream(spec.seed, EXP2, spec.primes[0], k, trial, _SIGNAL), spec.n, k)
        for name, A in mats.items():
            value, ok, its, conv = _bp_trial(A, x, cfg, spec.threshold_db)
            out.append(TrialRecord(name, trial, k, spec.primes[0], m_by_name[name], value, ok, its, conv))
    return out


def exp2_success_vs_sparsity(spec: ExperimentSpec) -> ExperimentReport:
    """Fraction of successful recoveries versus sparsity for several matrices.

    Defaults: ``p = 997`` (178 rows), signals in
    ``R^300``, every matrix restricted to its first 300 columns.
    """
    p = spec.primes[0] if spec.primes else 997
    spec.primes = [p]
    spec.n = spec.n or 300
    mats = {}
    for name in spec.constructions:
        try:
            mats[name] = build_matrix(name, p, n=spec.n, alpha=spec.alpha, floor_m=spec.floor_m,
                                      seed=spec.seed, experiment=EXP2)
        except (OSError, ValueError) as exc:
            if not name.startswith("file:"):
                raise
            warnings.warn(f"skipping {name}: {exc}", stacklevel=2)
    m_by_name = {name: A.shape[0] for name, A in mats.items()}
    records = [r for cell in _map(_exp2_cell, [(spec, k, mats, m_by_name) for k in spec.ks], spec.workers)
               for r in cell]
    rows = []
    for name in mats:
        for k in spec.ks:
            cell = [r for r in records if r.construction == name and r.k == k]
            rows.append([name, k, m_by_name[name], sum(r.success for r in cell) / len(cell)])
    return ExperimentReport(["construction", "k", "m", "f"], rows, records,
                            nonconverged=sum(not r.converged for r in records))


# ---------------------------------------------------------------- experiment 3


def _exp3_cell(task):
    spec, p = task
    cfg = SolverConfig()
    mats = {name: build_matrix(name, p, n=spec.n, alpha=spec.alpha, floor_m=spec.floor_m,
                               seed=spec.seed, experiment=EXP3)
            for name in spec.constructions}
    out = []
    for k in spec.ks:
        for trial in range(spec.trials):
            x, _ = sparse_signal(substream(spec.seed, EXP3, p, k, trial, _SIGNAL), spec.n, k)
            for name, A in mats.items():
                value, ok, its, conv = _bp_trial(A, x, cfg, spec.threshold_db)
                out.append(TrialRecord(name, trial, k, p, A.shape[0], value, ok, its, conv))
    return out


def exp3_success_vs_p(spec: ExperimentSpec) -> ExperimentReport:
    """Fraction of successful recoveries versus ``p`` at fixed sparsity levels.

    Uses ``floor(p**(3/4))`` rows and the first 40 columns by default.
    """
    spec.n = spec.n or 40
    if any(k > spec.n for k in spec.ks):
        raise ValueError(f"sparsity cannot exceed the signal length {spec.n}")
    records = [r for cell in _map(_exp3_cell, [(spec, p) for p in spec.primes], spec.workers) for r in cell]
    rows = []
    for name in spec.constructions:
        for k in spec.ks:
            for p in spec.primes:
                cell = [r for r in records if r.construction == name and r.k == k and r.p == p]
                rows.append([name, k, p, cell[0].m, sum(r.success for r in cell) / len(cell)])
    return ExperimentReport(["construction", "k", "p", "m", "f"], rows, records,
                            nonconverged=sum(not r.converged for r in records))


# ---------------------------------------------------------------- experiment 4


def _exp4_cell(task):
    spec, p = task
    cfg = SolverConfig()
    A = build_matrix("legendre", p, n=spec.n, alpha=spec.alpha)
    m = A.shape[0]
    out = []
    g = 0
    for k in range(1, min(m, spec.n) + 1):
        ok_level = True
        for trial in range(spec.trials):
            x, _ = sparse_signal(substream(spec.seed, EXP4, p, k, trial, _SIGNAL), spec.n, k)
            value, ok, its, conv = _bp_trial(A, x, cfg, spec.threshold_db)
            out.append(TrialRecord("legendre", trial, k, p, m, value, ok, its, conv))
            if not ok:
                # the minimum SNR is already below threshold; further trials cannot change g
                ok_level = False
                break
        if not ok_level:
            break
        g = k
    return p, m, g, out


def exp4_max_sparsity(spec: ExperimentSpec) -> ExperimentReport:
    """Largest sparsity ``g(p)`` at which every trial succeeds, per prime."""
    spec.n = spec.n or 100
    cells = _map(_exp4_cell, [(spec, p) for p in spec.primes], spec.workers)
    rows, records = [], []
    for p, m, g, out in cells:
        rows.append([p, m, g, p**0.75])
        records.extend(out)
    summary = {}
    good = [(p, g) for p, _, g, _ in cells if g > 0]
    if len(good) >= 2:
        summary["slope"] = loglog_slope([p for p, _ in good], [g for _, g in good])
        ps = np.array([p for p, *_ in cells], dtype=float)
        gs = np.array([g for _, _, g, _ in cells], dtype=float)
        summary["trend"] = float(np.polyfit(ps, gs, 1)[0])
    return ExperimentReport(["p", "m", "g", "p_pow_3_4"], rows, records, summary,
                            nonconverged=sum(not r.converged for r in records))


# ---------------------------------------------------------------- quantized


def _expq_cell(task):
    spec, p, k = task
    cfg = None
    M = legendre_partial_circulant(p, *spec.alpha, floor=spec.floor_m)
    errors, feasible, stable, nonconv = [], 0, 0, 0
    for trial in range(spec.trials):
        x, _ = sparse_signal(substream(spec.seed, EXPQ, p, k, trial, _SIGNAL), p, k)
        prob = assemble_one_stage(M, x, spec.r, spec.delta, levels=spec.levels, epsilon=spec.epsilon,
                                  rng=substream(spec.seed, EXPQ, p, k, trial, _NOISE))
        resid = difference_power(M.m, spec.r).apply_inverse(prob.A_eff.matvec(x) + prob.noise - prob.q)
        feasible += float(np.linalg.norm(resid)) <= prob.radius + 1e-6
        stable += prob.run.stable
        res = one_stage_recover(prob.A_eff, prob.q, spec.r, spec.delta, prob.C_r, spec.epsilon, cfg,
                                frame=prob.frame)
        nonconv += not res.converged
        errors.append(float(np.linalg.norm(x - res.x)))
    return [p, M.m, k, statistics.median(errors), float(np.mean(errors)),
            feasible / spec.trials, stable / spec.trials], nonconv


def exp_quantized(spec: ExperimentSpec) -> ExperimentReport:
    """Median one-stage reconstruction error per prime at fixed sparsity."""
    k = spec.ks[0]
    cells = _map(_expq_cell, [(spec, p, k) for p in spec.primes], spec.workers)
    rows = [row for row, _ in cells]
    header = ["p", "m", "k", "median_error", "mean_error", "feasible_fraction", "stable_fraction"]
    summary = {}
    if len(rows) >= 2:
        summary["error_slope"] = loglog_slope([r[1] for r in rows], [r[3] for r in rows])
    return ExperimentReport(header, rows, summary=summary, nonconverged=sum(n for _, n in cells))


def render_matrix(p, path, alpha=(3, 4), floor_m=False):
    """Write the sign pattern of the Legendre matrix as a plain PBM bitmap."""
    return write_pgm(legendre_partial_circulant(p, *alpha, floor=floor_m), path)
