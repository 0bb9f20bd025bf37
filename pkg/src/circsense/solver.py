"""l1 minimization by ADMM with exact projections.

Both programs alternate a projection onto the constraint set with the block
proximal maps of a stacked variable (soft thresholding for ``z``, a ball
projection for the noise block ``nu``).  Basis pursuit projects onto
``{A z = y}`` with a cached pseudo-inverse of ``A A^T``; the one-stage
decoder projects onto the weighted ball ``||(Phi z + nu - b) / sigma|| <= R``
through an eigen-decomposition and a scalar secular equation.  Operators are
only touched through ``matvec`` and ``adjoint_matvec`` unless they are small
enough to copy densely.

Iterates are polished on guessed supports and a polished point is accepted
only with a KKT certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import DenseOperator, LeftMultiplied, as_operator
from .quantization import svd_preprocess

__all__ = [
    "SolverConfig",
    "RecoveryResult",
    "basis_pursuit",
    "one_stage_recover",
    "snr",
    "ONE_STAGE_CONFIG",
    "SNR_CAP_DB",
    "SUCCESS_DB",
    "RECOVERY_CSV_HEADER",
]

SNR_CAP_DB = 999.0
# relative magnitudes below which iterate entries are treated as zero when polishing
_SUPPORT_THRESHOLDS = (0.0, 1e-6, 1e-3)
# below this many entries a dense product beats the FFT round trip
_DENSE_LIMIT = 1_000_000
SUCCESS_DB = 50.0
RECOVERY_CSV_HEADER = "trial,k,p,m,snr_db,success,iterations"


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 20000
    feasibility_tol: float = 1e-8
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    rho: float = 30.0
    relaxation: float = 1.6
    adaptive_rho: bool = False
    polish: bool = True
    polish_every: int = 25

    def __post_init__(self):
        if self.feasibility_tol <= 0 or self.rel_tol <= 0 or self.abs_tol <= 0 or self.rho <= 0:
            raise ValueError("tolerances and rho must be positive")
        if not 0 < self.relaxation < 2:
            raise ValueError("relaxation must lie in (0, 2)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


# tuned on the two-ball program, which converges best with a softer penalty
ONE_STAGE_CONFIG = SolverConfig(max_iterations=100_000, rel_tol=1e-8, rho=10.0)


@dataclass
class RecoveryResult:
    x: np.ndarray
    iterations: int
    converged: bool
    primal_residual: float
    dual_residual: float
    constraint_residual: float
    certified: bool = False
    nu: np.ndarray | None = field(default=None, repr=False)


def snr(x, xhat, cap=SNR_CAP_DB) -> float:
    """``10 log10(||x|| / ||x - xhat||)`` in dB, capped at ``cap`` for exact recovery.

    This is ten times the log of the norm ratio, not of the power ratio, so
    50 dB means a relative error of 1e-5.
    """
    x = np.asarray(x, dtype=float)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("snr is undefined for x = 0")
    err = np.linalg.norm(x - np.asarray(xhat, dtype=float))
    if err == 0:
        return cap
    return min(cap, 10.0 * math.log10(nx / err))


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _project_ball(v, radius):
    nv = np.linalg.norm(v)
    return v if nv <= radius else v * (radius / nv)


def _operator_columns(op, cols):
    """Columns ``cols`` of an operator, via basis-vector products unless cheaper."""
    if hasattr(op, "A"):
        return op.A[:, cols]
    n = op.shape[1]
    out = np.empty((op.shape[0], len(cols)))
    e = np.zeros(n)
    for k, j in enumerate(cols):
        e[j] = 1.0
        out[:, k] = op.matvec(e)
        e[j] = 0.0
    return out


def _materialize(op, limit):
    """Dense copy of a small operator (rows from adjoint calls); big ones pass through."""
    m, n = op.shape
    if hasattr(op, "A") or m * n > limit:
        return op
    rows = np.empty((m, n))
    e = np.zeros(m)
    for i in range(m):
        e[i] = 1.0
        rows[i] = op.adjoint_matvec(e)
        e[i] = 0.0
    return DenseOperator(rows)


def _gram(op):
    """``A A^T`` through operator calls (one adjoint and one product per row)."""
    if hasattr(op, "A"):
        return op.A @ op.A.T
    m = op.shape[0]
    G = np.empty((m, m))
    e = np.zeros(m)
    for i in range(m):
        e[i] = 1.0
        G[:, i] = op.matvec(op.adjoint_matvec(e))
        e[i] = 0.0
    return 0.5 * (G + G.T)


def _pinv_psd(G):
    w, V = np.linalg.eigh(G)
    keep = w > w.max() * 1e-12 if w.size and w.max() > 0 else np.zeros_like(w, dtype=bool)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    return (V * inv) @ V.T


class _Affine:
    """Projection onto ``{X : K X = c}`` for ``K = [A, d_1 I, d_2 I, ...]``."""

    def __init__(self, op, c, diag_blocks=(), gram=None):
        self.op = op
        self.c = np.asarray(c, dtype=np.float64)
        self.m, self.n = op.shape
        # each extra block enters K as a diagonal (scalar or per-row weights)
        self.diag = tuple(np.broadcast_to(np.asarray(d, dtype=np.float64), (self.m,)) for d in diag_blocks)
        G = _gram(op) if gram is None else gram
        G = G + np.diag(sum(d * d for d in self.diag)) if self.diag else G
        self.Ginv = _pinv_psd(G)
        self.size = self.n + self.m * len(self.diag)

    def apply(self, X):
        z = X[: self.n]
        out = self.op.matvec(z)
        for b, d in enumerate(self.diag):
            out = out + d * X[self.n + b * self.m : self.n + (b + 1) * self.m]
        return out

    def adjoint(self, lam):
        parts = [self.op.adjoint_matvec(lam)] + [d * lam for d in self.diag]
        return np.concatenate(parts)

    def project(self, V):
        return V - self.adjoint(self.Ginv @ (self.apply(V) - self.c))


def _admm(affine, prox, cfg, callback=None):
    """Scaled-form ADMM; ``prox(V, rho)`` is the blockwise proximal map.

    ``callback(X, Z, rho * u, it)`` may return a final result to stop early;
    ``rho * u`` estimates the multiplier of the split ``X = Z``.
    """
    N = affine.size
    rho = cfg.rho
    Z = np.zeros(N)
    Ud = np.zeros(N)
    X = Z
    r_norm = s_norm = float("inf")
    sqrtN = math.sqrt(N)
    next_check = cfg.polish_every
    for it in range(1, cfg.max_iterations + 1):
        X = affine.project(Z - Ud)
        Xr = cfg.relaxation * X + (1 - cfg.relaxation) * Z
        Z_old = Z
        Z = prox(Xr + Ud, rho)
        Ud = Ud + Xr - Z
        r_norm = float(np.linalg.norm(X - Z))
        s_norm = float(rho * np.linalg.norm(Z - Z_old))
        eps_pri = sqrtN * cfg.abs_tol + cfg.rel_tol * max(np.linalg.norm(X), np.linalg.norm(Z))
        eps_dual = sqrtN * cfg.abs_tol + cfg.rel_tol * rho * np.linalg.norm(Ud)
        done = r_norm <= eps_pri and s_norm <= eps_dual
        if callback is not None and (done or it >= next_check):
            # checks thin out geometrically; each one costs a few dense solves
            next_check = it + max(cfg.polish_every, it // 4)
            res = callback(X, Z, rho * Ud, it)
            if res is not None:
                return res, X, Z, it, r_norm, s_norm, True
        if done:
            return None, X, Z, it, r_norm, s_norm, True
        if cfg.adaptive_rho and it % 10 == 0:
            if r_norm > 10 * s_norm:
                rho *= 2.0
                Ud /= 2.0
            elif s_norm > 10 * r_norm:
                rho /= 2.0
                Ud *= 2.0
    return None, X, Z, cfg.max_iterations, r_norm, s_norm, False


def _certify(op, y, support, atol, dual_guess, Ginv, cert_tol=1e-8):
    """Least squares on ``support`` plus a KKT check; ``None`` if either fails.

    The multiplier starts from the ADMM dual mapped into the range of
    ``A^T`` and receives the smallest correction that makes it match the
    signs on the support exactly.  Accepting ``||A^T lam||_inf <= 1 + cert_tol``
    bounds the relative l1 gap by ``cert_tol``.
    """
    n = op.shape[1]
    if support.size == 0:
        return np.zeros(n) if np.linalg.norm(y) <= atol else None
    if support.size > op.shape[0]:
        return None
    AS = _operator_columns(op, support)
    zS, *_ = np.linalg.lstsq(AS, y, rcond=None)
    if np.linalg.norm(AS @ zS - y) > atol or np.any(zS == 0):
        return None
    sgn = np.sign(zS)
    lam0 = Ginv @ op.matvec(dual_guess)
    fix, *_ = np.linalg.lstsq(AS.T, sgn - AS.T @ lam0, rcond=None)
    lam = lam0 + fix
    if np.max(np.abs(AS.T @ lam - sgn)) > cert_tol:
        return None
    if np.max(np.abs(op.adjoint_matvec(lam))) > 1.0 + cert_tol:
        return None
    z = np.zeros(n)
    z[support] = zS
    return z


def _certify_two_ball(phi, qt, sigma, radius, support, sgn, cert_tol=1e-8):
    """Exact minimizer of ``||z||_1`` s.t. ``||(phi z - qt) / sigma|| <= radius`` on a guessed
    support and sign pattern, returned only if it passes the KKT check.

    On the support the optimum is ``z0 - t d`` with ``z0`` the weighted least
    squares fit and ``d`` solving the normal equations for ``sgn``; the residual
    grows as ``||r0||**2 + t**2 d^T B d``, so ``t`` has a closed form.
    """
    n = phi.shape[1]
    wq = qt / sigma
    if support.size == 0:
        return np.zeros(n) if np.linalg.norm(wq) <= radius else None
    if support.size > phi.shape[0]:
        return None
    WP = _operator_columns(phi, support) / sigma[:, None]
    Q, R = np.linalg.qr(WP)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-12 * diag.max():
        return None
    z0 = np.linalg.solve(R, Q.T @ wq)
    r0 = WP @ z0 - wq
    slack = radius * radius - float(r0 @ r0)
    if slack <= 0:
        return None
    h = np.linalg.solve(R.T, sgn)
    d = np.linalg.solve(R, h)
    t = math.sqrt(slack / float(h @ h))
    zS = z0 - t * d
    if np.any(np.sign(zS) != sgn):
        return None
    res = (r0 - t * (WP @ d)) / sigma
    corr = phi.adjoint_matvec(res)
    # r0 carries rounding of order eps * ||wq|| that the division by t amplifies
    noise = 64 * np.finfo(float).eps * np.linalg.norm(wq) * np.linalg.norm(WP, axis=0).max() / t
    if np.max(np.abs(corr)) / t > 1.0 + cert_tol + noise:
        return None
    z = np.zeros(n)
    z[support] = zS
    return z


def _support_guesses(Z, dual, m):
    """Distinct candidate supports (size <= m) from the primal and dual iterates."""
    absZ = np.abs(Z)
    top = float(absZ.max()) if Z.size else 0.0
    order = np.argsort(-absZ, kind="stable")
    cands = [np.flatnonzero(absZ > rel * top) for rel in _SUPPORT_THRESHOLDS]
    cands.append(np.sort(order[: min(m, np.count_nonzero(absZ))]))
    absD = np.abs(dual)
    for slack in (1e-6, 1e-3):
        cands.append(np.flatnonzero(absD >= 1.0 - slack))
    seen = set()
    for c in cands:
        key = c.tobytes()
        if c.size <= m and key not in seen:
            seen.add(key)
            yield c


def basis_pursuit(A, y, cfg: SolverConfig | None = None) -> RecoveryResult:
    """Solve ``min ||z||_1`` subject to ``A z = y``.

    ``A`` may be an array, a :class:`~circsense.constructions.PartialCirculantMatrix`
    or any operator with ``shape``, ``matvec`` and ``adjoint_matvec``.
    """
    cfg = cfg or SolverConfig()
    op = _materialize(as_operator(A), _DENSE_LIMIT)
    y = np.asarray(y, dtype=np.float64)
    m, n = op.shape
    if y.shape != (m,):
        raise ValueError(f"y must have length {m}")
    # solve for y / scale so that rho is meaningful independently of the data scale
    scale = float(np.max(np.abs(op.adjoint_matvec(y)))) if m else 0.0
    if scale == 0.0:
        scale = 1.0
    ys = y / scale
    affine = _Affine(op, ys)
    ny = max(1.0, float(np.linalg.norm(y)))

    def prox(V, rho):
        return _soft(V, 1.0 / rho)

    def polish(X, Z, dual, it):
        if not cfg.polish:
            return None
        for support in _support_guesses(Z, dual, m):
            z = _certify(op, ys, support, cfg.feasibility_tol * ny / scale, dual, affine.Ginv)
            if z is not None:
                return z
        return None

    certified, X, Z, it, r_norm, s_norm, done = _admm(affine, prox, cfg, polish)
    if certified is not None:
        xhat = certified * scale
    else:
        # X satisfies the constraint exactly up to round-off; Z is sparse but not feasible
        xhat = X * scale
    feas = float(np.linalg.norm(op.matvec(xhat) - y))
    converged = done and feas <= cfg.feasibility_tol * ny
    return RecoveryResult(xhat, it, converged, r_norm, s_norm, feas, certified=certified is not None)


class _WeightedBall:
    """Projection onto ``{X : ||B X - b||_2 <= radius}`` for a wide full-row-rank ``B``.

    ``B = diag(1/sigma) [Phi, I]`` (the identity block only with noise).  With
    ``B B^T = P diag(s^2) P^T`` the projection of ``V`` is
    ``V - B^T P (lam e / (1 + lam s^2))`` where ``e = P^T (B V - b)`` and
    ``lam >= 0`` solves ``sum(e^2 / (1 + lam s^2)^2) = radius^2``.  Only one
    product and one adjoint product with ``Phi`` are needed per projection.
    """

    def __init__(self, op, sigma, b, radius, with_noise, gram=None):
        self.op = op
        self.sigma = sigma
        self.b = b
        self.radius = radius
        self.m, self.n = op.shape
        self.with_noise = with_noise
        self.size = self.n + (self.m if with_noise else 0)
        G = _gram(op) if gram is None else gram
        if with_noise:
            G = G + np.eye(self.m)
        w, V = np.linalg.eigh(G)
        if w.min() <= w.max() * 1e-12:
            raise np.linalg.LinAlgError("the measurement operator is rank deficient")
        root = (V * np.sqrt(w)) @ V.T
        P, svals, _ = np.linalg.svd(root / sigma[:, None])
        self.P = P
        self.s2 = svals * svals

    def residual(self, X):
        out = self.op.matvec(X[: self.n])
        if self.with_noise:
            out = out + X[self.n :]
        return (out - self.b) / self.sigma

    def project(self, V):
        e = self.P.T @ self.residual(V)
        e2 = e * e
        if math.sqrt(float(e2.sum())) <= self.radius:
            return V
        lam = _secular_root(e2, self.s2, self.radius)
        y = (self.P @ (lam * e / (1.0 + lam * self.s2))) / self.sigma
        out = V.copy()
        out[: self.n] -= self.op.adjoint_matvec(y)
        if self.with_noise:
            out[self.n :] -= y
        return out


def _secular_root(e2, s2, radius):
    """``lam >= 0`` with ``sum(e2 / (1 + lam s2)^2) = radius^2`` (zero radius gives ``inf``).

    ``1 / sqrt(h(lam))`` is concave and increasing, so Newton from zero climbs
    to the root without overshooting.
    """
    if radius == 0:
        return math.inf
    lam = 0.0
    for _ in range(100):
        d = 1.0 + lam * s2
        h = float(np.sum(e2 / (d * d)))
        norm = math.sqrt(h)
        if norm - radius <= 1e-14 * radius:
            break
        dh = float(np.sum(e2 * s2 / (d * d * d)))
        step = (1.0 / radius - 1.0 / norm) * h * norm / dh
        lam += step
        if step <= 1e-16 * lam:
            break
    return lam


def one_stage_recover(A_eff, q, r, delta, C_r, epsilon=0.0, cfg: SolverConfig | None = None, frame=None):
    """Solve the sigma-delta one-stage decoder

        min ||z||_1  s.t.  ||D^-r (A_eff z + nu - q)||_2 <= C_r delta sqrt(m),
                           ||nu||_2 <= epsilon sqrt(m).

    With ``D^r = U diag(sigma) V^T`` the first constraint reads
    ``||(U^T A_eff z + U^T nu - U^T q) / sigma||_2 <= radius``, so ``D^-r`` is
    never formed: ADMM alternates an exact projection onto that set with
    soft thresholding (and a ball projection for ``U^T nu``).  Without noise
    the iterate is polished to the exact optimum on a guessed support
    whenever that point passes a KKT check.  Otherwise the less infeasible of
    the two ADMM iterates is returned, pulled toward the interior point
    ``z_ls`` (least-norm solution of ``U^T A_eff z = U^T q``) only if it still
    violates a constraint by more than the feasibility tolerance.
    """
    cfg = cfg or ONE_STAGE_CONFIG
    op = as_operator(A_eff)
    q = np.asarray(q, dtype=np.float64)
    m, n = op.shape
    if q.shape != (m,):
        raise ValueError(f"q must have length {m}")
    if delta < 0 or C_r < 0 or epsilon < 0:
        raise ValueError("delta, C_r and epsilon must be non-negative")
    frame = frame or svd_preprocess(m, int(r))
    sigma = np.asarray(frame.sigma)
    radius = C_r * delta * math.sqrt(m)
    noise_radius = epsilon * math.sqrt(m)
    phi = _materialize(LeftMultiplied(frame.U.T, op), _DENSE_LIMIT)
    qt = frame.U.T @ q
    # the program is positively homogeneous in (q, radii); solve a unit-scale copy
    scale = float(np.max(np.abs(phi.adjoint_matvec(qt)))) if m else 0.0
    if scale == 0.0:
        scale = 1.0
    radius_s, noise_radius_s = radius / scale, noise_radius / scale
    with_noise = noise_radius > 0
    gram = _gram(phi)
    ball = _WeightedBall(phi, sigma, qt / scale, radius_s, with_noise, gram=gram)

    def prox(V, rho):
        out = np.empty_like(V)
        out[:n] = _soft(V[:n], 1.0 / rho)
        if with_noise:
            out[n:] = _project_ball(V[n:], noise_radius_s)
        return out

    def polish(X, Z, dual, it):
        if with_noise or not cfg.polish:
            return None
        for support in _support_guesses(Z[:n], dual[:n], m):
            sgn = np.sign(Z[support])
            sgn[sgn == 0] = -np.sign(dual[support][sgn == 0])
            if np.any(sgn == 0):
                continue
            z = _certify_two_ball(phi, qt / scale, sigma, radius_s, support, sgn)
            if z is not None:
                return z
        return None

    certified, X, Z, it, r_norm, s_norm, done = _admm(ball, prox, cfg, polish)
    def weighted(zv, nuv):
        return float(np.linalg.norm((phi.matvec(zv) + nuv - qt) / sigma))

    def split(V):
        return V[:n] * scale, (V[n:] * scale if with_noise else np.zeros(m))

    def excess_of(zv, nuv):
        return max(0.0, weighted(zv, nuv) - radius) + max(0.0, float(np.linalg.norm(nuv)) - noise_radius)

    if certified is not None:
        z, nu_t = split(certified)
    else:
        # for tiny radii Z can trail the thin feasible tube while the projected
        # iterate X sits on it with the same objective
        z, nu_t = split(Z)
        zx, nux = split(X)
        if excess_of(zx, nux) < excess_of(z, nu_t):
            z, nu_t = zx, nux
    g = weighted(z, nu_t)
    if excess_of(z, nu_t) > cfg.feasibility_tol * max(1.0, radius):
        z_ls = phi.adjoint_matvec(_pinv_psd(gram) @ qt)
        g_ls = weighted(z_ls, np.zeros(m))
        # g is convex along the segment, so the blend below lands inside the constraint set
        t = (g - radius) / (g - g_ls) if g > g_ls else 1.0
        t = min(1.0, max(t, 0.0) * (1 + 1e-9) + 1e-15)
        z = (1 - t) * z + t * z_ls
        nu_t = (1 - t) * nu_t
        g = weighted(z, nu_t)
    excess = max(0.0, g - radius) + max(0.0, float(np.linalg.norm(nu_t)) - noise_radius)
    converged = done and excess <= cfg.feasibility_tol * max(1.0, radius)
    return RecoveryResult(
        z, it, converged, r_norm, s_norm, excess, certified=certified is not None,
        nu=frame.U @ nu_t if with_noise else np.zeros(m),
    )
