"""The three steps of the sequential coefficient-selection algorithm.

Step I picks the integer factor pairs (d_l, e_l) of the two equations by
reducing a 2-D lattice whose Gram matrix encodes their rates; in two
dimensions Gauss-Lagrange reduction attains both successive minima, so
this step is exact.  Step II picks the interference combination c by a
semidefinite relaxation of a min-max integer quadratic program, solved
with a self-contained ADMM splitting, then rounds with a local repair.
Step III picks the desired combination a by searching integer points on
slowest-descent lines through the continuous minimizer of the relaxed
problem, with the search radius capped by the zero-rate norm bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ifsim import linalg
from ifsim.channel import ReceiverContext
from ifsim.rates import f_l


class TheoremViolation(Exception):
    """The 2x2 factor Gram matrix failed its positive-definiteness guarantee."""


class SolverStall(Exception):
    """The SDP splitting did not reach tolerance within the iteration cap."""


class SingularCenter(Exception):
    """The continuous center system could not be solved."""


class NoCandidate(Exception):
    """Every visited integer point was zero or dependent on earlier picks."""


SDP_MAX_ITERS = 5000
SDP_RELAX = 1.6


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the per-stage search.

    w: number of slowest-descent lines (None means all directions).
    r_max: cap on the integer search radius along each line.
    factor_bound: box half-width used by exhaustive factor-pair fallbacks.
    sdp_tol: relative KKT tolerance of the SDP splitting.
    delta: convergence threshold on the stage rate.
    max_iters: iteration cap of the per-stage loop.
    """

    w: int | None = None
    r_max: int = 8
    factor_bound: int = 10
    sdp_tol: float = 1e-6
    delta: float = 1e-3
    max_iters: int = 50

    def __post_init__(self):
        if self.w is not None and self.w < 1:
            raise ValueError("w must be >= 1 when given")
        if self.r_max < 1 or self.factor_bound < 1 or self.max_iters < 1:
            raise ValueError("r_max, factor_bound and max_iters must be >= 1")
        if not (self.sdp_tol > 0 and self.delta > 0):
            raise ValueError("sdp_tol and delta must be positive")


def round_half_away(x) -> np.ndarray:
    """Nearest integer with .5 ties rounded away from zero."""
    x = np.asarray(x, dtype=float)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


# ---------------------------------------------------------------------------
# Step I: factor pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GramU:
    """2x2 positive definite Gram matrix of the factor lattice."""

    u: np.ndarray


def build_U(ctx: ReceiverContext, a, c) -> GramU:
    """Gram matrix whose form [d,e] U [d,e]^T equals f_l for any factor pair.

    Positive definiteness is guaranteed for every nonzero a and c; a
    violation means broken inputs, so construction checks and fails loudly.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    if not a.any() or not c.any():
        raise ValueError("build_U requires nonzero a and c")
    cross = float(a @ (ctx.g_ac @ c))
    u = np.array([
        [float(a @ ctx.g_aa @ a), -cross],
        [-cross, float(c @ ctx.g_cc @ c)],
    ])
    trace = u[0, 0] + u[1, 1]
    min_eig = 0.5 * trace - math.sqrt(max(0.25 * (u[0, 0] - u[1, 1]) ** 2 + u[0, 1] ** 2, 0.0))
    if min_eig <= 1e-10 * trace:
        raise TheoremViolation(f"factor Gram matrix has min eigenvalue {min_eig:.3e}")
    return GramU(u=u)


def step1_factors(gram: GramU):
    """Two independent integer factor pairs minimizing the larger Gram form.

    Gauss-Lagrange reduction of the 2-D lattice: the reduced basis attains
    both successive minima, so the returned objective is exact.
    """
    u = gram.u

    def form(v):
        return u[0, 0] * v[0] * v[0] + 2.0 * u[0, 1] * v[0] * v[1] + u[1, 1] * v[1] * v[1]

    def inner(v, w):
        return u[0, 0] * v[0] * w[0] + u[0, 1] * (v[0] * w[1] + v[1] * w[0]) + u[1, 1] * v[1] * w[1]

    b1, b2 = (1, 0), (0, 1)
    for _ in range(256):
        if form(b2) < form(b1):
            b1, b2 = b2, b1
        mu = int(round_half_away(inner(b1, b2) / form(b1))[()])
        if mu == 0:
            break
        b2 = (b2[0] - mu * b1[0], b2[1] - mu * b1[1])
    else:
        raise RuntimeError("lattice reduction failed to terminate")
    return b1[0], b1[1], b2[0], b2[1]


def _gram_schmidt(basis):
    n = basis.shape[1]
    ortho = basis.astype(float).copy()
    mu = np.zeros((n, n))
    norms = np.zeros(n)
    for i in range(n):
        v = basis[:, i].astype(float).copy()
        for j in range(i):
            mu[i, j] = (basis[:, i] @ ortho[:, j]) / norms[j] if norms[j] > 0 else 0.0
            v -= mu[i, j] * ortho[:, j]
        ortho[:, i] = v
        norms[i] = float(v @ v)
    return ortho, mu, norms


def lll_reduce(basis: np.ndarray, delta: float = 0.75) -> np.ndarray:
    """LLL reduction of the column lattice of basis.

    Returns the unimodular integer transform U such that basis @ U is
    reduced; the columns of U are integer coefficient vectors of short
    lattice vectors.
    """
    b = basis.astype(float).copy()
    n = b.shape[1]
    u = np.eye(n, dtype=np.int64)
    ortho, mu, norms = _gram_schmidt(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = int(round_half_away(mu[k, j])[()])
            if q != 0:
                b[:, k] -= q * b[:, j]
                u[:, k] -= q * u[:, j]
                ortho, mu, norms = _gram_schmidt(b)
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            u[:, [k - 1, k]] = u[:, [k, k - 1]]
            ortho, mu, norms = _gram_schmidt(b)
            k = max(k - 1, 1)
    return u


# ---------------------------------------------------------------------------
# Step II: interference combination
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UcmProblem:
    """Min-max integer quadratic program over c: max_l c^T Q_l c - 2 q_l^T c."""

    Q1: np.ndarray
    Q2: np.ndarray
    q1: np.ndarray
    q2: np.ndarray

    def __post_init__(self):
        for ql in (self.Q1, self.Q2):
            if ql.size and float(np.linalg.eigvalsh(ql)[0]) < -1e-9:
                raise ValueError("Q_l must be positive semidefinite")

    @property
    def lc(self) -> int:
        return self.q1.shape[0]

    def objective(self, c) -> float:
        c = np.asarray(c, dtype=float)
        return max(
            float(c @ self.Q1 @ c - 2.0 * self.q1 @ c),
            float(c @ self.Q2 @ c - 2.0 * self.q2 @ c),
        )


def build_ucm_problem(ctx: ReceiverContext, a, factors) -> UcmProblem:
    """Assemble Q_l = e_l^2 (I - Hk^T T Hk) and q_l = e_l d_l Hk^T T Hkk a."""
    a = np.asarray(a, dtype=float)
    if not a.any():
        raise ValueError("a must be nonzero")
    d1, e1, d2, e2 = factors
    base_q = ctx.g_cc
    base_lin = ctx.g_ac.T @ a
    return UcmProblem(
        Q1=float(e1 * e1) * base_q,
        Q2=float(e2 * e2) * base_q,
        q1=float(e1 * d1) * base_lin,
        q2=float(e2 * d2) * base_lin,
    )


@dataclass
class SdpSolution:
    """Relaxed minimizer: c-part, lifted matrix, objective and solver state."""

    c: np.ndarray
    C: np.ndarray
    epsilon: float
    iterations: int
    residual: float
    state: tuple = field(repr=False, default=None)


def _affine_alpha_prox(v, a1, a2, t, lc):
    """argmin_X max(<A1,X>, <A2,X>) + (1/2t) ||X - V||^2 over the affine set.

    The affine set pins the corner entry to one and enforces diag(C) >= c.
    Solved exactly through the concave dual in the mixing weight alpha: the
    projected point is piecewise linear in alpha, so the dual derivative is
    piecewise linear and its root is found from the breakpoints.
    """
    diff = a1 - a2
    base = v - t * a2  # candidate at alpha = 0

    def project(alpha):
        x = base - (t * alpha) * diff
        x[-1, -1] = 1.0
        for i in range(lc):
            if x[i, i] < x[i, -1]:
                z = (x[i, i] + 2.0 * x[i, -1]) / 3.0
                x[i, i] = z
                x[i, -1] = z
                x[-1, i] = z
            else:
                x[-1, i] = x[i, -1]
        return x

    def slope(alpha):
        return float(np.sum(diff * project(alpha)))

    s0 = slope(0.0)
    if s0 <= 0.0:
        return project(0.0)
    s1 = slope(1.0)
    if s1 >= 0.0:
        return project(1.0)
    # Breakpoints where a diag constraint toggles between slack and tight.
    knots = [0.0, 1.0]
    for i in range(lc):
        d0 = base[i, i] - base[i, -1]
        d1_ = d0 - t * (diff[i, i] - diff[i, -1])
        if (d0 > 0.0 > d1_) or (d0 < 0.0 < d1_):
            knots.append(d0 / (d0 - d1_))
    knots = sorted(set(knots))
    lo, hi, slo, shi = 0.0, 1.0, s0, s1
    for kn in knots[1:]:
        sk = slope(kn)
        if sk >= 0.0:
            lo, slo = kn, sk
        else:
            hi, shi = kn, sk
            break
    alpha = lo if slo <= 0.0 else lo + (hi - lo) * slo / (slo - shi)
    return project(min(max(alpha, 0.0), 1.0))


def solve_ucm_sdp(problem: UcmProblem, cfg: SearchConfig, warm=None) -> SdpSolution:
    """Semidefinite relaxation of the min-max quadratic program over c.

    Lifts c to Z = [[C, c], [c^T, 1]] >= 0 with diag(C) >= c and minimizes
    the larger of the two linear objectives <A_l, Z>.  Solved by two-block
    ADMM: an exact prox over the objective and affine constraints, and a
    eigendecomposition projection onto the PSD cone.  Raises SolverStall if
    the residuals do not reach cfg.sdp_tol within the iteration cap.
    """
    lc = problem.lc
    if lc < 1:
        raise ValueError("the relaxation needs at least one interfering stream")
    n = lc + 1
    a1 = np.zeros((n, n))
    a1[:lc, :lc] = problem.Q1
    a1[:lc, -1] = -problem.q1
    a1[-1, :lc] = -problem.q1
    a2 = np.zeros((n, n))
    a2[:lc, :lc] = problem.Q2
    a2[:lc, -1] = -problem.q2
    a2[-1, :lc] = -problem.q2
    # A factor pair with e_l = 0 zeroes that equation's objective, leaving
    # the min-max degenerate: every c that keeps the other objective below
    # zero is optimal.  Among those optima, the minimizer of the remaining
    # active objective is the informative one, so the solve reduces to it.
    if not a1.any() and not a2.any():
        return SdpSolution(c=np.zeros(lc), C=np.zeros((lc, lc)), epsilon=0.0,
                           iterations=0, residual=0.0)
    solve_a1 = a1 if a1.any() else a2
    solve_a2 = a2 if a2.any() else a1
    scale = max(1.0, float(np.sqrt((a1 * a1).sum())), float(np.sqrt((a2 * a2).sum())))
    a1s, a2s = solve_a1 / scale, solve_a2 / scale

    if warm is not None:
        y, u, rho = warm[0].copy(), warm[1].copy(), warm[2]
    else:
        y = np.zeros((n, n))
        y[-1, -1] = 1.0
        u = np.zeros((n, n))
        rho = 1.0

    tol = cfg.sdp_tol
    z = y
    for it in range(1, SDP_MAX_ITERS + 1):
        z = _affine_alpha_prox(y - u, a1s, a2s, 1.0 / rho, lc)
        z_rel = SDP_RELAX * z + (1.0 - SDP_RELAX) * y
        vals, vecs = np.linalg.eigh(z_rel + u)
        pos = vals > 0.0
        y_new = (vecs[:, pos] * vals[pos]) @ vecs[:, pos].T
        y_new = 0.5 * (y_new + y_new.T)
        u = u + z_rel - y_new
        r_norm = float(np.sqrt(((z - y_new) ** 2).sum()))
        s_norm = rho * float(np.sqrt(((y_new - y) ** 2).sum()))
        y = y_new
        eps_pri = tol * max(1.0, float(np.sqrt((z * z).sum())), float(np.sqrt((y * y).sum())))
        eps_dual = tol * max(1.0, rho * float(np.sqrt((u * u).sum())))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            break
        if it % 20 == 0:
            if r_norm > 10.0 * s_norm and rho < 1e4:
                rho *= 2.0
                u /= 2.0
            elif s_norm > 10.0 * r_norm and rho > 1e-4:
                rho /= 2.0
                u *= 2.0
    else:
        raise SolverStall(
            f"residuals ({r_norm:.2e}, {s_norm:.2e}) above tolerance after {SDP_MAX_ITERS} iterations")

    epsilon = max(float(np.sum(a1 * z)), float(np.sum(a2 * z)))
    return SdpSolution(
        c=z[:lc, -1].copy(),
        C=z[:lc, :lc].copy(),
        epsilon=epsilon,
        iterations=it,
        residual=max(r_norm, s_norm),
        state=(y, u, rho),
    )


def round_ucm(c_relaxed, problem: UcmProblem) -> np.ndarray:
    """Round the relaxed c and repair locally.

    Candidates are the componentwise nearest integer point (ties away from
    zero) and its single-coordinate +-1 perturbations; the min-max objective
    decides.  Ties keep the earliest candidate, so the plain rounding wins
    unless a perturbation strictly improves.
    """
    base = round_half_away(c_relaxed)
    best = base
    best_obj = problem.objective(base)
    for i in range(base.shape[0]):
        for step in (1, -1):
            cand = base.copy()
            cand[i] += step
            obj = problem.objective(cand)
            if obj < best_obj:
                best, best_obj = cand, obj
    return best


# ---------------------------------------------------------------------------
# Step III: desired combination
# ---------------------------------------------------------------------------

def lemma2_radius(ctx: ReceiverContext, factors, c) -> float:
    """Squared-norm threshold on a beyond which the DCM rate is exactly zero.

    An equation's rate vanishes once its stacked ECV has squared norm at
    least 1 + snr * smax^2(Hhat); applying that to the equation with factor
    pair (d_l, e_l) bounds ||a||^2 by (1 + snr*smax^2 - e_l^2 ||c||^2)/d_l^2,
    and the DCM rate is the minimum over the two equations.  A nonpositive
    result means every choice of a is already rate zero for these factors.
    """
    d1, e1, d2, e2 = factors
    if d1 * e2 - d2 * e1 == 0:
        raise ValueError("factor matrix must be nonsingular")
    c = np.asarray(c, dtype=float)
    norm_c = float(c @ c) if c.size else 0.0
    cap = 1.0 + ctx.snr * ctx.hmax * ctx.hmax
    candidates = [
        (cap - float(e * e) * norm_c) / float(d * d)
        for d, e in ((d1, e1), (d2, e2))
        if d != 0
    ]
    return min(candidates)


def dcm_center(ctx: ReceiverContext, factors, c):
    """Continuous minimizer of the relaxed min-max problem over a.

    The weighted objective alpha*f_1 + (1-alpha)*f_2 has minimizer
    a(alpha) = [u(alpha)/v(alpha)] (I - B)^{-1} B_c c with
    u(p) = p e1 d1 + (1-p) e2 d2 and v(p) = p d1^2 + (1-p) d2^2, where B
    is the own-stream quadratic kernel.  Endpoint cases fire when the
    corresponding f-ordering holds there; otherwise the equalizing alpha
    is bisected to |f1 - f2| <= 1e-9.
    """
    d1, e1, d2, e2 = factors
    if d1 * e2 - d2 * e1 == 0:
        raise ValueError("factor matrix must be nonsingular")
    nt = ctx.Nt
    c = np.asarray(c, dtype=float)
    w = ctx.g_ac @ c if c.size else np.zeros(nt)

    def ratio(alpha):
        num = alpha * e1 * d1 + (1.0 - alpha) * e2 * d2
        den = alpha * d1 * d1 + (1.0 - alpha) * d2 * d2
        if den == 0.0:
            # v vanishes only at an endpoint whose d is zero; the limiting
            # ratio along the path is that of the other equation.
            return e1 / d1 if d1 != 0 else e2 / d2
        return num / den

    if not w.any():
        zero = np.zeros(nt)
        diff = (float(e1 * e1) - float(e2 * e2)) * (float(c @ ctx.g_cc @ c) if c.size else 0.0)
        return (0.0 if diff <= 0.0 else 1.0), zero

    try:
        solved = linalg.solve_cholesky(ctx.g_aa_chol, w)
    except linalg.NotPositiveDefinite as exc:  # analytically impossible
        raise SingularCenter(str(exc)) from exc

    def center(alpha):
        return ratio(alpha) * solved

    def gap(alpha):
        a = center(alpha)
        return f_l(ctx, d1, e1, a, c) - f_l(ctx, d2, e2, a, c)

    g0 = gap(0.0)
    if g0 <= 0.0:
        return 0.0, center(0.0)
    g1 = gap(1.0)
    if g1 >= 0.0:
        return 1.0, center(1.0)
    lo, hi = 0.0, 1.0
    alpha = 0.5
    for _ in range(60):
        alpha = 0.5 * (lo + hi)
        g = gap(alpha)
        if abs(g) <= 1e-9:
            break
        if g > 0.0:
            lo = alpha
        else:
            hi = alpha
    return alpha, center(alpha)


def step3_dcm(ctx: ReceiverContext, factors, c, prev_g, cfg: SearchConfig,
              judge=None) -> np.ndarray:
    """Integer search for a along slowest-descent lines through the center.

    Lines run along the eigenvectors of the own-stream Hessian kernel (the
    factor d_l^2 rescales it without changing directions), smallest
    eigenvalues first.  Points are rounded to integers, filtered for
    independence from previous picks, and judged by the larger of the two
    equation forms (or by a caller-supplied judge returning a comparable
    key).  Visits at most w * (2R + 1) integer points.
    """
    d1, e1, d2, e2 = factors
    nt = ctx.Nt
    try:
        _, center = dcm_center(ctx, factors, c)
    except SingularCenter:
        center = np.zeros(nt)
    radius_sq = lemma2_radius(ctx, factors, c)
    if radius_sq > 0.0:
        radius = min(cfg.r_max, int(math.ceil(math.sqrt(radius_sq))))
    else:
        radius = 0
    n_lines = min(cfg.w or nt, nt)
    prev = [np.asarray(g, dtype=np.int64) for g in prev_g]
    rank_prev = len(prev)
    if judge is None:
        def judge(cand):
            return max(f_l(ctx, d1, e1, cand, c), f_l(ctx, d2, e2, cand, c))

    best = None
    best_key = None
    seen = set()
    for line in range(n_lines):
        direction = ctx.g_aa_eigvecs[:, line]
        for t in range(-radius, radius + 1):
            cand = round_half_away(center + t * direction)
            key = tuple(int(x) for x in cand)
            if key in seen:
                continue
            seen.add(key)
            if not any(key):
                continue
            if linalg.integer_rank(prev + [cand]) != rank_prev + 1:
                continue
            cand_key = (judge(cand), key)
            if best_key is None or cand_key < best_key:
                best, best_key = cand, cand_key
    if best is None:
        raise NoCandidate("no nonzero independent integer point in the search region")
    return best
