"""Exhaustive ground-truth solvers over bounded integer boxes.

These exist to be obviously correct: plain enumeration of the desired and
interfering combinations within a box, with the two-equation factor pair
optimized exactly by 2-D lattice reduction (which attains the optimum over
all integer factor pairs, so the algorithm under test can never beat the
oracle by using factors outside a box).  Deterministic: enumeration order
is fixed and ties resolve lexicographically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ifsim import linalg
from ifsim.channel import ReceiverContext
from ifsim.coeff_opt import GramU, step1_factors
from ifsim.ifmr import NULL_UCM_FACTORS, IfmrResult, StageResult
from ifsim.rates import f_l


class SearchSpaceTooLarge(Exception):
    """The requested enumeration exceeds the hard work guard."""


WORK_GUARD = 10 ** 8


@dataclass(frozen=True)
class OracleBound:
    """Box half-widths for the exhaustive searches."""

    factor_bound: int = 3
    a_bound: int = 3
    c_bound: int = 3

    def __post_init__(self):
        if min(self.factor_bound, self.a_bound, self.c_bound) < 1:
            raise ValueError("all bounds must be >= 1")


def _canonical_box(dim: int, bound: int):
    """Nonzero integer points with positive leading sign, lexicographic order."""
    if dim == 0:
        return []
    out = []
    for point in itertools.product(range(-bound, bound + 1), repeat=dim):
        vec = np.array(point, dtype=np.int64)
        if not vec.any():
            continue
        if vec[np.argmax(vec != 0)] < 0:
            continue
        out.append(vec)
    return out


def _pair_objective(ctx: ReceiverContext, a, c):
    """Exact best factor pair and its larger equation form for given (a, c)."""
    if c is None or not np.any(c):
        return NULL_UCM_FACTORS, f_l(ctx, 1, 0, a, np.zeros(ctx.Lc, dtype=np.int64))
    cross = float(np.asarray(a, float) @ (ctx.g_ac @ np.asarray(c, float)))
    u = np.array([
        [f_l(ctx, 1, 0, a, c), -cross],
        [-cross, f_l(ctx, 0, 1, a, c)],
    ])
    d1, e1, d2, e2 = step1_factors(GramU(u=u))
    return (d1, e1, d2, e2), max(f_l(ctx, d1, e1, a, c), f_l(ctx, d2, e2, a, c))


def _rate_from_eps(eps: float) -> float:
    if eps <= 0.0:
        raise FloatingPointError(f"equation form evaluated to {eps}")
    return max(0.0, -math.log2(eps))


def _rho_table(ctx: ReceiverContext, bound: OracleBound):
    """Best achievable DCM form per canonical a over the c box.

    Maps each canonical nonzero a to (eps, c, factors), where eps is the
    smallest larger-equation form over all c in the box with the factor
    pair optimized exactly.  The a box is trimmed by the universal
    zero-rate radius: beyond it every entry is rate zero anyway.
    """
    universal = 1.0 + ctx.snr * ctx.hmax * ctx.hmax
    a_eff = max(1, min(bound.a_bound, int(math.ceil(math.sqrt(universal)))))
    a_points = _canonical_box(ctx.Nt, a_eff)
    c_points = _canonical_box(ctx.Lc, bound.c_bound)
    work = len(a_points) * (len(c_points) + 1)
    if work > WORK_GUARD:
        raise SearchSpaceTooLarge(f"{work} (a, c) combinations exceed the 1e8 guard")
    table = {}
    zero_c = np.zeros(ctx.Lc, dtype=np.int64)
    for a in a_points:
        best_factors, best_eps = _pair_objective(ctx, a, None)
        best_c = zero_c
        for c in c_points:
            factors, eps = _pair_objective(ctx, a, c)
            if eps < best_eps:
                best_eps, best_c, best_factors = eps, c, factors
        table[tuple(int(x) for x in a)] = (best_eps, best_c, best_factors)
    return table


def _stage_from_entry(a_key, entry) -> StageResult:
    eps, c, factors = entry
    return StageResult(
        g=np.array(a_key, dtype=np.int64),
        c=c,
        factors=factors,
        rate=_rate_from_eps(eps),
        iterations=1,
        epsilon_trace=[eps],
    )


def brute_stage(ctx: ReceiverContext, prev_g, bound: OracleBound) -> StageResult:
    """Exact optimum of one stage over the box, independent of prev_g."""
    table = _rho_table(ctx, bound)
    prev = [np.asarray(g, dtype=np.int64) for g in prev_g]
    best_key = None
    best = None
    for a_key in sorted(table):
        eps, _, _ = table[a_key]
        cand = np.array(a_key, dtype=np.int64)
        if linalg.integer_rank(prev + [cand]) != len(prev) + 1:
            continue
        if best_key is None or eps < best[0]:
            best_key, best = a_key, table[a_key]
    if best_key is None:
        raise SearchSpaceTooLarge("no independent point inside the box")
    return _stage_from_entry(best_key, best)


def sequential_rates(ctx: ReceiverContext, bound: OracleBound) -> IfmrResult:
    """All Nt stages by exhaustive per-stage search, sharing one table."""
    table = _rho_table(ctx, bound)
    prev = []
    stages = []
    for _ in range(ctx.Nt):
        best_key, best = None, None
        for a_key in sorted(table):
            eps, _, _ = table[a_key]
            cand = np.array(a_key, dtype=np.int64)
            if linalg.integer_rank(prev + [cand]) != len(prev) + 1:
                continue
            if best_key is None or eps < best[0]:
                best_key, best = a_key, table[a_key]
        if best_key is None:
            raise SearchSpaceTooLarge("box too small to complete a full-rank set")
        stages.append(_stage_from_entry(best_key, best))
        prev.append(np.array(best_key, dtype=np.int64))
    worst = min(stage.rate for stage in stages)
    return IfmrResult(stages=stages, sum_rate=ctx.Nt * worst,
                      stage_rate_sum=float(sum(s.rate for s in stages)))


def brute_joint(ctx: ReceiverContext, bound: OracleBound) -> IfmrResult:
    """Exact optimum of the joint selection over the box (Nt <= 2 only).

    The joint objective decouples into per-vector best forms, so the
    optimum is the best independent pair under the per-vector table.
    """
    if ctx.Nt > 2:
        raise SearchSpaceTooLarge("joint search is limited to Nt <= 2")
    table = _rho_table(ctx, bound)
    if ctx.Nt == 1:
        stage = brute_stage(ctx, [], bound)
        return IfmrResult(stages=[stage], sum_rate=stage.rate,
                          stage_rate_sum=stage.rate)
    ranked = sorted(table.items(), key=lambda kv: (kv[1][0], kv[0]))
    for idx, (w_key, w_entry) in enumerate(ranked):
        w_vec = np.array(w_key, dtype=np.int64)
        for v_key, v_entry in ranked[:idx]:
            v_vec = np.array(v_key, dtype=np.int64)
            if linalg.integer_rank([v_vec, w_vec]) == 2:
                stages = [_stage_from_entry(v_key, v_entry), _stage_from_entry(w_key, w_entry)]
                worst = min(stage.rate for stage in stages)
                return IfmrResult(stages=stages, sum_rate=2 * worst,
                                  stage_rate_sum=float(sum(s.rate for s in stages)))
    raise SearchSpaceTooLarge("box too small to contain an independent pair")


def brute_factor_pair(gram: GramU, bound: int):
    """Exhaustive min over independent factor pairs of the larger Gram form.

    Sorts the box by form value; the optimum equals the form of the first
    vector not collinear with a smallest one.  Returns (pair, objective).
    """
    u = gram.u
    scored = []
    for d in range(-bound, bound + 1):
        for e in range(-bound, bound + 1):
            if d == 0 and e == 0:
                continue
            form = u[0, 0] * d * d + 2.0 * u[0, 1] * d * e + u[1, 1] * e * e
            scored.append((form, (d, e)))
    scored.sort()
    first_form, first = scored[0]
    for form, cand in scored[1:]:
        if first[0] * cand[1] - first[1] * cand[0] != 0:
            return (first, cand), form
    raise SearchSpaceTooLarge("no independent pair inside the factor box")


def brute_minmax_quadratic(q1, q2, lin1, lin2, c_bound: int) -> np.ndarray:
    """Exact integer optimum of max_l c^T Q_l c - 2 q_l^T c over the box."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    lin1 = np.asarray(lin1, dtype=float)
    lin2 = np.asarray(lin2, dtype=float)
    dim = lin1.shape[0]
    if dim > 4:
        raise SearchSpaceTooLarge("min-max enumeration is limited to four variables")
    if (2 * c_bound + 1) ** dim > WORK_GUARD:
        raise SearchSpaceTooLarge("box exceeds the work guard")
    best = None
    best_key = None
    for point in itertools.product(range(-c_bound, c_bound + 1), repeat=dim):
        c = np.array(point, dtype=float)
        obj = max(float(c @ q1 @ c - 2.0 * lin1 @ c), float(c @ q2 @ c - 2.0 * lin2 @ c))
        key = (obj, point)
        if best_key is None or key < best_key:
            best_key = key
            best = np.array(point, dtype=np.int64)
    return best
