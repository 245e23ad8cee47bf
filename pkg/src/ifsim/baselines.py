"""Reference receivers: linear MMSE, zero-forcing, and the equation-based
integer-forcing linear receiver (IFLR).

All rates are reported for one receiver's desired streams, in bit/channel
use, under unit-power-per-stream signaling at snr = P / sigma^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ifsim import linalg
from ifsim.channel import ReceiverContext
from ifsim.coeff_opt import SearchConfig, lll_reduce
from ifsim.rates import equation_rate

REFINE_MAX_DIM = 4
REFINE_BOUND = 3


@dataclass(frozen=True)
class BaselineRates:
    mmse: float
    zf: float
    iflr: float


def mmse_rate(ctx: ReceiverContext) -> float:
    """Sum rate of per-stream linear MMSE estimation of the desired streams.

    Every other stream, desired or interfering, is treated as colored
    noise.  The per-stream mean-square error is the corresponding diagonal
    entry of (I + snr * Hhat^T Hhat)^{-1}, which is exactly the cached
    equation-rate Gram matrix, so SINR_i = 1 / M_ii - 1.
    """
    diag = ctx.m_full.diagonal()[ctx.own_cols]
    return float(sum(-math.log2(min(float(m), 1.0)) for m in diag))


def zf_rate(ctx: ReceiverContext) -> float:
    """Sum rate of full zero-forcing of all L streams.

    Requires at least as many receive antennas as total streams; by
    convention the rate is zero otherwise (nulling everything is
    impossible).  Per-stream noise amplification is the diagonal of
    (Hhat^T Hhat)^{-1}.
    """
    if ctx.Hhat.shape[0] < ctx.L:
        return 0.0
    gram = ctx.Hhat.T @ ctx.Hhat
    try:
        amp = linalg.solve_spd(gram, np.eye(ctx.L)).diagonal()
    except linalg.NotPositiveDefinite:
        return 0.0
    return float(sum(math.log2(1.0 + ctx.snr / float(v)) for v in amp[ctx.own_cols]))


def _box_refine(m: np.ndarray, best_forms_max: float):
    """Greedy successive-minima search over a small integer box.

    Returns (vectors, max_form) or None when the box cannot improve on the
    given objective.
    """
    n = m.shape[0]
    scored = []
    for point in np.ndindex(*((2 * REFINE_BOUND + 1,) * n)):
        vec = np.array(point, dtype=np.int64) - REFINE_BOUND
        if not vec.any():
            continue
        first = vec[np.argmax(vec != 0)]
        if first < 0:
            continue  # sign symmetry
        scored.append((float(vec @ m @ vec), tuple(vec)))
    scored.sort()
    chosen = []
    for form, key in scored:
        if form >= best_forms_max:
            break
        cand = np.array(key, dtype=np.int64)
        if linalg.integer_rank(chosen + [cand]) == len(chosen) + 1:
            chosen.append(cand)
            if len(chosen) == n:
                return chosen, form
    return None


def iflr_rate(ctx: ReceiverContext, cfg: SearchConfig) -> float:
    """Receiver rate of the integer-forcing linear receiver.

    Finds L independent ECVs with small quadratic forms by LLL-reducing the
    lattice whose Gram matrix is the equation-rate form, optionally refined
    by a small exhaustive search at low dimension, and reports
    Nt * min_l R(a_l) over the chosen basis.
    """
    m = ctx.m_full
    chol = linalg.cholesky(m)
    u = lll_reduce(chol.T)
    vectors = [u[:, i] for i in range(ctx.L)]
    forms = [float(v @ m @ v) for v in vectors]
    if ctx.L <= REFINE_MAX_DIM:
        refined = _box_refine(m, max(forms))
        if refined is not None:
            vectors = refined[0]
    worst = min(equation_rate(ctx, v) for v in vectors)
    return ctx.Nt * worst


def baseline_rates(ctx: ReceiverContext, cfg: SearchConfig) -> BaselineRates:
    return BaselineRates(mmse=mmse_rate(ctx), zf=zf_rate(ctx), iflr=iflr_rate(ctx, cfg))
