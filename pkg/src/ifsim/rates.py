"""Equation rates and combined-message rates.

An equation coefficient vector (ECV) is an integer vector over all L
transmitted streams; its rate is log2^+ of the inverse quadratic form
a^T (I - Hhat^T (I/snr + Hhat Hhat^T)^{-1} Hhat) a.  A desirable combined
message (DCM) is recovered from two such equations sharing the same
integer combinations a (own streams) and c (interfering streams) but
independent factor pairs (d_l, e_l); its rate is the worse of the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ifsim.channel import ReceiverContext
from ifsim import linalg


class DegenerateFactors(Exception):
    """The 2x2 integer factor matrix is singular."""


class DegenerateInput(Exception):
    """An all-zero equation coefficient vector was formed."""


LOG2 = np.log(2.0)


def _log2_pos(quad: float) -> float:
    """log2^+ of the inverse of a positive quadratic form value."""
    if quad <= 0.0:
        # The form is provably positive definite; a nonpositive value can
        # only come from catastrophic numerical failure.
        raise FloatingPointError(f"quadratic form evaluated to {quad}")
    rate = -np.log(quad) / LOG2
    return float(rate) if rate > 0.0 else 0.0


def stacked_ecv(ctx: ReceiverContext, d: int, a, e: int, c) -> np.ndarray:
    """Full-length ECV with d*a in the receiver's own block and e*c elsewhere."""
    out = np.zeros(ctx.L, dtype=np.int64)
    out[ctx.own_cols] = int(d) * np.asarray(a, dtype=np.int64)
    if ctx.Lc:
        out[ctx.other_cols] = int(e) * np.asarray(c, dtype=np.int64)
    return out


def projection_vector(ctx: ReceiverContext, a) -> np.ndarray:
    """Optimal linear front-end b with b^T = a^T Hhat^T (I/snr + Hhat Hhat^T)^{-1}."""
    a = np.asarray(a, dtype=float)
    if a.shape != (ctx.L,):
        raise ValueError(f"ECV must have length {ctx.L}, got shape {a.shape}")
    return linalg.solve_cholesky(ctx.kernel_chol, ctx.Hhat @ a)


def equation_rate(ctx: ReceiverContext, a) -> float:
    """Achievable rate of the equation with ECV a, in bit/channel use."""
    a = np.asarray(a, dtype=float)
    if a.shape != (ctx.L,):
        raise ValueError(f"ECV must have length {ctx.L}, got shape {a.shape}")
    if not a.any():
        raise DegenerateInput("all-zero ECV")
    return _log2_pos(float(a @ ctx.m_full @ a))


def f_l(ctx: ReceiverContext, d: int, e: int, a, c) -> float:
    """Quadratic form of the stacked ECV [d*a ; e*c], in block-split form.

    Matches equation_rate's inner form on stacked_ecv(ctx, d, a, e, c); the
    block-split evaluation reuses the cached sub-Grams and is what the
    coefficient optimizers iterate on.
    """
    a = np.asarray(a, dtype=float)
    d = float(d)
    value = d * d * float(a @ ctx.g_aa @ a)
    if ctx.Lc:
        c = np.asarray(c, dtype=float)
        e = float(e)
        value += e * e * float(c @ ctx.g_cc @ c)
        value -= 2.0 * d * e * float(a @ (ctx.g_ac @ c))
    return value


@dataclass
class EquationPair:
    """Two equations recovering one DCM: factors, coefficient vectors, rate."""

    d1: int
    e1: int
    d2: int
    e2: int
    a: np.ndarray
    c: np.ndarray
    rate: float | None = None


def dcm_rate(ctx: ReceiverContext, pair: EquationPair) -> float:
    """Rate of recovering the DCM a^T x_k from the pair's two equations."""
    if pair.d1 * pair.e2 - pair.d2 * pair.e1 == 0:
        raise DegenerateFactors(
            f"factor matrix [[{pair.d1},{pair.e1}],[{pair.d2},{pair.e2}]] is singular")
    v1 = stacked_ecv(ctx, pair.d1, pair.a, pair.e1, pair.c)
    v2 = stacked_ecv(ctx, pair.d2, pair.a, pair.e2, pair.c)
    if not v1.any() or not v2.any():
        raise DegenerateInput("a factor pair produced an all-zero ECV")
    return min(equation_rate(ctx, v1), equation_rate(ctx, v2))
