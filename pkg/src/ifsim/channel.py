"""Random channel realizations and per-receiver matrix assembly.

A ChannelSet holds every cross matrix of one realization of a K-pair
interference channel.  A ReceiverContext packages the matrices one
receiver works with, plus the cached factorizations that every rate
evaluation reuses: real-valued channels, noise variance fixed to one,
and snr = P / sigma^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ifsim import linalg


class InvalidConfig(Exception):
    """Channel dimensions or variances are unusable."""


def _counts(value, count, name):
    if np.isscalar(value):
        out = (int(value),) * count
    else:
        out = tuple(int(v) for v in value)
    if len(out) != count:
        raise InvalidConfig(f"{name} must have {count} entries, got {len(out)}")
    if any(v < 1 for v in out):
        raise InvalidConfig(f"{name} entries must be >= 1, got {out}")
    return out


def _variances(rho2, k):
    grid = np.asarray(rho2, dtype=float)
    if grid.ndim == 0:
        grid = np.full((k, k), float(grid))
    if grid.shape != (k, k):
        raise InvalidConfig(f"rho2 must be scalar or {k}x{k}, got shape {grid.shape}")
    if np.any(grid < 0):
        raise InvalidConfig("rho2 entries must be nonnegative")
    return grid


def philox_rng(seed: int, substream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, substream).

    Philox streams are independent per key, so Monte Carlo trials can be
    generated in any order, or in parallel, with identical output.
    """
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(substream)])
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ChannelSet:
    """All K^2 channel matrices of one realization.

    H[k][j] is the matrix from transmitter k to receiver j, with shape
    Nr[j] x Nt[k]; rho2[k, j] is the per-entry variance it was drawn with.
    """

    K: int
    Nt: tuple
    Nr: tuple
    H: tuple
    rho2: np.ndarray
    seed: int


def generate(K: int, Nt, Nr, rho2, seed: int, substream: int = 0) -> ChannelSet:
    """Draw one channel realization with iid Normal(0, rho2[k, j]) entries."""
    if K < 1:
        raise InvalidConfig(f"K must be >= 1, got {K}")
    nt = _counts(Nt, K, "Nt")
    nr = _counts(Nr, K, "Nr")
    grid = _variances(rho2, K)
    rng = philox_rng(seed, substream)
    rows = []
    for k in range(K):
        row = []
        for j in range(K):
            h = rng.normal(0.0, 1.0, size=(nr[j], nt[k])) * np.sqrt(grid[k, j])
            h.flags.writeable = False
            row.append(h)
        rows.append(tuple(row))
    return ChannelSet(K=K, Nt=nt, Nr=nr, H=tuple(rows), rho2=grid, seed=seed)


@dataclass
class ReceiverContext:
    """Assembled matrices and cached kernels for one receiver.

    Hhat stacks the blocks [H_1k, ..., H_Kk] in transmitter order; Hkk is
    the direct link and Hk is Hhat with the receiver's own block removed.
    kernel = (1/snr) I + Hhat Hhat^T is SPD for any channel, and its
    Cholesky factor is shared by every rate evaluation on this context.
    """

    k: int
    Hhat: np.ndarray
    Hkk: np.ndarray
    Hk: np.ndarray
    snr: float
    L: int
    Lc: int
    Nt: int
    kernel: np.ndarray
    kernel_chol: np.ndarray
    own_cols: np.ndarray
    other_cols: np.ndarray
    # Derived quadratic-form caches.  With T = kernel^{-1} and
    # P = Hhat^T T Hhat, m_full = I - P is the Gram matrix of the full
    # equation-rate form; g_aa, g_cc, g_ac are its blocks split between the
    # receiver's own streams and the interfering streams.
    m_full: np.ndarray = field(repr=False, default=None)
    g_aa: np.ndarray = field(repr=False, default=None)
    g_cc: np.ndarray = field(repr=False, default=None)
    g_ac: np.ndarray = field(repr=False, default=None)
    g_aa_chol: np.ndarray = field(repr=False, default=None)
    g_cc_chol: np.ndarray = field(repr=False, default=None)
    g_aa_eigvals: np.ndarray = field(repr=False, default=None)
    g_aa_eigvecs: np.ndarray = field(repr=False, default=None)
    hmax: float = 0.0
    ucm_seeds: list = field(repr=False, default=None)  # lazily cached


def receiver_context(cs: ChannelSet, k: int, snr: float) -> ReceiverContext:
    """Assemble the receiver-k view of a channel realization at a given snr."""
    if not 0 <= k < cs.K:
        raise ValueError(f"receiver index {k} out of range for K={cs.K}")
    if not snr > 0:
        raise ValueError(f"snr must be positive, got {snr}")
    blocks = [cs.H[j][k] for j in range(cs.K)]
    hhat = np.hstack(blocks)
    offsets = np.cumsum([0] + [b.shape[1] for b in blocks])
    own = np.arange(offsets[k], offsets[k + 1])
    other = np.concatenate([np.arange(offsets[j], offsets[j + 1]) for j in range(cs.K) if j != k]) \
        if cs.K > 1 else np.arange(0)
    hk = hhat[:, other]
    total = hhat.shape[1]
    kernel = np.eye(hhat.shape[0]) / snr + hhat @ hhat.T
    kernel = 0.5 * (kernel + kernel.T)
    kernel_chol = linalg.cholesky(kernel)

    t_hhat = linalg.solve_cholesky(kernel_chol, hhat)
    proj = hhat.T @ t_hhat
    m_full = np.eye(total) - proj
    m_full = 0.5 * (m_full + m_full.T)
    g_aa = m_full[np.ix_(own, own)]
    g_cc = m_full[np.ix_(other, other)]
    g_ac = proj[np.ix_(own, other)]

    ctx = ReceiverContext(
        k=k,
        Hhat=hhat,
        Hkk=cs.H[k][k],
        Hk=hk,
        snr=float(snr),
        L=total,
        Lc=total - cs.Nt[k],
        Nt=cs.Nt[k],
        kernel=kernel,
        kernel_chol=kernel_chol,
        own_cols=own,
        other_cols=other,
        m_full=m_full,
        g_aa=g_aa,
        g_cc=g_cc,
        g_ac=g_ac,
    )
    ctx.g_aa_chol = linalg.cholesky(g_aa)
    ctx.g_cc_chol = linalg.cholesky(g_cc) if ctx.Lc else np.zeros((0, 0))
    ctx.g_aa_eigvals, ctx.g_aa_eigvecs = linalg.eig_sym(g_aa)
    ctx.hmax = linalg.max_singular_value(hhat)
    for arr in (ctx.Hhat, ctx.Hk, ctx.kernel, ctx.kernel_chol, ctx.m_full,
                ctx.g_aa, ctx.g_cc, ctx.g_ac):
        arr.flags.writeable = False
    return ctx
