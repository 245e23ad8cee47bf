"""Built-in property checks, runnable from the CLI without pytest.

Each check is a scaled-down version of the corresponding test-suite
property: enough instances to be meaningful, small enough to finish in
well under a minute.
"""

from __future__ import annotations

import numpy as np

from ifsim import channel, coeff_opt, ifmr, linalg, oracle, rates
from ifsim.coeff_opt import SearchConfig
from ifsim.oracle import OracleBound


def _random_instance(rng, K=3, N=1, snr_db=10.0):
    cs = channel.generate(K, N, N, 1.0, int(rng.integers(2 ** 31)))
    return channel.receiver_context(cs, 0, 10.0 ** (snr_db / 10.0))


def check_factor_gram_positive_definite(rng, count=200) -> int:
    bad = 0
    for _ in range(count):
        ctx = _random_instance(rng, N=int(rng.integers(1, 3)),
                               snr_db=float(rng.choice([0.0, 10.0, 20.0])))
        a = rng.integers(-3, 4, ctx.Nt)
        c = rng.integers(-3, 4, ctx.Lc)
        if not a.any():
            a[0] = 1
        if not c.any():
            c[0] = 1
        try:
            coeff_opt.build_U(ctx, a, c)
        except coeff_opt.TheoremViolation:
            bad += 1
    return bad


def check_rank_one_projector_semidefinite(rng, count=200) -> int:
    bad = 0
    for _ in range(count):
        x = rng.normal(size=int(rng.integers(1, 7)))
        if not x.any():
            continue
        mat = np.eye(x.size) - np.outer(x, x) / float(x @ x)
        vals, _ = linalg.eig_sym(mat)
        if vals[0] < -1e-10:
            bad += 1
    return bad


def check_zero_rate_radius(rng, count=200) -> int:
    bad = 0
    for _ in range(count):
        ctx = _random_instance(rng, snr_db=float(rng.uniform(0, 20)))
        factors = _random_factors(rng)
        c = rng.integers(-2, 3, ctx.Lc)
        radius_sq = coeff_opt.lemma2_radius(ctx, factors, c)
        a = np.zeros(ctx.Nt, dtype=np.int64)
        a[0] = int(np.ceil(np.sqrt(max(radius_sq, 0.0)))) + 1
        pair = rates.EquationPair(*factors, a=a, c=c)
        try:
            if rates.dcm_rate(ctx, pair) != 0.0:
                bad += 1
        except rates.DegenerateInput:
            pass
    return bad


def _random_factors(rng):
    while True:
        d1, e1, d2, e2 = (int(x) for x in rng.integers(-3, 4, 4))
        if d1 * e2 - d2 * e1 != 0:
            return d1, e1, d2, e2


def check_monotone_iteration(rng, count=20) -> int:
    cfg = SearchConfig()
    bad = 0
    for _ in range(count):
        ctx = _random_instance(rng, N=2, snr_db=15.0)
        result = ifmr.run_receiver(ctx, cfg)
        for stage in result.stages:
            trace = np.asarray(stage.epsilon_trace)
            if np.any(np.diff(trace) > 1e-9) or stage.iterations > cfg.max_iters:
                bad += 1
    return bad


def check_sequential_matches_joint(rng, count=10) -> int:
    bound = OracleBound(2, 2, 2)
    bad = 0
    for _ in range(count):
        cs = channel.generate(2, (2, 1), (2, 2), 1.0, int(rng.integers(2 ** 31)))
        ctx = channel.receiver_context(cs, 0, 10.0 ** (float(rng.uniform(0, 2))))
        joint = oracle.brute_joint(ctx, bound)
        seq = oracle.sequential_rates(ctx, bound)
        if abs(joint.sum_rate - seq.sum_rate) > 1e-12:
            bad += 1
    return bad


def check_factor_reduction_exact(rng, count=50) -> int:
    bad = 0
    for _ in range(count):
        g = rng.normal(size=(2, 2))
        u = coeff_opt.GramU(u=g @ g.T + 0.05 * np.eye(2))
        d1, e1, d2, e2 = coeff_opt.step1_factors(u)
        mine = max(_form(u.u, (d1, e1)), _form(u.u, (d2, e2)))
        _, brute = oracle.brute_factor_pair(u, 10)
        if abs(mine - brute) > 1e-12:
            bad += 1
    return bad


def _form(u, v):
    return u[0, 0] * v[0] * v[0] + 2 * u[0, 1] * v[0] * v[1] + u[1, 1] * v[1] * v[1]


def check_relaxation_lower_bound(rng, count=10) -> int:
    cfg = SearchConfig()
    bad = 0
    for _ in range(count):
        ctx = _random_instance(rng, K=4, snr_db=10.0)
        a = np.ones(ctx.Nt, dtype=np.int64)
        problem = coeff_opt.build_ucm_problem(ctx, a, _random_factors(rng))
        sol = coeff_opt.solve_ucm_sdp(problem, cfg)
        best = oracle.brute_minmax_quadratic(problem.Q1, problem.Q2,
                                             problem.q1, problem.q2, 4)
        if sol.epsilon > problem.objective(best) + 1e-5:
            bad += 1
    return bad


CHECKS = (
    ("sequential selection matches joint selection", check_sequential_matches_joint),
    ("factor Gram matrix positive definite", check_factor_gram_positive_definite),
    ("stage iteration monotone and terminating", check_monotone_iteration),
    ("rank-one projector semidefinite", check_rank_one_projector_semidefinite),
    ("zero-rate radius implies zero rate", check_zero_rate_radius),
    ("factor reduction matches exhaustive search", check_factor_reduction_exact),
    ("relaxation lower-bounds integer optimum", check_relaxation_lower_bound),
)


def run_all(seed: int = 7, report=print) -> int:
    failures = 0
    for label, check in CHECKS:
        rng = np.random.default_rng(seed)
        bad = check(rng)
        status = "PASS" if bad == 0 else f"FAIL ({bad} violations)"
        report(f"{status}: {label}")
        failures += bad
    return failures
