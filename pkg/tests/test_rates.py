import numpy as np
import pytest

from ifsim import channel, linalg, rates


def make_ctx(K=3, N=2, snr=10.0, seed=0):
    cs = channel.generate(K, N, N, 1.0, seed)
    return channel.receiver_context(cs, 0, snr)


def zero_channel_ctx(K=2, N=2, snr=10.0):
    cs = channel.generate(K, N, N, 0.0, seed=1)
    return channel.receiver_context(cs, 0, snr)


def scalar_ctx(h=0.8, snr=5.0):
    cs = channel.ChannelSet(K=1, Nt=(1,), Nr=(1,), H=((np.array([[h]]),),),
                            rho2=np.ones((1, 1)), seed=0)
    return channel.receiver_context(cs, 0, snr)


class TestProjectionVector:
    def test_zero_channel_gives_zero(self):
        ctx = zero_channel_ctx()
        b = rates.projection_vector(ctx, np.ones(ctx.L))
        assert np.allclose(b, 0.0)

    def test_scalar_closed_form(self):
        h, snr = 0.8, 5.0
        ctx = scalar_ctx(h, snr)
        b = rates.projection_vector(ctx, np.array([1.0]))
        assert b[0] == pytest.approx(h / (1.0 / snr + h * h), rel=1e-12)

    def test_rate_from_mse_matches_equation_rate(self):
        # Effective noise of the projection front-end, evaluated from the
        # filter itself, reproduces the closed-form rate.
        ctx = make_ctx(seed=3)
        rng = np.random.default_rng(4)
        for _ in range(25):
            a = rng.integers(-3, 4, ctx.L)
            if not a.any():
                continue
            b = rates.projection_vector(ctx, a)
            mse = float(b @ b) / ctx.snr + float(np.sum((ctx.Hhat.T @ b - a) ** 2))
            from_mse = max(0.0, -np.log2(mse))
            assert from_mse == pytest.approx(rates.equation_rate(ctx, a), abs=1e-9)


class TestEquationRate:
    def test_zero_channel_unit_ecv(self):
        ctx = zero_channel_ctx()
        one = np.zeros(ctx.L, dtype=np.int64)
        one[0] = 1
        assert rates.equation_rate(ctx, one) == 0.0

    def test_scalar_closed_form(self):
        h, snr = 1.3, 8.0
        ctx = scalar_ctx(h, snr)
        assert rates.equation_rate(ctx, np.array([1])) == pytest.approx(
            np.log2(1.0 + snr * h * h), rel=1e-12)

    def test_norm_beyond_universal_radius_is_zero(self):
        ctx = make_ctx(seed=5, snr=31.6)
        cap = 1.0 + ctx.snr * ctx.hmax ** 2
        m = int(np.ceil(np.sqrt(cap)))
        ecv = np.zeros(ctx.L, dtype=np.int64)
        ecv[1] = m
        assert rates.equation_rate(ctx, ecv) == 0.0

    def test_zero_ecv_rejected(self):
        ctx = make_ctx(seed=6)
        with pytest.raises(rates.DegenerateInput):
            rates.equation_rate(ctx, np.zeros(ctx.L))

    def test_monotone_in_snr(self):
        cs = channel.generate(3, 2, 2, 1.0, seed=7)
        rng = np.random.default_rng(8)
        for _ in range(20):
            a = rng.integers(-2, 3, 6)
            if not a.any():
                continue
            last = -1.0
            for snr_db in (0.0, 5.0, 10.0, 15.0, 20.0):
                ctx = channel.receiver_context(cs, 0, 10 ** (snr_db / 10.0))
                r = rates.equation_rate(ctx, a)
                assert r >= last - 1e-12
                last = r


class TestFl:
    def test_zero_factors(self):
        ctx = make_ctx(seed=9)
        assert rates.f_l(ctx, 0, 0, np.ones(ctx.Nt), np.ones(ctx.Lc)) == 0.0

    def test_pure_dcm_reduction(self):
        ctx = make_ctx(seed=10)
        a = np.array([1, -2])
        c = np.array([1, 0, 2, -1])
        stacked = rates.stacked_ecv(ctx, 1, a, 0, c)
        assert rates.f_l(ctx, 1, 0, a, c) == pytest.approx(
            float(stacked @ ctx.m_full @ stacked), abs=1e-9)

    def test_stacked_form_identity(self):
        # Block-split evaluation equals the full-length quadratic form.
        rng = np.random.default_rng(11)
        for trial in range(50):
            ctx = make_ctx(N=int(rng.integers(1, 3)), seed=100 + trial,
                           snr=float(10 ** rng.uniform(-0.5, 2.5)))
            a = rng.integers(-4, 5, ctx.Nt)
            c = rng.integers(-4, 5, ctx.Lc)
            d, e = int(rng.integers(-3, 4)), int(rng.integers(-3, 4))
            stacked = rates.stacked_ecv(ctx, d, a, e, c)
            expected = float(stacked @ ctx.m_full @ stacked)
            assert rates.f_l(ctx, d, e, a, c) == pytest.approx(expected, abs=1e-9 * max(1, expected))


class TestDcmRate:
    def test_zero_ucm_with_pure_interference_equation_rejected(self):
        ctx = make_ctx(seed=12)
        pair = rates.EquationPair(1, 0, 0, 1, a=np.array([1, 0]),
                                  c=np.zeros(ctx.Lc, dtype=np.int64))
        with pytest.raises(rates.DegenerateInput):
            rates.dcm_rate(ctx, pair)

    def test_singular_factors_rejected(self):
        ctx = make_ctx(seed=13)
        pair = rates.EquationPair(1, 1, 2, 2, a=np.array([1, 0]),
                                  c=np.ones(ctx.Lc, dtype=np.int64))
        with pytest.raises(rates.DegenerateFactors):
            rates.dcm_rate(ctx, pair)

    def test_equation_swap_symmetry(self):
        ctx = make_ctx(seed=14)
        a = np.array([1, 1])
        c = np.array([1, 0, -1, 1])
        r1 = rates.dcm_rate(ctx, rates.EquationPair(1, 1, 1, -1, a=a, c=c))
        r2 = rates.dcm_rate(ctx, rates.EquationPair(1, -1, 1, 1, a=a, c=c))
        assert r1 == pytest.approx(r2, abs=1e-12)

    def test_zero_beyond_radius(self):
        from ifsim.coeff_opt import lemma2_radius
        rng = np.random.default_rng(15)
        for trial in range(50):
            ctx = make_ctx(seed=200 + trial, snr=float(10 ** rng.uniform(0, 2)))
            factors = (1, 1, 1, -1)
            c = rng.integers(-2, 3, ctx.Lc)
            radius_sq = lemma2_radius(ctx, factors, c)
            a = np.zeros(ctx.Nt, dtype=np.int64)
            a[0] = max(1, int(np.ceil(np.sqrt(max(radius_sq, 0.0)))))
            pair = rates.EquationPair(*factors, a=a, c=c)
            assert rates.dcm_rate(ctx, pair) == 0.0
