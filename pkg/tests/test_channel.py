import numpy as np
import pytest

from ifsim import channel, linalg


class TestGenerate:
    def test_zero_variance_means_zero_matrices(self):
        cs = channel.generate(2, 1, 1, 0.0, seed=1)
        for k in range(2):
            for j in range(2):
                assert not cs.H[k][j].any()

    def test_seed_determinism(self):
        a = channel.generate(3, 2, 2, 1.0, seed=42)
        b = channel.generate(3, 2, 2, 1.0, seed=42)
        for k in range(3):
            for j in range(3):
                assert np.array_equal(a.H[k][j], b.H[k][j])

    def test_substreams_differ(self):
        a = channel.generate(2, 1, 1, 1.0, seed=42, substream=0)
        b = channel.generate(2, 1, 1, 1.0, seed=42, substream=1)
        assert not np.array_equal(a.H[0][0], b.H[0][0])

    def test_sample_variance(self):
        # Law of large numbers: 10^5 draws of unit-variance entries.
        draws = []
        for t in range(3000):
            cs = channel.generate(3, 2, 2, 1.0, seed=7, substream=t)
            draws.append(np.concatenate([cs.H[k][j].ravel() for k in range(3) for j in range(3)]))
        flat = np.concatenate(draws)
        assert flat.size >= 10 ** 5
        assert 0.97 <= flat.var() <= 1.03

    def test_shapes_follow_antenna_counts(self):
        cs = channel.generate(2, (1, 3), (2, 4), 1.0, seed=3)
        assert cs.H[0][1].shape == (4, 1)
        assert cs.H[1][0].shape == (2, 3)

    def test_invalid_dimensions(self):
        with pytest.raises(channel.InvalidConfig):
            channel.generate(0, 1, 1, 1.0, seed=1)
        with pytest.raises(channel.InvalidConfig):
            channel.generate(2, (1, 0), 1, 1.0, seed=1)
        with pytest.raises(channel.InvalidConfig):
            channel.generate(2, 1, 1, -1.0, seed=1)


class TestReceiverContext:
    def test_single_pair_has_no_interference(self):
        cs = channel.generate(1, 2, 2, 1.0, seed=5)
        ctx = channel.receiver_context(cs, 0, 10.0)
        assert ctx.Lc == 0
        assert ctx.Hk.shape == (2, 0)
        assert np.array_equal(ctx.Hhat, cs.H[0][0])

    def test_block_bookkeeping(self):
        cs = channel.generate(2, (1, 1), (1, 1), 1.0, seed=6)
        ctx = channel.receiver_context(cs, 0, 2.0)
        assert np.array_equal(ctx.Hhat, np.hstack([cs.H[0][0], cs.H[1][0]]))
        assert np.array_equal(ctx.Hk, cs.H[1][0])
        assert np.array_equal(ctx.Hkk, cs.H[0][0])

    def test_block_removal_bit_equal(self):
        cs = channel.generate(3, 2, 2, 1.0, seed=8)
        for k in range(3):
            ctx = channel.receiver_context(cs, k, 5.0)
            manual = np.hstack([cs.H[j][k] for j in range(3) if j != k])
            assert np.array_equal(ctx.Hk, manual)

    def test_kernel_inverse_residual(self):
        cs = channel.generate(3, 2, 2, 1.0, seed=9)
        ctx = channel.receiver_context(cs, 1, 31.6)
        inv = linalg.solve_cholesky(ctx.kernel_chol, np.eye(ctx.kernel.shape[0]))
        assert np.abs(inv @ ctx.kernel - np.eye(ctx.kernel.shape[0])).max() < 1e-8

    def test_kernel_minimum_eigenvalue(self):
        cs = channel.generate(2, 2, 3, 1.0, seed=10)
        for snr in (0.5, 10.0, 1000.0):
            ctx = channel.receiver_context(cs, 0, snr)
            vals, _ = linalg.eig_sym(ctx.kernel)
            assert vals[0] >= (1.0 / snr) * (1.0 - 1e-12)

    def test_bad_snr_rejected(self):
        cs = channel.generate(1, 1, 1, 1.0, seed=2)
        with pytest.raises(ValueError):
            channel.receiver_context(cs, 0, 0.0)
