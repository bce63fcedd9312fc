"""Channel sampling statistics and the per-realization capacity quantities."""

import math

import numpy as np
import pytest
from scipy import linalg

from rascap.channel import (
    CapacityError,
    ChannelMatrix,
    SystemConfig,
    bub_of_channel,
    capacity,
    capacity_batch,
    mub_of_channel,
    sample_channel,
)
from rascap.numerics import regularized_upper_gamma
from rascap.selection import exhaustive_select

RHO_8DB = 10.0 ** 0.8


class TestSystemConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SystemConfig(0, 4, 1, 1.0)
        with pytest.raises(ValueError):
            SystemConfig(2, 4, 5, 1.0)
        with pytest.raises(ValueError):
            SystemConfig(2, 4, 0, 1.0)
        with pytest.raises(ValueError):
            SystemConfig(2, 4, 2, 0.0)

    def test_regime_tagging(self):
        assert SystemConfig(4, 16, 3, 1.0).is_bub_regime
        assert SystemConfig(4, 16, 4, 1.0).is_bub_regime
        assert not SystemConfig(4, 16, 5, 1.0).is_bub_regime

    def test_db_conversion(self):
        cfg = SystemConfig.from_db(8, 64, 4, 8.0)
        assert cfg.rho_bar == pytest.approx(10.0 ** 0.8, rel=1e-12)
        assert cfg.rho == pytest.approx(4 * 10.0 ** 0.8, rel=1e-12)
        assert cfg.beta == pytest.approx(4.0 / 64.0)


class TestSampleChannel:
    def test_deterministic_for_fixed_seed(self):
        cfg = SystemConfig(4, 16, 2, 1.0)
        a = sample_channel(cfg, seed=42)
        b = sample_channel(cfg, seed=42)
        assert np.array_equal(a.h, b.h)

    def test_seed_and_trial_vary_the_draw(self):
        cfg = SystemConfig(4, 16, 2, 1.0)
        base = sample_channel(cfg, seed=42)
        assert not np.array_equal(base.h, sample_channel(cfg, seed=43).h)
        assert not np.array_equal(base.h, sample_channel(cfg, seed=42, trial=1).h)

    def test_entry_second_moment(self):
        # pooled E|h|^2 = 1 within four standard errors (Var |h|^2 = 1)
        cfg = SystemConfig(10, 100, 1, 1.0)
        pooled = np.concatenate(
            [sample_channel(cfg, seed=5, trial=t).entry_gains.ravel()
             for t in range(100)])
        assert pooled.size == 100_000
        assert abs(pooled.mean() - 1.0) < 4.0 / math.sqrt(pooled.size)

    def test_real_imag_split(self):
        cfg = SystemConfig(50, 200, 1, 1.0)
        h = sample_channel(cfg, seed=9).h
        for part in (h.real, h.imag):
            assert abs(part.var() - 0.5) < 4.0 * 0.5 * math.sqrt(2.0 / part.size)

    def test_row_gains_follow_gamma_law(self):
        # empirical CDF of ||row||^2 vs 1 - Q(n_t, x), one-sample KS <= 0.01
        nt, rows_wanted = 8, 100_000
        cfg = SystemConfig(nt, 1000, 1, 1.0)
        gains = np.concatenate(
            [sample_channel(cfg, seed=3, trial=t).row_gains
             for t in range(rows_wanted // 1000)])
        x = np.sort(gains)
        n = x.size
        cdf = 1.0 - regularized_upper_gamma(nt, x)
        d = max(np.abs(np.arange(1, n + 1) / n - cdf).max(),
                np.abs(np.arange(0, n) / n - cdf).max())
        assert d <= 0.01


class TestCapacity:
    def test_single_unit_row(self):
        assert capacity(np.array([[1.0 + 0j, 0, 0]]), 1.0) == pytest.approx(1.0)

    def test_zero_matrix(self):
        assert capacity(np.zeros((3, 2), dtype=complex), 5.0) == pytest.approx(0.0)

    def test_matches_eigenvalue_form(self):
        rng = np.random.default_rng(0)
        sub = (rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)))
        lam = linalg.eigvalsh(sub @ sub.conj().T)
        expected = np.log2(1.0 + 2.0 * np.clip(lam, 0.0, None)).sum()
        assert capacity(sub, 2.0) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("shape", [(2, 5), (5, 2), (4, 4)])
    def test_dual_gram_forms_agree(self, shape):
        rng = np.random.default_rng(7)
        m = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        rho = 3.0
        tall = np.log2(np.real(linalg.det(np.eye(shape[0]) + rho * m @ m.conj().T)))
        wide = np.log2(np.real(linalg.det(np.eye(shape[1]) + rho * m.conj().T @ m)))
        assert abs(tall - wide) <= 1e-9
        assert capacity(m, rho) == pytest.approx(tall, abs=1e-9)

    def test_monotone_in_snr_and_rows(self):
        rng = np.random.default_rng(3)
        m = (rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3)))
        caps = [capacity(m, r) for r in (0.5, 1.0, 2.0, 4.0)]
        assert all(a < b for a, b in zip(caps, caps[1:]))
        grow = [capacity(m[:k], 2.0) for k in range(1, 7)]
        assert all(a <= b + 1e-12 for a, b in zip(grow, grow[1:]))

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(12)
        subs = (rng.standard_normal((10, 3, 5))
                + 1j * rng.standard_normal((10, 3, 5)))
        batch = capacity_batch(subs, 1.7)
        for i in range(10):
            assert batch[i] == pytest.approx(capacity(subs[i], 1.7), abs=1e-10)

    def test_rejects_empty_and_corrupt(self):
        with pytest.raises(ValueError):
            capacity(np.zeros((0, 3), dtype=complex), 1.0)
        bad = np.full((2, 2), np.nan, dtype=complex)
        with pytest.raises(CapacityError):
            capacity(bad, 1.0)


class TestBoundsOfChannel:
    def test_bub_full_selection_is_plain_sum(self):
        cfg = SystemConfig(4, 6, 6, RHO_8DB)
        h = sample_channel(cfg, seed=1)
        expected = np.log2(1.0 + RHO_8DB * h.row_gains).sum()
        assert bub_of_channel(h, cfg) == pytest.approx(expected, rel=1e-12)

    def test_bub_single_selection_takes_max_gain(self):
        cfg = SystemConfig(4, 6, 1, RHO_8DB)
        h = sample_channel(cfg, seed=2)
        assert bub_of_channel(h, cfg) == pytest.approx(
            np.log2(1.0 + RHO_8DB * h.row_gains.max()), rel=1e-12)

    def test_bub_against_sort_oracle(self):
        cfg = SystemConfig(4, 8, 3, 2.0)
        h = sample_channel(cfg, seed=3)
        top3 = sorted(h.row_gains, reverse=True)[:3]
        assert bub_of_channel(h, cfg) == pytest.approx(
            sum(math.log2(1.0 + 2.0 * g) for g in top3), rel=1e-12)

    def test_mub_single_transmit_antenna(self):
        cfg = SystemConfig(1, 10, 4, 2.0)
        h = sample_channel(cfg, seed=4)
        col = np.sort(h.entry_gains[:, 0])[::-1]
        assert mub_of_channel(h, cfg) == pytest.approx(
            math.log2(1.0 + 2.0 * col[:4].sum()), rel=1e-12)

    def test_mub_full_selection_uses_column_norms(self):
        cfg = SystemConfig(3, 7, 7, 1.5)
        h = sample_channel(cfg, seed=5)
        expected = np.log2(1.0 + 1.5 * h.entry_gains.sum(axis=0)).sum()
        assert mub_of_channel(h, cfg) == pytest.approx(expected, rel=1e-12)

    def test_mub_against_per_column_sort_oracle(self):
        cfg = SystemConfig(3, 10, 5, 2.0)
        h = sample_channel(cfg, seed=6)
        expected = sum(
            math.log2(1.0 + 2.0 * np.sort(h.entry_gains[:, j])[-5:].sum())
            for j in range(3))
        assert mub_of_channel(h, cfg) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("nt,nr", [(2, 6), (4, 7)])
    def test_hadamard_domination_on_random_instances(self, nt, nr):
        for trial in range(20):
            base = SystemConfig(nt, nr, 1, RHO_8DB)
            h = sample_channel(base, seed=8, trial=trial)
            for l in range(1, nr + 1):
                cfg = SystemConfig(nt, nr, l, RHO_8DB)
                c_opt = exhaustive_select(h, cfg).capacity
                assert bub_of_channel(h, cfg) >= c_opt - 1e-9
                assert mub_of_channel(h, cfg) >= c_opt - 1e-9

    def test_dimension_mismatch_rejected(self):
        cfg = SystemConfig(4, 8, 2, 1.0)
        h = sample_channel(cfg, seed=0)
        with pytest.raises(ValueError):
            bub_of_channel(h, SystemConfig(4, 9, 2, 1.0))


def test_channel_matrix_requires_2d():
    with pytest.raises(ValueError):
        ChannelMatrix(np.zeros(4, dtype=complex))
