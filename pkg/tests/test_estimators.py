"""Estimator-family tests, anchored by brute-force oracles.

The oracles deliberately avoid the production code paths: dense
``np.linalg.inv`` / ``np.linalg.det`` instead of cached Cholesky solves, and
explicit Gaussian densities instead of log-domain softmax.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syncsep.covariance import CovMatrix, analytic_cov_soi, build_bank
from syncsep.estimators import (
    family_batch,
    lmmse,
    lmmse_cond,
    map_qlmmse,
    map_sync,
    mmse,
    psi_stat,
    psi_sync,
    separate_long,
    shift_posterior,
)
from syncsep.mixture import sample_mixture_windows
from syncsep.signals import ComplexSignal, OfdmSpec, QpskSpec

TOY_QPSK = QpskSpec(rolloff=0.5, span_symbols=4, oversampling=4, alphabet="gaussian")
TOY_OFDM = OfdmSpec(fft_size=8, cp_len=2, alphabet="gaussian")


def random_psd(rng, n, floor=0.1):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + floor * np.eye(n)


def toy_bank(c_ss, c_vv_list, sir_db=0.0, snr_db=float("inf")):
    return build_bank(
        np.asarray(c_ss, dtype=complex),
        [np.asarray(c, dtype=complex) for c in c_vv_list],
        sir_db,
        snr_db,
        np.asarray(c_ss).shape[0],
        len(c_vv_list),
    )


def oracle_lmmse(y, c_ss, c_yy):
    return c_ss @ np.linalg.inv(c_yy) @ y


def oracle_gaussian_density(y, c):
    n = y.size
    q = np.real(y.conj() @ np.linalg.inv(c) @ y)
    return np.exp(-q) / (np.pi**n * np.real(np.linalg.det(c)))


class TestLmmse:
    def test_scalar_wiener_gain(self):
        bank = toy_bank(np.eye(2), [np.eye(2)])
        y = np.array([1.0 + 1j, -2.0], dtype=complex)
        np.testing.assert_allclose(lmmse(y, bank), y / 2, rtol=1e-9)

    def test_vanishing_noise_identity(self):
        rng = np.random.default_rng(0)
        c_ss = random_psd(rng, 4, floor=0.5)
        bank = toy_bank(c_ss, [np.zeros((4, 4))])
        y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        np.testing.assert_allclose(lmmse(y, bank), y, rtol=1e-6, atol=1e-6)

    def test_dense_inverse_oracle(self):
        # A8 companion: matches the explicit matrix-inverse formula
        rng = np.random.default_rng(1)
        c_ss = random_psd(rng, 3)
        c_vv = random_psd(rng, 3)
        bank = toy_bank(c_ss, [c_vv])
        y = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        expect = oracle_lmmse(y, bank.c_ss.entries, bank.c_yy_avg.entries)
        np.testing.assert_allclose(lmmse(y, bank), expect, atol=1e-10)

    def test_dimension_mismatch(self):
        bank = toy_bank(np.eye(2), [np.eye(2)])
        with pytest.raises(ValueError):
            lmmse(np.zeros(3, dtype=complex), bank)


class TestLmmseCond:
    def test_identity_pair(self):
        bank = toy_bank(np.eye(2), [np.eye(2), 2 * np.eye(2)])
        y = np.array([2.0, 2j])
        np.testing.assert_allclose(lmmse_cond(y, 0, bank), y / 2, rtol=1e-9)

    def test_same_covariance_same_output(self):
        c = np.diag([1.0, 2.0])
        bank = toy_bank(np.eye(2), [c, c])
        y = np.array([1.0 + 1j, -1j])
        np.testing.assert_allclose(lmmse_cond(y, 0, bank), lmmse_cond(y, 1, bank), atol=1e-14)

    def test_shift_out_of_range(self):
        bank = toy_bank(np.eye(2), [np.eye(2)])
        with pytest.raises(ValueError):
            lmmse_cond(np.zeros(2, dtype=complex), 1, bank)

    def test_conditioning_beats_average_at_true_shift(self):
        rng = np.random.default_rng(2)
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 20, 10)
        trials = 1000
        k = rng.integers(0, 10, trials)
        y, s = sample_mixture_windows(TOY_QPSK, TOY_OFDM, 20, 0.0, 20.0, k, rng)
        e_cond = np.empty(trials)
        e_avg = np.sum(np.abs(lmmse(y, bank) - s) ** 2, axis=0)
        for m in np.unique(k):
            idx = np.nonzero(k == m)[0]
            e_cond[idx] = np.sum(np.abs(lmmse_cond(y[:, idx], m, bank) - s[:, idx]) ** 2, axis=0)
        assert e_cond.mean() < e_avg.mean()


class TestShiftPosterior:
    def test_singleton(self):
        bank = toy_bank(np.eye(2), [np.eye(2)])
        post = shift_posterior(np.array([1.0, 1j]), bank)
        np.testing.assert_allclose(post.probs, [1.0])

    def test_identical_covariances_uniform(self):
        bank = toy_bank(np.eye(2), [np.eye(2)] * 4)
        post = shift_posterior(np.array([3.0, -1j]), bank)
        np.testing.assert_allclose(post.probs, 0.25, atol=1e-12)
        assert abs(post.probs.sum() - 1.0) < 1e-10

    def test_two_hypothesis_density_oracle(self):
        rng = np.random.default_rng(3)
        c_ss = random_psd(rng, 2)
        v0, v1 = random_psd(rng, 2), random_psd(rng, 2)
        bank = toy_bank(c_ss, [v0, v1])
        y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        p0 = oracle_gaussian_density(y, bank.c_yy[0].entries)
        p1 = oracle_gaussian_density(y, bank.c_yy[1].entries)
        post = shift_posterior(y, bank)
        np.testing.assert_allclose(post.probs, [p0 / (p0 + p1), p1 / (p0 + p1)], atol=1e-12)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_posterior_is_distribution(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 6))
        bank = toy_bank(random_psd(rng, 3), [random_psd(rng, 3) for _ in range(k)])
        y = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        post = shift_posterior(y, bank)
        assert np.all(post.probs >= 0) and np.all(post.probs <= 1)
        assert abs(post.probs.sum() - 1.0) < 1e-10


class TestSync:
    def test_map_argmax(self):
        # covariance scaled up under hypothesis 1 makes small y favor 1? no:
        # build so hypothesis 0 clearly wins for a matched draw
        bank = toy_bank(0.1 * np.eye(2), [0.1 * np.eye(2), 100 * np.eye(2)])
        y = np.array([0.3, 0.1j])
        assert map_sync(y, bank) == 0

    def test_map_tie_lowest_index(self):
        bank = toy_bank(np.eye(2), [np.eye(2), np.eye(2)])
        assert map_sync(np.array([1.0, 1.0j]), bank) == 0

    def test_psi_zero_input(self):
        bank = toy_bank(np.eye(2), [np.eye(2)])
        assert psi_stat(np.zeros(2, dtype=complex), 0, bank) == -1.0

    def test_psi_calibrated_norm(self):
        bank = toy_bank(np.eye(2), [np.zeros((2, 2))], snr_db=0.0)
        # c_yy ~ 2I; psi = |y|^2/(2 L) - 1 = 0 for |y|^2 = 2L
        y = np.array([np.sqrt(2.0), np.sqrt(2.0) * 1j])
        assert abs(psi_stat(y, 0, bank)) < 1e-8

    def test_psi_moments(self):
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 20, 10)
        rng = np.random.default_rng(4)
        trials = 100000
        k = rng.integers(0, 10, trials)
        y, _ = sample_mixture_windows(TOY_QPSK, TOY_OFDM, 20, 0.0, 20.0, k, rng)
        psis = np.empty(trials)
        for m in np.unique(k):
            idx = np.nonzero(k == m)[0]
            psis[idx] = psi_stat(y[:, idx], m, bank)
        assert abs(psis.mean()) < 3 * psis.std() / np.sqrt(trials)
        assert abs(psis.var() - 1.0 / 20) < 4 * (1.0 / 20) / np.sqrt(trials / 10)

    def test_psi_sync_singleton_and_tie(self):
        bank = toy_bank(np.eye(2), [np.eye(2)])
        assert psi_sync(np.array([1.0, 1j]), bank) == 0
        bank2 = toy_bank(np.eye(2), [np.eye(2), np.eye(2)])
        assert psi_sync(np.array([1.0, 1j]), bank2) == 0


class TestMapQlmmse:
    def test_singleton_equals_conditional(self):
        bank = toy_bank(np.eye(3), [2 * np.eye(3)])
        y = np.array([1.0, 1j, -1.0])
        res = map_qlmmse(y, bank)
        np.testing.assert_allclose(res.s_hat.samples, lmmse_cond(y, 0, bank), atol=1e-14)
        assert res.k_b_hat == 0

    def test_plugin_definition(self):
        rng = np.random.default_rng(5)
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 20, 10)
        y, _ = sample_mixture_windows(TOY_QPSK, TOY_OFDM, 20, 0.0, 20.0, np.array([4]), rng)
        res = map_qlmmse(y[:, 0], bank)
        np.testing.assert_array_equal(
            res.s_hat.samples, lmmse_cond(y[:, 0], res.k_b_hat, bank)
        )


class TestMmse:
    def test_degenerate_posterior(self):
        bank = toy_bank(np.eye(2), [np.eye(2)])
        y = np.array([1.0, -1j])
        res = mmse(y, bank)
        np.testing.assert_allclose(res.s_hat.samples, lmmse_cond(y, 0, bank), atol=1e-12)

    def test_two_component_mixture_oracle(self):
        # A8 core: direct conditional mean of the two-component Gaussian
        # mixture through explicit densities and inverses
        rng = np.random.default_rng(6)
        c_ss = random_psd(rng, 4)
        v0, v1 = random_psd(rng, 4), random_psd(rng, 4)
        bank = toy_bank(c_ss, [v0, v1])
        y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        c0, c1 = bank.c_yy[0].entries, bank.c_yy[1].entries
        p0 = 0.5 * oracle_gaussian_density(y, c0)
        p1 = 0.5 * oracle_gaussian_density(y, c1)
        w0, w1 = p0 / (p0 + p1), p1 / (p0 + p1)
        expect = w0 * oracle_lmmse(y, bank.c_ss.entries, c0) + w1 * oracle_lmmse(
            y, bank.c_ss.entries, c1
        )
        res = mmse(y, bank)
        np.testing.assert_allclose(res.s_hat.samples, expect, atol=1e-10)

    def test_dominates_family(self):
        rng = np.random.default_rng(7)
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 20, 10)
        trials = 1000
        k = rng.integers(0, 10, trials)
        y, s = sample_mixture_windows(TOY_QPSK, TOY_OFDM, 20, 0.0, 20.0, k, rng)
        out = family_batch(y, bank, ("lmmse", "map-qlmmse", "psi-qlmmse", "mmse"))
        errs = {
            m: np.sum(np.abs(out[m] - s) ** 2, axis=0)
            for m in ("lmmse", "map-qlmmse", "psi-qlmmse", "mmse")
        }
        for m in ("lmmse", "map-qlmmse", "psi-qlmmse"):
            diff = errs[m] - errs["mmse"]
            assert diff.mean() > -2 * diff.std() / np.sqrt(trials)

    def test_general_double_sum_reduces_to_default(self):
        rng = np.random.default_rng(8)
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 12, 10)
        y, _ = sample_mixture_windows(TOY_QPSK, TOY_OFDM, 12, 0.0, 20.0, np.array([2]), rng)
        soi_shifts = [analytic_cov_soi(TOY_QPSK, 12, 0)]
        a = mmse(y[:, 0], bank)
        b = mmse(y[:, 0], bank, soi_shifts=soi_shifts)
        np.testing.assert_allclose(a.s_hat.samples, b.s_hat.samples, atol=1e-9)

    def test_general_double_sum_runs(self):
        rng = np.random.default_rng(9)
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 12, 10)
        soi_shifts = [analytic_cov_soi(TOY_QPSK, 12, m) for m in range(4)]
        y, _ = sample_mixture_windows(TOY_QPSK, TOY_OFDM, 12, 0.0, 20.0, np.array([2]), rng)
        res = mmse(y[:, 0], bank, soi_shifts=soi_shifts)
        assert res.s_hat.samples.shape == (12,)
        assert abs(res.posterior.probs.sum() - 1.0) < 1e-9


class TestSeparateLong:
    def test_single_block_equals_direct(self):
        rng = np.random.default_rng(10)
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 20, 10)
        y, _ = sample_mixture_windows(TOY_QPSK, TOY_OFDM, 20, 0.0, 20.0, np.array([3]), rng)
        sig = ComplexSignal(y[:, 0])
        res = separate_long(sig, bank, "map-qlmmse", 20)
        direct = map_qlmmse(y[:, 0], bank)
        np.testing.assert_allclose(res.s_hat.samples, direct.s_hat.samples, atol=1e-12)
        assert res.k_b_hat == direct.k_b_hat

    def test_period_aligned_blocks_share_shift(self):
        # K_b = 10, L = 20: both blocks land on the same effective shift
        rng = np.random.default_rng(11)
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 20, 10)
        y, _ = sample_mixture_windows(TOY_QPSK, TOY_OFDM, 40, 0.0, 20.0, np.array([7]), rng)
        res = separate_long(ComplexSignal(y[:, 0]), bank, "map-qlmmse", 20)
        manual = np.concatenate(
            [
                lmmse_cond(y[:20, 0], res.k_b_hat, bank),
                lmmse_cond(y[20:, 0], res.k_b_hat, bank),
            ]
        )
        np.testing.assert_allclose(res.s_hat.samples, manual, atol=1e-12)

    def test_shift_advance_across_blocks(self):
        # L = 15, K_b = 10: block j advances the shift by 15 mod 10 = 5
        rng = np.random.default_rng(12)
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 15, 10)
        y, _ = sample_mixture_windows(TOY_QPSK, TOY_OFDM, 30, 0.0, 20.0, np.array([2]), rng)
        res = separate_long(ComplexSignal(y[:, 0]), bank, "map-qlmmse", 15)
        k = res.k_b_hat
        manual = np.concatenate(
            [
                lmmse_cond(y[:15, 0], k, bank),
                lmmse_cond(y[15:, 0], (k + 15) % 10, bank),
            ]
        )
        np.testing.assert_allclose(res.s_hat.samples, manual, atol=1e-12)

    def test_partial_tail_uses_cropped_bank(self):
        rng = np.random.default_rng(13)
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 20, 10)
        y, _ = sample_mixture_windows(TOY_QPSK, TOY_OFDM, 33, 0.0, 20.0, np.array([0]), rng)
        res = separate_long(ComplexSignal(y[:, 0]), bank, "lmmse", 20)
        assert len(res.s_hat) == 33

    def test_mf_only_identity(self):
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 20, 10)
        y = np.arange(40, dtype=complex)
        res = separate_long(ComplexSignal(y), bank, "mf-only", 20)
        np.testing.assert_array_equal(res.s_hat.samples, y)
        assert res.k_b_hat is None

    def test_too_short(self):
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 20, 10)
        with pytest.raises(ValueError):
            separate_long(ComplexSignal(np.zeros(10, dtype=complex)), bank, "lmmse", 20)

    def test_unknown_method(self):
        bank = build_bank(TOY_QPSK, TOY_OFDM, 0.0, 20.0, 20, 10)
        with pytest.raises(ValueError):
            separate_long(ComplexSignal(np.zeros(20, dtype=complex)), bank, "wiener", 20)
