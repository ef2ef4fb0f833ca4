"""Mixture generation, dataset format, and reproducibility tests."""

import io

import numpy as np
import pytest
from scipy.stats import chi2

from syncsep.covariance import analytic_cov_ofdm, empirical_cov
from syncsep.mixture import (
    Dataset,
    DatasetFormatError,
    MixtureParams,
    PredictionSet,
    amp_coeff,
    apply_shift,
    gen_dataset,
    make_record,
    mix,
    read_dataset,
    read_predictions,
    record_rng,
    sample_mixture_windows,
    write_dataset,
    write_predictions,
)
from syncsep.signals import ComplexSignal, OfdmSpec, QpskSpec, gen_ofdm

TOY_QPSK = QpskSpec(rolloff=0.5, span_symbols=4, oversampling=4, alphabet="qpsk")
TOY_OFDM = OfdmSpec(fft_size=8, cp_len=2, alphabet="qam16")
TOY_PARAMS = MixtureParams(n_samples=80, sir_db=0.0, snr_db=20.0, K_s=4, K_b=10)


class TestApplyShift:
    def test_zero_shift(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(apply_shift(x, 0, 3), [1.0, 2.0, 3.0])

    def test_unit_shift(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(apply_shift(x, 1, 3), [2.0, 3.0, 4.0])

    def test_too_short(self):
        with pytest.raises(ValueError):
            apply_shift(np.zeros(4), 2, 3)

    def test_signal_meta_phase_advances(self):
        sig = ComplexSignal(np.zeros(10), {"symbol_phase": 0, "oversampling": 4})
        out = apply_shift(sig, 1, 8)
        assert out.meta["symbol_phase"] == 3

    def test_shifted_window_covariance_matches_bank_entry(self):
        # empirical covariance of OFDM windows at shift m matches the
        # analytic per-shift covariance used by the banks
        rng = np.random.default_rng(0)
        spec = OfdmSpec(fft_size=8, cp_len=2, alphabet="gaussian")
        m, L, trials = 7, 15, 150000
        rows = np.empty((trials, L), dtype=complex)
        for i in range(trials):
            full = gen_ofdm(spec, 3, rng)
            rows[i] = apply_shift(full, m, L).samples
        emp = empirical_cov(rows)
        ana = analytic_cov_ofdm(spec, L, m)
        assert np.max(np.abs(emp.entries - ana.entries)) < 4.5 / np.sqrt(trials) + 1e-6


class TestMix:
    def test_unit_coefficients_no_noise(self):
        s = ComplexSignal(np.array([1.0, 2.0], dtype=complex))
        b = ComplexSignal(np.array([0.5, -0.5], dtype=complex))
        w = ComplexSignal(np.array([9.0, 9.0], dtype=complex))
        y = mix(s, b, w, 0.0, float("inf"))
        np.testing.assert_array_equal(y.samples, [1.5, 1.5])

    def test_snr_coefficient(self):
        z = ComplexSignal(np.zeros(3, dtype=complex))
        w = ComplexSignal(np.ones(3, dtype=complex))
        y = mix(z, z, w, 0.0, 20.0)
        np.testing.assert_allclose(y.samples, 0.1 * np.ones(3), atol=1e-15)

    def test_length_mismatch(self):
        a = ComplexSignal(np.zeros(3, dtype=complex))
        b = ComplexSignal(np.zeros(4, dtype=complex))
        with pytest.raises(ValueError):
            mix(a, b, a, 0.0, 0.0)

    def test_power_additivity(self):
        # independence: powers add as 1 + 1/sir + 1/snr
        rng = np.random.default_rng(1)
        n = 200000
        k = rng.integers(0, 10, 50)
        qpsk = QpskSpec(rolloff=0.5, span_symbols=4, oversampling=4, alphabet="gaussian")
        ofdm = OfdmSpec(fft_size=8, cp_len=2, alphabet="gaussian")
        y, _ = sample_mixture_windows(qpsk, ofdm, 4000, -10.0, 20.0, k, rng)
        power = np.abs(y) ** 2
        expected = 1.0 + 10.0 + 0.01
        se = power.std() / np.sqrt(power.size)
        # samples within a window are correlated; widen by the period
        assert abs(power.mean() - expected) < 3 * se * np.sqrt(10)

    def test_amp_coeff(self):
        assert amp_coeff(float("inf")) == 0.0
        assert abs(amp_coeff(20.0) - 0.1) < 1e-15


class TestGenDataset:
    def test_determinism(self):
        a = gen_dataset(TOY_QPSK, TOY_OFDM, TOY_PARAMS, 3, master_seed=7)
        b = gen_dataset(TOY_QPSK, TOY_OFDM, TOY_PARAMS, 3, master_seed=7)
        for ra, rb in zip(a.records, b.records):
            np.testing.assert_array_equal(ra.y.samples, rb.y.samples)
            np.testing.assert_array_equal(ra.bits, rb.bits)
            assert ra.k_b == rb.k_b

    def test_fixed_zero_soi_shift(self):
        ds = gen_dataset(TOY_QPSK, TOY_OFDM, TOY_PARAMS, 2, master_seed=1)
        assert all(r.k_s == 0 for r in ds.records)

    def test_shift_histogram_uniform(self):
        params = MixtureParams(n_samples=16, sir_db=0.0, snr_db=20.0, K_s=4, K_b=10)
        qpsk = QpskSpec(rolloff=0.5, span_symbols=4, oversampling=4, alphabet="gaussian")
        ofdm = OfdmSpec(fft_size=8, cp_len=2, alphabet="gaussian")
        ds = gen_dataset(qpsk, ofdm, params, 10000, master_seed=3)
        counts = np.bincount([r.k_b for r in ds.records], minlength=10)
        expected = len(ds.records) / 10
        stat = np.sum((counts - expected) ** 2 / expected)
        assert stat < chi2.ppf(0.99, df=9)

    def test_reconstruction_identity(self):
        params = MixtureParams(n_samples=64, sir_db=-3.0, snr_db=12.0, K_s=4, K_b=10)
        rec = make_record(TOY_QPSK, TOY_OFDM, params, record_rng(5, 0), keep_noise=True)
        y = (
            rec.s.samples
            + amp_coeff(-3.0) * rec.b.samples
            + amp_coeff(12.0) * rec.w.samples
        )
        assert np.max(np.abs(y - rec.y.samples)) < 1e-12

    def test_fixed_kb_mode(self):
        params = MixtureParams(
            n_samples=40, sir_db=0.0, snr_db=20.0, k_b_mode="fixed", k_b_fixed=6, K_s=4, K_b=10
        )
        ds = gen_dataset(TOY_QPSK, TOY_OFDM, params, 3, master_seed=2)
        assert all(r.k_b == 6 for r in ds.records)

    def test_uniform_ks_mode(self):
        params = MixtureParams(
            n_samples=40, sir_db=0.0, snr_db=20.0, k_s_mode="uniform", K_s=4, K_b=10
        )
        ds = gen_dataset(TOY_QPSK, TOY_OFDM, params, 200, master_seed=2)
        seen = {r.k_s for r in ds.records}
        assert seen == {0, 1, 2, 3}

    def test_bad_params(self):
        with pytest.raises(ValueError):
            MixtureParams(n_samples=0, sir_db=0.0, snr_db=0.0)
        with pytest.raises(ValueError):
            MixtureParams(n_samples=8, sir_db=0.0, snr_db=0.0, k_b_mode="fixed")
        with pytest.raises(ValueError):
            gen_dataset(TOY_QPSK, TOY_OFDM, TOY_PARAMS, 0, master_seed=0)


class TestDatasetFile:
    def test_round_trip_bitwise(self, tmp_path):
        ds = gen_dataset(TOY_QPSK, TOY_OFDM, TOY_PARAMS, 4, master_seed=9)
        path = tmp_path / "toy.scss"
        write_dataset(ds, path)
        back = read_dataset(path)
        assert len(back.records) == 4
        assert back.params.n_samples == 80
        assert back.params.sir_db == 0.0 and back.params.snr_db == 20.0
        for ra, rb in zip(ds.records, back.records):
            assert ra.k_s == rb.k_s and ra.k_b == rb.k_b
            np.testing.assert_array_equal(ra.y.samples, rb.y.samples)
            np.testing.assert_array_equal(ra.s.samples, rb.s.samples)
            np.testing.assert_array_equal(ra.b.samples, rb.b.samples)
            np.testing.assert_array_equal(ra.bits, rb.bits)

    def test_byte_determinism(self, tmp_path):
        p1, p2 = tmp_path / "a.scss", tmp_path / "b.scss"
        write_dataset(gen_dataset(TOY_QPSK, TOY_OFDM, TOY_PARAMS, 3, 11), p1)
        write_dataset(gen_dataset(TOY_QPSK, TOY_OFDM, TOY_PARAMS, 3, 11), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_infinite_snr_header(self, tmp_path):
        params = MixtureParams(n_samples=40, sir_db=0.0, snr_db=float("inf"), K_s=4, K_b=10)
        ds = gen_dataset(TOY_QPSK, TOY_OFDM, params, 2, master_seed=0)
        path = tmp_path / "noiseless.scss"
        write_dataset(ds, path)
        back = read_dataset(path)
        assert np.isinf(back.params.snr_db)

    def test_truncated_file(self, tmp_path):
        ds = gen_dataset(TOY_QPSK, TOY_OFDM, TOY_PARAMS, 2, master_seed=1)
        path = tmp_path / "trunc.scss"
        write_dataset(ds, path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 17])
        with pytest.raises(DatasetFormatError):
            read_dataset(path)

    def test_bad_magic_and_version(self, tmp_path):
        path = tmp_path / "bad.scss"
        path.write_bytes(b"XXXX" + bytes(40))
        with pytest.raises(DatasetFormatError):
            read_dataset(path)
        path.write_bytes(b"SCSS" + bytes([9, 0]) + bytes(40))
        with pytest.raises(DatasetFormatError):
            read_dataset(path)

    def test_nan_db_rejected(self, tmp_path):
        ds = gen_dataset(TOY_QPSK, TOY_OFDM, TOY_PARAMS, 1, master_seed=1)
        bad = Dataset(
            records=ds.records,
            params=MixtureParams(n_samples=80, sir_db=float("nan"), snr_db=20.0, K_s=4, K_b=10),
        )
        with pytest.raises(ValueError):
            write_dataset(bad, tmp_path / "nan.scss")


class TestPredictions:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        pred = PredictionSet(
            n_samples=16,
            K_s=4,
            K_b=10,
            sir_db=0.0,
            snr_db=20.0,
            k_b_hat=rng.integers(0, 10, 5),
            s_hat=rng.standard_normal((5, 16)) + 1j * rng.standard_normal((5, 16)),
        )
        path = tmp_path / "pred.scss"
        write_predictions(pred, path)
        back = read_predictions(path)
        np.testing.assert_array_equal(back.k_b_hat, pred.k_b_hat)
        np.testing.assert_array_equal(back.s_hat, pred.s_hat)

    def test_shift_only(self, tmp_path):
        pred = PredictionSet(
            n_samples=16, K_s=4, K_b=10, sir_db=0.0, snr_db=20.0, k_b_hat=np.arange(4)
        )
        path = tmp_path / "pred.scss"
        write_predictions(pred, path)
        back = read_predictions(path)
        assert back.s_hat is None
        np.testing.assert_array_equal(back.k_b_hat, np.arange(4))

    def test_kind_mismatch(self, tmp_path):
        ds = gen_dataset(TOY_QPSK, TOY_OFDM, TOY_PARAMS, 1, master_seed=1)
        ds_path = tmp_path / "ds.scss"
        write_dataset(ds, ds_path)
        with pytest.raises(DatasetFormatError):
            read_predictions(ds_path)
        pred = PredictionSet(
            n_samples=8, K_s=4, K_b=10, sir_db=0.0, snr_db=20.0, k_b_hat=np.zeros(2, dtype=int)
        )
        pred_path = tmp_path / "pred.scss"
        write_predictions(pred, pred_path)
        with pytest.raises(DatasetFormatError):
            read_dataset(pred_path)

    def test_empty_prediction_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_predictions(
                PredictionSet(n_samples=8, K_s=4, K_b=10, sir_db=0.0, snr_db=20.0),
                tmp_path / "empty.scss",
            )
