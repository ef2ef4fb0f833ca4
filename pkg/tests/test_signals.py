"""Waveform generation tests."""

import numpy as np
import pytest

from syncsep.signals import (
    ComplexSignal,
    OfdmSpec,
    QpskSpec,
    gen_ofdm,
    gen_qpsk,
    gen_symbols,
    map_qam16,
    map_qpsk,
    ofdm_shift_matrix,
    pulse_shape,
    rrc_taps,
    soi_shift_matrix,
)

# Frozen output of the independent spectral oracle: trapezoid quadrature of
# the inverse Fourier integral of the square-root raised-cosine spectrum
# (rolloff 0.5, 16 samples/symbol) over its finite support on a 2**14 grid,
# evaluated at t = 0 and t = -4 symbol periods.
RRC_RATIO_ORACLE = -112.480035009351


def spectral_rrc_ratio(rolloff: float, oversampling: int, t_num: float, t_den: float) -> float:
    t_sym = float(oversampling)
    f2 = (1 + rolloff) / (2 * t_sym)
    f1 = (1 - rolloff) / (2 * t_sym)
    f = np.linspace(-f2, f2, (1 << 14) + 1)
    af = np.abs(f)
    h = np.where(af <= f1, t_sym, 0.0)
    mid = (af > f1) & (af <= f2)
    h[mid] = (t_sym / 2) * (1 + np.cos(np.pi * t_sym / rolloff * (af[mid] - f1)))
    sq = np.sqrt(h)

    def impulse(t):
        return np.trapezoid(sq * np.cos(2 * np.pi * f * t), f)

    return impulse(t_num) / impulse(t_den)


class TestRrcTaps:
    def test_shape_symmetry_energy(self):
        p = rrc_taps(0.5, 8, 16)
        assert p.length == 8 * 16 + 1
        assert np.argmax(p.taps) == 64
        np.testing.assert_allclose(p.taps, p.taps[::-1], atol=1e-15)
        assert abs(np.sum(p.taps**2) - 1.0) < 1e-12

    def test_matches_spectral_oracle(self):
        # oracle recomputed here stays within float noise of the frozen value
        assert abs(spectral_rrc_ratio(0.5, 16, 0.0, -64.0) / RRC_RATIO_ORACLE - 1) < 1e-9
        p = rrc_taps(0.5, 8, 16)
        ratio = p.taps[64] / p.taps[0]
        assert abs(ratio / RRC_RATIO_ORACLE - 1) < 1e-6

    def test_full_rolloff_singularities_finite(self):
        p = rrc_taps(1.0, 2, 2)
        assert p.length == 5
        assert np.all(np.isfinite(p.taps))
        np.testing.assert_allclose(p.taps, p.taps[::-1], atol=1e-15)

    def test_singular_grid_point(self):
        # rolloff 0.5 puts t = 1/(4*rolloff) on the sample grid at 16x
        p = rrc_taps(0.5, 8, 16)
        assert np.all(np.isfinite(p.taps))

    @pytest.mark.parametrize("rolloff", [0.0, -0.1, 1.5])
    def test_rolloff_domain(self, rolloff):
        with pytest.raises(ValueError):
            rrc_taps(rolloff, 8, 16)

    def test_interpolation_isi_floor(self):
        # cascaded pulse is ~0 at nonzero multiples of the symbol spacing;
        # the half-overlap lag at span/2 carries the truncation artifact
        # (1.16e-3 for rolloff 0.5, span 8) and is bounded separately
        p = rrc_taps(0.5, 8, 16)
        rc = np.convolve(p.taps, p.taps)
        peak_idx = rc.size // 2
        peak = rc[peak_idx]
        assert abs(peak - 1.0) < 1e-12
        interior = [rc[peak_idx + 16 * k] for k in range(1, 4)]
        assert np.max(np.abs(interior)) < 1e-3 * peak
        edge = [rc[peak_idx + 16 * k] for k in range(4, 8)]
        assert np.max(np.abs(edge)) < 1.3e-3 * peak


class TestSymbols:
    def test_qpsk_constant_modulus(self):
        rng = np.random.default_rng(0)
        sym = gen_symbols("qpsk", 4, rng)
        np.testing.assert_allclose(np.abs(sym), 1.0, atol=1e-12)

    def test_qam16_unit_power(self):
        rng = np.random.default_rng(1)
        sym = gen_symbols("qam16", 100000, rng)
        # exact alphabet second moment is 1; fourth-moment-based 3 sigma band
        power = np.abs(sym) ** 2
        se = power.std() / np.sqrt(power.size)
        assert abs(power.mean() - 1.0) < 3 * se

    def test_gaussian_empty(self):
        rng = np.random.default_rng(2)
        assert gen_symbols("gaussian", 0, rng).size == 0

    def test_unknown_alphabet(self):
        with pytest.raises(ValueError):
            gen_symbols("8psk", 4, np.random.default_rng(0))

    def test_gray_maps_are_unit_power_exactly(self):
        bits = np.unpackbits(np.arange(256, dtype=np.uint8))
        assert abs(np.mean(np.abs(map_qpsk(bits)) ** 2) - 1.0) < 1e-12
        all16 = np.array([[b >> 3 & 1, b >> 2 & 1, b >> 1 & 1, b & 1] for b in range(16)])
        sym = map_qam16(all16.reshape(-1))
        assert abs(np.mean(np.abs(sym) ** 2) - 1.0) < 1e-12
        assert len(set(np.round(sym, 9))) == 16


class TestPulseShape:
    def test_unit_impulse_gives_taps(self):
        p = rrc_taps(0.5, 4, 8)
        out = pulse_shape(np.array([1.0 + 0j]), p)
        np.testing.assert_allclose(out.samples[: p.length], p.taps, atol=1e-15)
        assert len(out) == 1 * 8 + p.length - 1

    def test_linearity_two_symbols(self):
        p = rrc_taps(0.5, 4, 16)
        out = pulse_shape(np.array([1.0, 1.0]), p)
        expect = np.zeros(2 * 16 + p.length - 1, dtype=complex)
        expect[: p.length] += p.taps
        expect[16 : 16 + p.length] += p.taps
        np.testing.assert_allclose(out.samples, expect, atol=1e-14)

    def test_empty_symbols(self):
        with pytest.raises(ValueError):
            pulse_shape(np.array([]), rrc_taps(0.5, 4, 8))


class TestGenQpsk:
    def test_unit_average_power(self):
        rng = np.random.default_rng(3)
        sig, _, _ = gen_qpsk(QpskSpec(alphabet="gaussian"), 1 << 16, rng)
        assert abs(sig.power - 1.0) < 0.02

    def test_window_is_steady_state(self):
        # the generated window carries no startup transient: power at the
        # first and last symbol phases matches the analytic profile
        rng = np.random.default_rng(4)
        spec = QpskSpec(alphabet="gaussian")
        n, trials = 96, 4000
        acc = np.zeros(n)
        for _ in range(trials):
            sig, _, _ = gen_qpsk(spec, n, rng)
            acc += np.abs(sig.samples) ** 2
        g = soi_shift_matrix(spec, n, 0)
        analytic = np.sum(g**2, axis=1)
        np.testing.assert_allclose(acc / trials, analytic, atol=5 * np.sqrt(2.0 / trials))

    def test_variance_profile_is_cyclostationary(self):
        # lag-0 variance over window position matches the analytic profile
        rng = np.random.default_rng(5)
        spec = QpskSpec(alphabet="gaussian")
        n, trials = 64, 10000
        acc = np.zeros(n)
        for _ in range(trials):
            sig, _, _ = gen_qpsk(spec, n, rng)
            acc += np.abs(sig.samples) ** 2
        profile = acc / trials
        g = soi_shift_matrix(spec, n, 0)
        analytic = np.sum(g**2, axis=1)
        np.testing.assert_allclose(profile, analytic, atol=4 * np.sqrt(2.0 / trials))
        np.testing.assert_allclose(analytic[:16], analytic[16:32], atol=1e-12)


class TestGenOfdm:
    def test_cp_copy_exact(self):
        rng = np.random.default_rng(6)
        sig = gen_ofdm(OfdmSpec(), 1, rng)
        assert len(sig) == 80
        np.testing.assert_array_equal(sig.samples[:16], sig.samples[64:80])

    def test_small_spec_both_symbols(self):
        rng = np.random.default_rng(7)
        sig = gen_ofdm(OfdmSpec(fft_size=4, cp_len=1), 2, rng)
        assert len(sig) == 10
        assert sig.samples[0] == sig.samples[4]
        assert sig.samples[5] == sig.samples[9]

    def test_unit_power_unitary_transform(self):
        rng = np.random.default_rng(8)
        sig = gen_ofdm(OfdmSpec(alphabet="gaussian"), 10000, rng)
        power = np.abs(sig.samples) ** 2
        se = power.std() / np.sqrt(power.size)
        assert abs(power.mean() - 1.0) < 3 * se

    def test_shift_matrix_matches_generation_support(self):
        spec = OfdmSpec()
        m = ofdm_shift_matrix(spec, 100, 37)
        assert m.shape[0] == 100
        # rows are unit-norm IDFT rows
        np.testing.assert_allclose(np.sum(np.abs(m) ** 2, axis=1), 1.0, atol=1e-12)


class TestComplexSignal:
    def test_power_and_len(self):
        sig = ComplexSignal(np.array([1.0, 1j, -1.0, -1j]))
        assert len(sig) == 4
        assert abs(sig.power - 1.0) < 1e-15
