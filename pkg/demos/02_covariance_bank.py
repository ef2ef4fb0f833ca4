#!/usr/bin/env python3
"""Build the per-shift covariance bank and cross-check it empirically.

For every candidate interference shift m the bank holds the mixture
covariance C_yy(m) = C_ss + sir^-1 C_bb(m) + snr^-1 I with a cached
Cholesky factor and log-determinant.  The analytic construction (from the
waveform shift matrices) and the empirical one (sample covariances of
labeled windows grouped by shift) agree within Monte-Carlo error; that
cross-check is the backbone of everything downstream.
"""

import numpy as np

from syncsep import MixtureParams, OfdmSpec, QpskSpec, build_bank, gen_dataset

L, K_B = 40, 10
QPSK = QpskSpec(rolloff=0.5, span_symbols=4, oversampling=4, alphabet="gaussian")
OFDM = OfdmSpec(fft_size=8, cp_len=2, alphabet="gaussian")

# analytic bank at SIR 0 dB / SNR 20 dB
bank = build_bank(QPSK, OFDM, 0.0, 20.0, L, K_B)
print(f"analytic bank: L={bank.L}, K_b={bank.K_b}")
print("log-determinants per shift:",
      np.array_str(np.array([c.logdet for c in bank.c_yy[:5]]), precision=2), "...")

# the equivalent-noise covariance shows the CP ridge only under the right shift
c0 = bank.c_vv[0].entries
print(f"\nC_vv(0): diagonal {c0[0, 0].real:.3f}, CP entry (0, 8) = {c0[0, 8].real:.3f} "
      f"(lag-8 pair inside one toy frame)")
c5 = bank.c_vv[5].entries
print(f"C_vv(5): same entry under a wrong alignment = {c5[0, 8].real:.3f}")

# empirical route: estimate the same bank from a labeled dataset
params = MixtureParams(n_samples=200, sir_db=0.0, snr_db=20.0, K_s=4, K_b=K_B)
dataset = gen_dataset(QPSK, OFDM, params, count=800, master_seed=7)
emp = build_bank(dataset, dataset, 0.0, 20.0, L, K_B)
worst = max(
    np.max(np.abs(emp.c_vv[m].entries - bank.c_vv[m].entries)) for m in range(K_B)
)
blocks_per_shift = 800 * (200 // L) / K_B
print(f"\nempirical vs analytic equivalent-noise covariance "
      f"({blocks_per_shift:.0f} windows/shift): max entry error {worst:.3f}")

# whitening through the factor calibrates the quadratic form
rng = np.random.default_rng(1)
z = (rng.standard_normal((L, 20000)) + 1j * rng.standard_normal((L, 20000))) / np.sqrt(2)
y = bank.c_yy[3].chol @ z
u = bank.c_yy[3].whiten(y)
stat = np.sum(np.abs(u) ** 2, axis=0) / L
print(f"whitened energy per sample: mean {stat.mean():.4f} (expect 1), "
      f"variance {stat.var():.4f} (expect {1 / L:.4f})")
