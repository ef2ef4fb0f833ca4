#!/usr/bin/env python3
"""End-to-end interference rejection: long records, block processing, BER.

Each record is 10240 samples of QPSK-over-RRC plus a 16-QAM CP-OFDM
interferer, noiseless.  Processing synchronizes once on the first 640
samples, filters 320-sample blocks conditionally on the estimated shift,
matched-filters, and hard-decides.  The same pipeline is available from the
command line:

    syncsep sweep-ber --sir -8:-2:2 --snr inf --trials 40 --seed 5 --out ber.csv
"""

from syncsep.bench import SweepConfig, run_ber_sweep

config = SweepConfig(
    sir_db=(-8.0, -6.0, -4.0, -2.0),
    snr_db=(float("inf"),),
    n=(10240,),
    methods=("mf-only", "lmmse", "map-qlmmse"),
    trials=40,
    seed=5,
    alphabet="digital",
    block_len=320,
    sync_window=640,
)
result = run_ber_sweep(config)

print("noiseless BER vs SIR (40 records/point, ~50k bits each):")
print(f"{'SIR dB':>8} {'mf-only':>12} {'lmmse':>12} {'map-qlmmse':>12}")
for sir in config.sir_db:
    vals = {r.method: r.value for r in result.select(sir_db=sir, metric="ber")}
    print(f"{sir:8.0f} {vals['mf-only']:12.2e} {vals['lmmse']:12.2e} {vals['map-qlmmse']:12.2e}")

sync = [r for r in result.rows if r.metric == "sync_error_rate"]
print("\nsynchronization error rate per point:",
      ", ".join(f"{r.sir_db:.0f} dB: {r.value:.3f}" for r in sync))
print("\nthe unconditional linear filter tracks plain matched filtering, while")
print("conditioning on the estimated shift removes the interference almost")
print("entirely: with exact statistics its null space carries the signal out")
print("of the collision untouched.")
