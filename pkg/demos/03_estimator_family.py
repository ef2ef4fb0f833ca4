#!/usr/bin/env python3
"""Compare the estimator family on Gaussian-surrogate mixtures.

Four estimators of the signal of interest from a single observed window:

* lmmse        - best linear filter using the shift-averaged covariance;
* map-qlmmse   - synchronize first (posterior argmax), then apply the
                 conditional linear filter for that shift;
* psi-qlmmse   - same plug-in but synchronized by the whitened-energy
                 statistic;
* mmse         - exact conditional mean: posterior-weighted mixture of all
                 conditional filters.

The mixture estimator is optimal; the plug-ins approach it as the window
grows (their gap is the price of committing to one shift), and the
unconditional filter pays for ignoring the shift structure entirely.
"""

import numpy as np

from syncsep.bench import SweepConfig, run_mse_sweep, run_theorem1_check

config = SweepConfig(
    sir_db=(-12.0, -6.0, 0.0),
    snr_db=(20.0,),
    n=(320,),
    methods=("lmmse", "map-qlmmse", "psi-qlmmse", "mmse"),
    trials=400,
    seed=42,
)
result = run_mse_sweep(config)

print("per-sample MSE at SNR 20 dB (window 320, 400 trials):")
print(f"{'SIR dB':>8} {'lmmse':>10} {'map-ql':>10} {'psi-ql':>10} {'mmse':>10}")
for sir in config.sir_db:
    vals = {r.method: r.value for r in result.select(sir_db=sir, metric="mse")}
    print(
        f"{sir:8.0f} {vals['lmmse']:10.4f} {vals['map-qlmmse']:10.4f} "
        f"{vals['psi-qlmmse']:10.4f} {vals['mmse']:10.4f}"
    )

print("\nhow fast does the plug-in reach the optimum? (ratio of MSEs vs window)")
trend = run_theorem1_check(
    SweepConfig(sir_db=(0.0,), snr_db=(20.0,), n=(80, 160, 320), trials=400, seed=43)
)
for row in trend.rows:
    if row.metric == "ratio":
        print(f"  N={row.n:4d}: mse_mmse / mse_map-qlmmse = {row.value:.6f} (se {row.stderr:.1e})")
print("  (windows shorter than 65 samples carry no shift information at all:")
print("   there every hypothesis coincides and the ratio is exactly 1)")
