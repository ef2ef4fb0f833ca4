"""Blind synchronization and interference rejection for signal mixtures.

A numpy/scipy toolkit for separating a known-structure communication signal
from a co-channel cyclostationary interferer observed through one antenna:
waveform simulation (RRC-shaped QPSK, CP-OFDM), per-shift covariance banks,
the LMMSE / conditional-LMMSE / posterior-mixture / synchronize-then-filter
estimator family, matched-filter demodulation, closed-form tail bounds for
the synchronizer statistic, and a reproducible experiment harness.
"""

from .covariance import (
    CovBank,
    CovMatrix,
    analytic_cov_ofdm,
    analytic_cov_soi,
    build_bank,
    empirical_cov,
    read_bank,
    whiten,
    write_bank,
)
from .demod import DemodResult, ber, demod_qpsk, hard_decision, matched_filter
from .estimators import (
    SeparationResult,
    ShiftPosterior,
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
from .mixture import (
    Dataset,
    DatasetFormatError,
    MixtureParams,
    MixtureRecord,
    PredictionSet,
    apply_shift,
    gen_dataset,
    mix,
    read_dataset,
    read_predictions,
    write_dataset,
    write_predictions,
)
from .signals import (
    ComplexSignal,
    OfdmSpec,
    PulseShape,
    QpskSpec,
    gen_ofdm,
    gen_qpsk,
    gen_symbols,
    pulse_shape,
    rrc_taps,
)

__version__ = "0.1.0"

__all__ = [
    "CovBank",
    "CovMatrix",
    "ComplexSignal",
    "Dataset",
    "DatasetFormatError",
    "DemodResult",
    "MixtureParams",
    "MixtureRecord",
    "OfdmSpec",
    "PredictionSet",
    "PulseShape",
    "QpskSpec",
    "SeparationResult",
    "ShiftPosterior",
    "analytic_cov_ofdm",
    "analytic_cov_soi",
    "apply_shift",
    "ber",
    "build_bank",
    "demod_qpsk",
    "empirical_cov",
    "gen_dataset",
    "gen_ofdm",
    "gen_qpsk",
    "gen_symbols",
    "hard_decision",
    "lmmse",
    "lmmse_cond",
    "map_qlmmse",
    "map_sync",
    "matched_filter",
    "mix",
    "mmse",
    "psi_stat",
    "psi_sync",
    "pulse_shape",
    "read_bank",
    "read_dataset",
    "read_predictions",
    "rrc_taps",
    "separate_long",
    "shift_posterior",
    "whiten",
    "write_bank",
    "write_dataset",
    "write_predictions",
]
