"""Baseband waveform generation: RRC-shaped QPSK, CP-OFDM, and Gaussian surrogates.

Two signal families are produced, both zero-mean and unit-average-power by
construction:

* a single-carrier signal bearing QPSK (or circular Gaussian) symbols shaped
  by a root-raised-cosine pulse, cyclostationary with period equal to the
  oversampling factor;
* a CP-OFDM signal bearing 16-QAM (or circular Gaussian) subcarrier symbols,
  cyclostationary with period ``fft_size + cp_len``.

Each family also exposes its "shift matrix": the exact linear map from the
i.i.d. unit-power symbol stream to a length-``L`` window of the steady-state
process taken at a given cyclic offset.  The shift matrices are the single
source of truth shared by the window samplers here and the analytic
covariance construction in :mod:`syncsep.covariance`.

Conventions
-----------
* Cyclic offsets are 0-based: offset ``k`` means the window starts ``k``
  samples into the cyclic period.
* QPSK bit mapping is Gray with the in-phase bit first: ``(b0, b1)`` maps to
  ``((1 - 2 b0) + 1j (1 - 2 b1)) / sqrt(2)``.
* 16-QAM uses per-axis Gray coding of the levels ``(-3, -1, +1, +3)/sqrt(10)``
  with the two in-phase bits first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

GAUSSIAN = "gaussian"
QPSK = "qpsk"
QAM16 = "qam16"

_QPSK_POINTS = np.array(
    [1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j], dtype=np.complex128
) / np.sqrt(2.0)

# Gray-coded amplitude levels for one 16-QAM axis, indexed by the 2-bit word.
_QAM16_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0])
_QAM16_GRAY = np.array([0, 1, 3, 2])  # level index -> Gray word
_QAM16_WORD_TO_LEVEL = np.empty(4, dtype=np.int64)
_QAM16_WORD_TO_LEVEL[_QAM16_GRAY] = np.arange(4)
_QAM16_SCALE = 1.0 / np.sqrt(10.0)


@dataclass(frozen=True)
class PulseShape:
    """Unit-energy symmetric FIR pulse used for shaping and matched filtering."""

    taps: np.ndarray
    oversampling: int
    span_symbols: int

    @property
    def length(self) -> int:
        return self.taps.size

    @property
    def group_delay(self) -> int:
        """Delay of the pulse peak in samples, ``(length - 1) // 2``."""
        return (self.taps.size - 1) // 2


@dataclass(frozen=True)
class QpskSpec:
    """Single-carrier signal parameters; defaults follow the reference setup."""

    rolloff: float = 0.5
    span_symbols: int = 8
    oversampling: int = 16
    alphabet: str = QPSK

    @property
    def cyclic_period(self) -> int:
        return self.oversampling


@dataclass(frozen=True)
class OfdmSpec:
    """CP-OFDM parameters; defaults give the length-80 cyclic period."""

    fft_size: int = 64
    cp_len: int = 16
    alphabet: str = QAM16

    @property
    def symbol_len(self) -> int:
        return self.fft_size + self.cp_len

    @property
    def cyclic_period(self) -> int:
        return self.symbol_len


@dataclass
class ComplexSignal:
    """A finite run of complex baseband samples plus origin metadata.

    ``meta`` carries generation bookkeeping (amplitude scale relative to the
    unit constellation, symbol phase of the first in-window symbol peak,
    pulse group delay) so downstream demodulation can align without
    re-deriving conventions.
    """

    samples: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.complex128)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def power(self) -> float:
        """Mean squared magnitude of the samples."""
        return float(np.mean(np.abs(self.samples) ** 2)) if len(self) else 0.0


def rrc_taps(rolloff: float, span_symbols: int, oversampling: int) -> PulseShape:
    """Root-raised-cosine taps, unit energy, length ``span*oversampling + 1``.

    The removable singularities at ``t = 0`` and ``|t| = 1/(4*rolloff)`` are
    replaced by their analytic limits.
    """
    if not 0.0 < rolloff <= 1.0:
        raise ValueError(f"rolloff must be in (0, 1], got {rolloff}")
    if span_symbols < 1 or oversampling < 1:
        raise ValueError("span_symbols and oversampling must be >= 1")
    if (span_symbols * oversampling) % 2 != 0:
        raise ValueError("span_symbols * oversampling must be even (symmetric center tap)")

    n = span_symbols * oversampling + 1
    # Time in symbol periods, symmetric about the center tap.
    t = (np.arange(n) - (n - 1) / 2) / oversampling
    beta = rolloff
    h = np.zeros(n)

    at_zero = np.isclose(t, 0.0, atol=1e-12)
    h[at_zero] = 1.0 - beta + 4.0 * beta / np.pi

    at_sing = np.isclose(np.abs(t), 1.0 / (4.0 * beta), atol=1e-12)
    h[at_sing] = (beta / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * beta))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * beta))
    )

    rest = ~(at_zero | at_sing)
    tr = t[rest]
    h[rest] = (
        np.sin(np.pi * tr * (1.0 - beta))
        + 4.0 * beta * tr * np.cos(np.pi * tr * (1.0 + beta))
    ) / (np.pi * tr * (1.0 - (4.0 * beta * tr) ** 2))

    h /= np.sqrt(np.sum(h**2))
    return PulseShape(taps=h, oversampling=oversampling, span_symbols=span_symbols)


def random_bits(count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=count, dtype=np.uint8)


def map_qpsk(bits: np.ndarray) -> np.ndarray:
    """Gray-map a bit sequence (length 2*n) onto unit-power QPSK symbols."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 2 != 0:
        raise ValueError("QPSK needs an even number of bits")
    b = bits.reshape(-1, 2)
    return ((1 - 2 * b[:, 0].astype(np.float64)) + 1j * (1 - 2 * b[:, 1].astype(np.float64))) / np.sqrt(2.0)


def map_qam16(bits: np.ndarray) -> np.ndarray:
    """Gray-map a bit sequence (length 4*n) onto unit-power 16-QAM symbols."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 4 != 0:
        raise ValueError("16-QAM needs a multiple of 4 bits")
    b = bits.reshape(-1, 4)
    i_word = 2 * b[:, 0] + b[:, 1]
    q_word = 2 * b[:, 2] + b[:, 3]
    i_lvl = _QAM16_LEVELS[_QAM16_WORD_TO_LEVEL[i_word]]
    q_lvl = _QAM16_LEVELS[_QAM16_WORD_TO_LEVEL[q_word]]
    return (i_lvl + 1j * q_lvl) * _QAM16_SCALE


def gen_symbols_with_bits(
    alphabet: str, count: int, rng: np.random.Generator
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Draw ``count`` i.i.d. unit-average-power symbols; bits where defined."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if alphabet == QPSK:
        bits = random_bits(2 * count, rng)
        return map_qpsk(bits), bits
    if alphabet == QAM16:
        bits = random_bits(4 * count, rng)
        return map_qam16(bits), bits
    if alphabet == GAUSSIAN:
        z = rng.standard_normal(count) + 1j * rng.standard_normal(count)
        return z / np.sqrt(2.0), None
    raise ValueError(f"unknown alphabet {alphabet!r}")


def gen_symbols(alphabet: str, count: int, rng: np.random.Generator) -> np.ndarray:
    symbols, _ = gen_symbols_with_bits(alphabet, count, rng)
    return symbols


def pulse_shape(symbols: np.ndarray, pulse: PulseShape) -> ComplexSignal:
    """Zero-stuff by the oversampling factor and convolve with the taps.

    Output length is ``num_symbols * oversampling + len(taps) - 1``; symbol
    ``p`` peaks at sample ``p * oversampling + group_delay``.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.size == 0:
        raise ValueError("symbols must be nonempty")
    os_ = pulse.oversampling
    train = np.zeros(symbols.size * os_, dtype=np.complex128)
    train[::os_] = symbols
    out = np.convolve(train, pulse.taps)
    meta = {
        "origin": "pulse_shape",
        "group_delay": pulse.group_delay,
        "symbol_phase": pulse.group_delay,
        "scale": 1.0,
        "oversampling": os_,
    }
    return ComplexSignal(out, meta)


def _soi_pulse_span(pulse: PulseShape) -> tuple[np.ndarray, int]:
    """Centered pulse and its half-support D (peak at index D of the taps)."""
    return pulse.taps, pulse.group_delay


def gen_qpsk(
    spec: QpskSpec,
    n_out: int,
    rng: np.random.Generator,
    lead: int = 0,
) -> tuple[ComplexSignal, Optional[np.ndarray], int]:
    """Steady-state window of the shaped single-carrier process.

    Returns ``(signal, bits, sym0)`` where ``signal`` has ``n_out + lead``
    samples with the peak of symbol ``sym0 + p`` at sample ``p*oversampling``
    (sample 0 is at cyclic phase 0), ``bits`` is the full generated payload
    (``None`` for the Gaussian alphabet), and ``sym0`` indexes the first
    symbol whose peak is at sample >= 0.

    The window is cropped from the full-overlap region of the convolution so
    its statistics are exactly those of the bi-infinite cyclostationary
    process; amplitude is scaled by ``sqrt(oversampling)`` to make the
    average power 1.
    """
    if n_out + lead <= 0:
        raise ValueError("window must have positive length")
    pulse = rrc_taps(spec.rolloff, spec.span_symbols, spec.oversampling)
    os_ = spec.oversampling
    d = pulse.group_delay
    i0 = os_ * math.ceil(d / os_)
    n_tot = n_out + lead
    num_syms = (i0 + n_tot - 1 + d) // os_ + 1
    symbols, bits = gen_symbols_with_bits(spec.alphabet, int(num_syms), rng)
    shaped = pulse_shape(symbols, pulse)
    # Canonical sample i of the infinite process is conv output index i + d.
    start = i0 + d
    window = shaped.samples[start : start + n_tot] * np.sqrt(os_)
    meta = {
        "origin": "gen_qpsk",
        "group_delay": d,
        "symbol_phase": 0,
        "scale": float(np.sqrt(os_)),
        "oversampling": os_,
        "cyclic_period": spec.cyclic_period,
    }
    return ComplexSignal(window, meta), bits, i0 // os_


def gen_ofdm(spec: OfdmSpec, num_symbols: int, rng: np.random.Generator) -> ComplexSignal:
    """Concatenated CP-OFDM symbols with unitary IDFT scaling (unit power)."""
    if num_symbols < 1:
        raise ValueError("num_symbols must be >= 1")
    x, _ = gen_ofdm_with_bits(spec, num_symbols, rng)
    return x


def gen_ofdm_with_bits(
    spec: OfdmSpec, num_symbols: int, rng: np.random.Generator
) -> tuple[ComplexSignal, Optional[np.ndarray]]:
    if num_symbols < 1:
        raise ValueError("num_symbols must be >= 1")
    n_sub = spec.fft_size * num_symbols
    subsyms, bits = gen_symbols_with_bits(spec.alphabet, n_sub, rng)
    grid = subsyms.reshape(num_symbols, spec.fft_size)
    body = np.fft.ifft(grid, axis=1) * np.sqrt(spec.fft_size)
    if spec.cp_len > 0:
        frames = np.concatenate([body[:, -spec.cp_len :], body], axis=1)
    else:
        frames = body
    meta = {
        "origin": "gen_ofdm",
        "scale": 1.0,
        "cyclic_period": spec.cyclic_period,
    }
    return ComplexSignal(frames.reshape(-1), meta), bits


def soi_shift_matrix(spec: QpskSpec, n: int, k: int) -> np.ndarray:
    """Exact map from i.i.d. symbols to a length-``n`` SOI window at offset ``k``.

    Column ``p`` holds ``sqrt(os) * g[j + k - p*os]`` over window rows ``j``
    where ``g`` is the centered unit-energy pulse, so a window equals
    ``G @ a`` for the unit-power symbol vector ``a`` and the window
    covariance (Gaussian symbols) is ``G @ G.conj().T``.
    """
    pulse = rrc_taps(spec.rolloff, spec.span_symbols, spec.oversampling)
    os_ = spec.oversampling
    d = pulse.group_delay
    p_min = math.ceil((k - d) / os_)
    p_max = (k + n - 1 + d) // os_
    cols = np.arange(p_min, p_max + 1)
    j = np.arange(n)
    # centered pulse: g[u] = taps[u + d] for u in [-d, len-1-d]
    u = j[:, None] + k - cols[None, :] * os_
    valid = (u >= -d) & (u <= pulse.length - 1 - d)
    g = np.zeros((n, cols.size))
    g[valid] = pulse.taps[(u + d)[valid]]
    return g * np.sqrt(os_)


def ofdm_shift_matrix(spec: OfdmSpec, n: int, k: int) -> np.ndarray:
    """Exact map from i.i.d. subcarrier symbols to an OFDM window at offset ``k``.

    Sample ``i`` of the process belongs to frame ``i // symbol_len`` and
    replays IDFT output position ``((i mod symbol_len) - cp_len) mod fft_size``
    of that frame, which encodes the cyclic-prefix copy exactly.
    """
    sym_len = spec.symbol_len
    nfft = spec.fft_size
    i = np.arange(k, k + n)
    frame = i // sym_len
    pos = ((i % sym_len) - spec.cp_len) % nfft
    frames = frame - frame[0]
    n_frames = frames[-1] + 1
    r = np.arange(nfft)
    rows = np.exp(2j * np.pi * np.outer(pos, r) / nfft) / np.sqrt(nfft)
    mat = np.zeros((n, nfft * n_frames), dtype=np.complex128)
    col0 = frames * nfft
    for q in range(n_frames):
        sel = frames == q
        mat[np.ix_(sel, np.arange(q * nfft, (q + 1) * nfft))] = rows[sel]
    return mat
