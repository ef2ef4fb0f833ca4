"""Matched-filter demodulation, hard decisions, and bit-error accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import (
    _QAM16_GRAY,
    _QAM16_LEVELS,
    _QAM16_SCALE,
    QAM16,
    QPSK,
    ComplexSignal,
    PulseShape,
)


@dataclass
class DemodResult:
    symbols: np.ndarray
    bits: np.ndarray
    delay_used: int


def _resolve_alignment(x, symbol_phase, scale) -> tuple[np.ndarray, int, float]:
    if isinstance(x, ComplexSignal):
        arr = x.samples
        if symbol_phase is None:
            symbol_phase = int(x.meta.get("symbol_phase", 0))
        if scale is None:
            scale = float(x.meta.get("scale", 1.0))
    else:
        arr = np.asarray(x, dtype=np.complex128)
    return arr, int(symbol_phase or 0), float(scale if scale is not None else 1.0)


def matched_filter(x, pulse: PulseShape, symbol_phase=None, scale=None) -> np.ndarray:
    """Correlate with the pulse and sample at the symbol instants.

    The pulse is real and symmetric, so the matched filter is a plain
    convolution with the taps; symbol ``p`` (peaking at sample
    ``symbol_phase + p*oversampling`` of the window) is read at convolution
    index ``symbol_phase + group_delay + p*oversampling``.  Outputs are
    divided by the signal's amplitude scale so clean inputs land on the unit
    constellation.  Alignment defaults come from the signal metadata; 2-D
    input is treated as one window per column.
    """
    arr, phase, amp = _resolve_alignment(x, symbol_phase, scale)
    n = arr.shape[0]
    os_ = pulse.oversampling
    if n - 1 - phase < 0:
        raise ValueError("window too short for a single symbol")
    count = (n - 1 - phase) // os_ + 1
    if arr.ndim == 1:
        z = np.convolve(arr, pulse.taps)
    else:
        from scipy.signal import fftconvolve

        z = fftconvolve(arr, pulse.taps[:, None], axes=0)
    idx = phase + pulse.group_delay + np.arange(count) * os_
    return z[idx] / amp


def _interleave(planes: list[np.ndarray]) -> np.ndarray:
    """Stack per-symbol bit planes into the serial bit stream."""
    k = len(planes)
    first = planes[0]
    out = np.empty((k * first.shape[0],) + first.shape[1:], dtype=np.uint8)
    for i, p in enumerate(planes):
        out[i::k] = p
    return out


def hard_decision(symbols: np.ndarray, alphabet: str) -> np.ndarray:
    """Nearest-point decision with Gray demapping (in-phase bits first).

    Exact boundary ties resolve to the lexicographically smallest bit word.
    1-D input gives a flat bit stream; 2-D input (symbols per column) gives
    one bit stream per column.
    """
    symbols = np.asarray(symbols)
    if alphabet == QPSK:
        b0 = (symbols.real < 0).astype(np.uint8)
        b1 = (symbols.imag < 0).astype(np.uint8)
        return _interleave([b0, b1])
    if alphabet == QAM16:
        wi = _axis_words(symbols.real / _QAM16_SCALE)
        wq = _axis_words(symbols.imag / _QAM16_SCALE)
        return _interleave([(wi >> 1) & 1, wi & 1, (wq >> 1) & 1, wq & 1])
    raise ValueError(f"unsupported alphabet {alphabet!r}")


def _axis_words(v: np.ndarray) -> np.ndarray:
    """Gray word of the nearest level; ties pick the smaller word exactly."""
    shape = v.shape
    d = np.abs(v.reshape(-1, 1) - _QAM16_LEVELS[None, :])
    dmin = d.min(axis=1, keepdims=True)
    candidates = np.where(d == dmin, _QAM16_GRAY[None, :], 4)
    return candidates.min(axis=1).astype(np.uint8).reshape(shape)


def ber(bits: np.ndarray, ref_bits: np.ndarray) -> float:
    bits = np.asarray(bits).reshape(-1)
    ref_bits = np.asarray(ref_bits).reshape(-1)
    if bits.size != ref_bits.size:
        raise ValueError(f"bit lengths differ: {bits.size} vs {ref_bits.size}")
    return float(np.mean(bits != ref_bits))


def steady_symbol_slice(n_samples: int, pulse: PulseShape, symbol_phase: int = 0) -> slice:
    """Symbols whose full pulse support lies inside the window.

    Edge symbols are excluded from error counting; both the decisions and
    the reference bits are sliced identically.
    """
    d = pulse.group_delay
    os_ = pulse.oversampling
    p_lo = max(0, -(-(d - symbol_phase) // os_))  # ceil
    p_hi = (n_samples - 1 - d - symbol_phase) // os_
    if p_hi < p_lo:
        raise ValueError("window too short for any interior symbol")
    return slice(p_lo, p_hi + 1)


def demod_qpsk(x, pulse: PulseShape, symbol_phase=None, scale=None) -> DemodResult:
    """Matched filter plus hard decision for the QPSK signal of interest."""
    symbols = matched_filter(x, pulse, symbol_phase=symbol_phase, scale=scale)
    bits = hard_decision(symbols, QPSK)
    return DemodResult(symbols=symbols, bits=bits, delay_used=pulse.group_delay)
