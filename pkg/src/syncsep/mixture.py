"""Noisy two-source mixtures with random cyclic shifts, and their file format.

A mixture window is ``y = s + 10^(-sir/20) b + 10^(-snr/20) w`` where the
signal and interference windows are cut from steady-state realizations at
cyclic offsets ``k_s``/``k_b`` (0-based) and ``w`` is standard complex white
Gaussian noise.  ``snr_db = +inf`` gives the noiseless case.

Datasets serialize to a little-endian binary container (magic ``SCSS``) that
is also used, with different flag bits, for prediction files produced by
external synchronizers/separators.  Record generation derives an independent
RNG stream from ``(master_seed, record_index)`` so datasets are bit-identical
under any parallel schedule.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .signals import (
    GAUSSIAN,
    ComplexSignal,
    OfdmSpec,
    QpskSpec,
    gen_ofdm_with_bits,
    gen_qpsk,
    ofdm_shift_matrix,
    soi_shift_matrix,
)

_MAGIC = b"SCSS"
_VERSION = 1
_HEADER_FMT = "<IHHIddI"

FLAG_COMPONENTS = 1 << 0
FLAG_BITS = 1 << 1
FLAG_PREDICTIONS = 1 << 2
FLAG_PRED_SHIFT = 1 << 3
FLAG_PRED_SOI = 1 << 4


class DatasetFormatError(Exception):
    """Raised for malformed, truncated, or mismatched binary containers."""


@dataclass(frozen=True)
class MixtureParams:
    n_samples: int
    sir_db: float
    snr_db: float
    k_s_mode: str = "fixed-zero"
    k_b_mode: str = "uniform"
    k_b_fixed: Optional[int] = None
    K_s: int = 16
    K_b: int = 80

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.k_s_mode not in ("fixed-zero", "uniform"):
            raise ValueError(f"unknown k_s_mode {self.k_s_mode!r}")
        if self.k_b_mode not in ("uniform", "fixed"):
            raise ValueError(f"unknown k_b_mode {self.k_b_mode!r}")
        if self.k_b_mode == "fixed":
            if self.k_b_fixed is None or not 0 <= self.k_b_fixed < self.K_b:
                raise ValueError("fixed k_b must lie in [0, K_b)")


@dataclass
class MixtureRecord:
    y: ComplexSignal
    s: ComplexSignal
    b: ComplexSignal
    k_s: int
    k_b: int
    bits: Optional[np.ndarray]
    params: MixtureParams
    w: Optional[ComplexSignal] = None  # kept only in debug generation


@dataclass
class Dataset:
    records: list[MixtureRecord]
    params: MixtureParams
    qpsk: Optional[QpskSpec] = None
    ofdm: Optional[OfdmSpec] = None
    version: int = _VERSION

    def __len__(self) -> int:
        return len(self.records)


def amp_coeff(db: float) -> float:
    """Amplitude coefficient ``10^(-db/20)``; +inf dB maps to exactly 0."""
    if np.isinf(db) and db > 0:
        return 0.0
    return float(10.0 ** (-db / 20.0))


def apply_shift(x, k: int, n_out: int):
    """Window ``x[k : k + n_out]`` realizing a cyclic shift of ``k`` samples.

    Accepts a ``ComplexSignal`` (metadata adjusted) or a plain array.
    """
    if k < 0:
        raise ValueError("shift must be nonnegative")
    if isinstance(x, ComplexSignal):
        if len(x) < n_out + k:
            raise ValueError(f"signal too short: need {n_out + k}, have {len(x)}")
        meta = dict(x.meta)
        os_ = meta.get("oversampling")
        if os_ and "symbol_phase" in meta:
            meta["symbol_phase"] = (meta["symbol_phase"] - k) % os_
        return ComplexSignal(x.samples[k : k + n_out].copy(), meta)
    arr = np.asarray(x)
    if arr.shape[-1] < n_out + k:
        raise ValueError(f"signal too short: need {n_out + k}, have {arr.shape[-1]}")
    return arr[..., k : k + n_out].copy()


def mix(
    s: ComplexSignal, b: ComplexSignal, w: ComplexSignal, sir_db: float, snr_db: float
) -> ComplexSignal:
    if not len(s) == len(b) == len(w):
        raise ValueError("component lengths differ")
    y = s.samples + amp_coeff(sir_db) * b.samples + amp_coeff(snr_db) * w.samples
    return ComplexSignal(y, {"origin": "mix", "sir_db": sir_db, "snr_db": snr_db})


def record_rng(master_seed: int, index: int) -> np.random.Generator:
    """Per-record stream; independent of how records are scheduled."""
    return np.random.default_rng([master_seed, index])


def make_record(
    qpsk: QpskSpec,
    ofdm: OfdmSpec,
    params: MixtureParams,
    rng: np.random.Generator,
    keep_noise: bool = False,
) -> MixtureRecord:
    """One labeled mixture realization.

    Draw order (fixed for reproducibility): k_s, k_b, SOI symbols,
    interference symbols, noise.
    """
    n = params.n_samples
    k_s = 0 if params.k_s_mode == "fixed-zero" else int(rng.integers(0, params.K_s))
    if params.k_b_mode == "fixed":
        k_b = int(params.k_b_fixed)
    else:
        k_b = int(rng.integers(0, params.K_b))

    soi_full, bits_all, sym0 = gen_qpsk(qpsk, n, rng, lead=params.K_s)
    s_win = apply_shift(soi_full, k_s, n)

    bits = None
    if bits_all is not None:
        os_ = qpsk.oversampling
        j0 = os_ * math.ceil(k_s / os_)  # first in-window peak, full-signal index
        first_sym = sym0 + j0 // os_
        nsym = (n - 1 - (j0 - k_s)) // os_ + 1
        bits = bits_all[2 * first_sym : 2 * (first_sym + nsym)].copy()

    sym_len = ofdm.symbol_len
    n_ofdm_syms = (n + params.K_b + sym_len - 1) // sym_len
    b_full, _ = gen_ofdm_with_bits(ofdm, n_ofdm_syms, rng)
    b_win = apply_shift(b_full, k_b, n)

    w = ComplexSignal(
        (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0),
        {"origin": "noise"},
    )
    y = mix(s_win, b_win, w, params.sir_db, params.snr_db)
    return MixtureRecord(
        y=y,
        s=s_win,
        b=b_win,
        k_s=k_s,
        k_b=k_b,
        bits=bits,
        params=params,
        w=w if keep_noise else None,
    )


def gen_dataset(
    qpsk: QpskSpec,
    ofdm: OfdmSpec,
    params: MixtureParams,
    count: int,
    master_seed: int,
) -> Dataset:
    if count < 1:
        raise ValueError("count must be >= 1")
    if params.K_s != qpsk.cyclic_period:
        raise ValueError("params.K_s must equal the SOI cyclic period")
    if params.K_b != ofdm.cyclic_period:
        raise ValueError("params.K_b must equal the interference cyclic period")
    records = [
        make_record(qpsk, ofdm, params, record_rng(master_seed, i)) for i in range(count)
    ]
    return Dataset(records=records, params=params, qpsk=qpsk, ofdm=ofdm)


# ---------------------------------------------------------------------------
# binary container
# ---------------------------------------------------------------------------


def _pack_header(
    n: int, k_s: int, k_b: int, count: int, sir_db: float, snr_db: float, flags: int
) -> bytes:
    if math.isnan(sir_db) or math.isnan(snr_db):
        raise ValueError("NaN dB values are not allowed; use +inf for noiseless")
    return struct.pack(_MAGIC_FMT, _MAGIC, _VERSION) + struct.pack(
        _HEADER_FMT, n, k_s, k_b, count, sir_db, snr_db, flags
    )


_MAGIC_FMT = "<4sH"


def _read_exact(f, size: int, what: str) -> bytes:
    raw = f.read(size)
    if len(raw) != size:
        raise DatasetFormatError(f"truncated file while reading {what}")
    return raw


def _read_header(f) -> tuple[int, int, int, int, float, float, int]:
    magic, version = struct.unpack(_MAGIC_FMT, _read_exact(f, 6, "magic"))
    if magic != _MAGIC:
        raise DatasetFormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise DatasetFormatError(f"unsupported format version {version}")
    return struct.unpack(_HEADER_FMT, _read_exact(f, struct.calcsize(_HEADER_FMT), "header"))


def _complex_bytes(x: np.ndarray) -> bytes:
    return np.ascontiguousarray(x, dtype="<c16").tobytes()


def write_dataset(dataset: Dataset, path) -> None:
    """Bit-exact serialization; components and bits stored when present."""
    params = dataset.params
    store_components = all(r.s is not None and r.b is not None for r in dataset.records)
    store_bits = all(r.bits is not None for r in dataset.records)
    flags = (FLAG_COMPONENTS if store_components else 0) | (
        FLAG_BITS if store_bits else 0
    )
    with open(path, "wb") as f:
        f.write(
            _pack_header(
                params.n_samples,
                params.K_s,
                params.K_b,
                len(dataset.records),
                params.sir_db,
                params.snr_db,
                flags,
            )
        )
        for rec in dataset.records:
            f.write(struct.pack("<HH", rec.k_s, rec.k_b))
            f.write(_complex_bytes(rec.y.samples))
            if store_components:
                f.write(_complex_bytes(rec.s.samples))
                f.write(_complex_bytes(rec.b.samples))
            if store_bits:
                f.write(struct.pack("<I", rec.bits.size))
                f.write(np.packbits(rec.bits.astype(np.uint8)).tobytes())


def read_dataset(path) -> Dataset:
    with open(path, "rb") as f:
        n, K_s, K_b, count, sir_db, snr_db, flags = _read_header(f)
        if flags & FLAG_PREDICTIONS:
            raise DatasetFormatError("file holds predictions, not a dataset")
        has_components = bool(flags & FLAG_COMPONENTS)
        has_bits = bool(flags & FLAG_BITS)
        records = []
        vec_bytes = 16 * n
        for i in range(count):
            k_s, k_b = struct.unpack("<HH", _read_exact(f, 4, f"record {i} shifts"))
            y = np.frombuffer(_read_exact(f, vec_bytes, f"record {i} y"), dtype="<c16")
            s = b = None
            if has_components:
                s = np.frombuffer(_read_exact(f, vec_bytes, f"record {i} s"), dtype="<c16")
                b = np.frombuffer(_read_exact(f, vec_bytes, f"record {i} b"), dtype="<c16")
            bits = None
            if has_bits:
                (nbits,) = struct.unpack("<I", _read_exact(f, 4, f"record {i} bit count"))
                packed = np.frombuffer(
                    _read_exact(f, (nbits + 7) // 8, f"record {i} bits"), dtype=np.uint8
                )
                bits = np.unpackbits(packed)[:nbits]
            records.append((k_s, k_b, y, s, b, bits))
        trailing = f.read(1)
        if trailing:
            raise DatasetFormatError("trailing bytes after the last record")

    k_s_vals = {r[0] for r in records}
    params = MixtureParams(
        n_samples=n,
        sir_db=sir_db,
        snr_db=snr_db,
        k_s_mode="fixed-zero" if k_s_vals == {0} else "uniform",
        k_b_mode="uniform",
        K_s=K_s,
        K_b=K_b,
    )
    out = []
    for k_s, k_b, y, s, b, bits in records:
        out.append(
            MixtureRecord(
                y=ComplexSignal(y.astype(np.complex128)),
                s=ComplexSignal(s.astype(np.complex128)) if s is not None else None,
                b=ComplexSignal(b.astype(np.complex128)) if b is not None else None,
                k_s=k_s,
                k_b=k_b,
                bits=bits,
                params=params,
            )
        )
    return Dataset(records=out, params=params)


@dataclass
class PredictionSet:
    """Per-record outputs of an external (or internal) synchronizer/separator."""

    n_samples: int
    K_s: int
    K_b: int
    sir_db: float
    snr_db: float
    k_b_hat: Optional[np.ndarray] = None
    s_hat: Optional[np.ndarray] = None  # (count, n_samples)

    @property
    def count(self) -> int:
        if self.k_b_hat is not None:
            return len(self.k_b_hat)
        return 0 if self.s_hat is None else self.s_hat.shape[0]


def write_predictions(pred: PredictionSet, path) -> None:
    if pred.k_b_hat is None and pred.s_hat is None:
        raise ValueError("prediction set is empty")
    count = pred.count
    if pred.k_b_hat is not None and len(pred.k_b_hat) != count:
        raise ValueError("k_b_hat length mismatch")
    if pred.s_hat is not None and pred.s_hat.shape != (count, pred.n_samples):
        raise ValueError("s_hat must be (count, n_samples)")
    flags = FLAG_PREDICTIONS
    if pred.k_b_hat is not None:
        flags |= FLAG_PRED_SHIFT
    if pred.s_hat is not None:
        flags |= FLAG_PRED_SOI
    with open(path, "wb") as f:
        f.write(
            _pack_header(
                pred.n_samples, pred.K_s, pred.K_b, count, pred.sir_db, pred.snr_db, flags
            )
        )
        for i in range(count):
            if pred.k_b_hat is not None:
                f.write(struct.pack("<H", int(pred.k_b_hat[i])))
            if pred.s_hat is not None:
                f.write(_complex_bytes(pred.s_hat[i]))


def read_predictions(path) -> PredictionSet:
    with open(path, "rb") as f:
        n, K_s, K_b, count, sir_db, snr_db, flags = _read_header(f)
        if not flags & FLAG_PREDICTIONS:
            raise DatasetFormatError("file is a dataset, not predictions")
        has_shift = bool(flags & FLAG_PRED_SHIFT)
        has_soi = bool(flags & FLAG_PRED_SOI)
        if not (has_shift or has_soi):
            raise DatasetFormatError("prediction file declares no payload")
        k_b_hat = np.zeros(count, dtype=np.int64) if has_shift else None
        s_hat = np.zeros((count, n), dtype=np.complex128) if has_soi else None
        for i in range(count):
            if has_shift:
                (k_b_hat[i],) = struct.unpack("<H", _read_exact(f, 2, f"prediction {i}"))
            if has_soi:
                s_hat[i] = np.frombuffer(
                    _read_exact(f, 16 * n, f"prediction {i} s_hat"), dtype="<c16"
                )
        if f.read(1):
            raise DatasetFormatError("trailing bytes after the last prediction")
    return PredictionSet(
        n_samples=n,
        K_s=K_s,
        K_b=K_b,
        sir_db=sir_db,
        snr_db=snr_db,
        k_b_hat=k_b_hat,
        s_hat=s_hat,
    )


# ---------------------------------------------------------------------------
# batched Gaussian-surrogate window sampling (Monte-Carlo fast path)
# ---------------------------------------------------------------------------


class SurrogateSampler:
    """Batched window sampler with the shift matrices built once.

    Exact sampling through the shift matrices; requires Gaussian alphabets
    on both specs.  The draw order (SOI symbols, interference symbols,
    noise) is fixed so results depend only on the RNG state, not on the
    shift grouping.
    """

    def __init__(
        self,
        qpsk: QpskSpec,
        ofdm: OfdmSpec,
        n: int,
        sir_db: float,
        snr_db: float,
        k_s: int = 0,
    ) -> None:
        if qpsk.alphabet != GAUSSIAN or ofdm.alphabet != GAUSSIAN:
            raise ValueError("surrogate sampler requires Gaussian alphabets")
        self.n = int(n)
        self.k_b_period = ofdm.cyclic_period
        self.c_b = amp_coeff(sir_db)
        self.c_w = amp_coeff(snr_db)
        self.soi = soi_shift_matrix(qpsk, self.n, k_s)
        self.interference = [
            ofdm_shift_matrix(ofdm, self.n, k) for k in range(self.k_b_period)
        ]
        self.cols_max = max(m.shape[1] for m in self.interference)

    def draw(
        self, k_b: np.ndarray, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray]:
        """Mixture windows ``Y`` and SOI windows ``S``, shape ``(n, len(k_b))``."""
        k_b = np.atleast_1d(np.asarray(k_b, dtype=np.int64))
        t = k_b.size
        n = self.n
        g = self.soi
        a = (
            rng.standard_normal((g.shape[1], t)) + 1j * rng.standard_normal((g.shape[1], t))
        ) / np.sqrt(2.0)
        s = g @ a
        x = (
            rng.standard_normal((self.cols_max, t))
            + 1j * rng.standard_normal((self.cols_max, t))
        ) / np.sqrt(2.0)
        b = np.zeros((n, t), dtype=np.complex128)
        for k in np.unique(k_b):
            m = self.interference[int(k)]
            idx = np.nonzero(k_b == k)[0]
            b[:, idx] = m @ x[: m.shape[1], idx]
        y = s + self.c_b * b
        if self.c_w > 0.0:
            w = (rng.standard_normal((n, t)) + 1j * rng.standard_normal((n, t))) / np.sqrt(2.0)
            y = y + self.c_w * w
        return y, s


def sample_mixture_windows(
    qpsk: QpskSpec,
    ofdm: OfdmSpec,
    n: int,
    sir_db: float,
    snr_db: float,
    k_b: np.ndarray,
    rng: np.random.Generator,
    k_s: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """One-shot wrapper around :class:`SurrogateSampler`."""
    return SurrogateSampler(qpsk, ofdm, n, sir_db, snr_db, k_s).draw(k_b, rng)
