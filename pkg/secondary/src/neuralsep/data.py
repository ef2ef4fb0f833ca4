"""Independent reader/writer for the binary mixture containers.

This package talks to the signal-processing toolkit only through its file
formats, so the parsing here is implemented from the format description and
deliberately shares no code with it: little-endian, magic ``SCSS``,
version u16, header ``{N u32, K_s u16, K_b u16, count u32, sir_db f64,
snr_db f64, flags u32}``.  Flag bits: 0 components stored, 1 bits stored,
2 prediction container, 3 per-record ``k_b_hat`` u16, 4 per-record ``s_hat``
as N complex128.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

MAGIC = b"SCSS"
VERSION = 1
HEADER_FMT = "<IHHIddI"

FLAG_COMPONENTS = 1 << 0
FLAG_BITS = 1 << 1
FLAG_PREDICTIONS = 1 << 2
FLAG_PRED_SHIFT = 1 << 3
FLAG_PRED_SOI = 1 << 4


class FormatError(Exception):
    pass


@dataclass
class MixtureSet:
    """Column-major views of a labeled dataset file."""

    n_samples: int
    K_s: int
    K_b: int
    sir_db: float
    snr_db: float
    y: np.ndarray  # (count, N) complex128
    k_s: np.ndarray
    k_b: np.ndarray
    s: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    bits: Optional[list[np.ndarray]] = None

    @property
    def count(self) -> int:
        return self.y.shape[0]


def _read_exact(f, size: int, what: str) -> bytes:
    raw = f.read(size)
    if len(raw) != size:
        raise FormatError(f"truncated file while reading {what}")
    return raw


def read_mixtures(path) -> MixtureSet:
    with open(path, "rb") as f:
        magic, version = struct.unpack("<4sH", _read_exact(f, 6, "magic"))
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        n, K_s, K_b, count, sir_db, snr_db, flags = struct.unpack(
            HEADER_FMT, _read_exact(f, struct.calcsize(HEADER_FMT), "header")
        )
        if flags & FLAG_PREDICTIONS:
            raise FormatError("file holds predictions, expected a dataset")
        has_components = bool(flags & FLAG_COMPONENTS)
        has_bits = bool(flags & FLAG_BITS)

        y = np.empty((count, n), dtype=np.complex128)
        k_s = np.empty(count, dtype=np.int64)
        k_b = np.empty(count, dtype=np.int64)
        s = np.empty((count, n), dtype=np.complex128) if has_components else None
        b = np.empty((count, n), dtype=np.complex128) if has_components else None
        bits: Optional[list[np.ndarray]] = [] if has_bits else None
        vec = 16 * n
        for i in range(count):
            k_s[i], k_b[i] = struct.unpack("<HH", _read_exact(f, 4, f"record {i}"))
            y[i] = np.frombuffer(_read_exact(f, vec, f"record {i} y"), dtype="<c16")
            if has_components:
                s[i] = np.frombuffer(_read_exact(f, vec, f"record {i} s"), dtype="<c16")
                b[i] = np.frombuffer(_read_exact(f, vec, f"record {i} b"), dtype="<c16")
            if has_bits:
                (nbits,) = struct.unpack("<I", _read_exact(f, 4, f"record {i} bits"))
                packed = np.frombuffer(
                    _read_exact(f, (nbits + 7) // 8, f"record {i} bit payload"),
                    dtype=np.uint8,
                )
                bits.append(np.unpackbits(packed)[:nbits])
        if f.read(1):
            raise FormatError("trailing bytes after the last record")
    return MixtureSet(
        n_samples=n,
        K_s=K_s,
        K_b=K_b,
        sir_db=sir_db,
        snr_db=snr_db,
        y=y,
        k_s=k_s,
        k_b=k_b,
        s=s,
        b=b,
        bits=bits,
    )


def write_predictions(
    path,
    mixtures: MixtureSet,
    k_b_hat: Optional[np.ndarray] = None,
    s_hat: Optional[np.ndarray] = None,
) -> None:
    """Prediction container matched to ``mixtures`` (bit2 plus payload bits)."""
    if k_b_hat is None and s_hat is None:
        raise ValueError("nothing to write")
    flags = FLAG_PREDICTIONS
    if k_b_hat is not None:
        k_b_hat = np.asarray(k_b_hat)
        if k_b_hat.shape[0] != mixtures.count:
            raise ValueError("one prediction per record required")
        if np.any(k_b_hat < 0) or np.any(k_b_hat >= mixtures.K_b):
            raise ValueError("shift predictions outside [0, K_b)")
        flags |= FLAG_PRED_SHIFT
    if s_hat is not None:
        if s_hat.shape != (mixtures.count, mixtures.n_samples):
            raise ValueError("s_hat must be (count, n_samples)")
        flags |= FLAG_PRED_SOI
    with open(path, "wb") as f:
        f.write(struct.pack("<4sH", MAGIC, VERSION))
        f.write(
            struct.pack(
                HEADER_FMT,
                mixtures.n_samples,
                mixtures.K_s,
                mixtures.K_b,
                mixtures.count,
                mixtures.sir_db,
                mixtures.snr_db,
                flags,
            )
        )
        for i in range(mixtures.count):
            if k_b_hat is not None:
                f.write(struct.pack("<H", int(k_b_hat[i])))
            if s_hat is not None:
                f.write(np.ascontiguousarray(s_hat[i], dtype="<c16").tobytes())


def stacked_real_imag(y: np.ndarray) -> np.ndarray:
    """(count, N) complex -> (count, 2, N) float32 for the networks."""
    out = np.empty((y.shape[0], 2, y.shape[1]), dtype=np.float32)
    out[:, 0] = y.real
    out[:, 1] = y.imag
    return out
