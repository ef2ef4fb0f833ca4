"""Per-shift window covariances, their factorizations, and the bank container.

The central objects are ``CovMatrix`` (a Hermitian PSD matrix with a cached
Cholesky factor, log-determinant and a small diagonal regularization floor)
and ``CovBank`` (the signal covariance, the per-shift equivalent-noise and
mixture covariances, and the shift-averaged mixture covariance).

Covariances come from two routes that are cross-checked in the tests:
analytically from the waveform shift matrices (exact for Gaussian symbol
alphabets, and exact second-order statistics for the discrete alphabets),
or empirically from labeled datasets by grouping aligned windows by their
stored shift.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_triangular

from .signals import OfdmSpec, QpskSpec, ofdm_shift_matrix, soi_shift_matrix

DEFAULT_EPSILON_SCALE = 1e-9
_MAX_FACTOR_RETRIES = 8

_COV_MAGIC = b"SCOV"
_COV_VERSION = 1


class FactorizationError(RuntimeError):
    """Cholesky failed even after the maximum number of floor increases."""


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


class CovMatrix:
    """Hermitian PSD matrix with lazy Cholesky factor and log-determinant.

    Construction symmetrizes the input and, unless ``regularize=False``, adds
    the diagonal floor ``epsilon_scale * max(trace/dim, 1) * I`` so that
    factorization succeeds even for rank-deficient inputs.  If factorization
    still fails the floor is doubled and re-added, up to 8 times; the stored
    entries always reflect every floor that was applied, so
    ``chol @ chol.H`` reconstructs ``entries``.
    """

    def __init__(
        self,
        entries: np.ndarray,
        epsilon_scale: float = DEFAULT_EPSILON_SCALE,
        regularize: bool = True,
    ) -> None:
        entries = np.asarray(entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("covariance must be a square matrix")
        entries = _hermitize(entries)
        self.dim = entries.shape[0]
        self.epsilon_scale = float(epsilon_scale)
        self.eps = 0.0
        if regularize:
            scale_ref = float(np.real(np.trace(entries))) / self.dim
            self.eps = self.epsilon_scale * (scale_ref if scale_ref > 0 else 1.0)
            entries = entries + self.eps * np.eye(self.dim)
        self.entries: Optional[np.ndarray] = entries
        self._chol: Optional[np.ndarray] = None
        self._logdet: Optional[float] = None

    def _factor(self) -> None:
        if self.entries is None:
            raise ValueError("entries were released; factor is gone too")
        bump = self.eps if self.eps > 0 else self.epsilon_scale
        for attempt in range(_MAX_FACTOR_RETRIES + 1):
            try:
                self._chol = np.linalg.cholesky(self.entries)
                break
            except np.linalg.LinAlgError:
                if attempt == _MAX_FACTOR_RETRIES:
                    raise FactorizationError(
                        f"cholesky failed after {attempt} floor increases"
                    ) from None
                bump *= 2.0
                self.entries = self.entries + bump * np.eye(self.dim)
                self.eps += bump
        assert self._chol is not None
        self._logdet = 2.0 * float(np.sum(np.log(np.real(np.diag(self._chol)))))

    @property
    def chol(self) -> np.ndarray:
        """Lower-triangular factor with ``chol @ chol.conj().T == entries``."""
        if self._chol is None:
            self._factor()
        return self._chol

    @property
    def logdet(self) -> float:
        if self._logdet is None:
            self._factor()
        return self._logdet

    def whiten(self, y: np.ndarray) -> np.ndarray:
        """Solve ``chol @ u = y``; maps CN(0, C) vectors to CN(0, I)."""
        return solve_triangular(self.chol, y, lower=True, check_finite=False)

    def solve(self, y: np.ndarray) -> np.ndarray:
        """Solve ``C x = y`` through the cached factor."""
        u = solve_triangular(self.chol, y, lower=True, check_finite=False)
        return solve_triangular(
            self.chol, u, lower=True, trans="C", check_finite=False
        )

    def release_entries(self) -> None:
        """Drop the dense entries, keeping the factor and log-determinant."""
        if self._chol is None:
            self._factor()
        self.entries = None


def empirical_cov(
    aligned_samples: np.ndarray, epsilon_scale: float = DEFAULT_EPSILON_SCALE
) -> CovMatrix:
    """Sample covariance ``(1/count) sum x x^H`` of aligned window draws.

    ``aligned_samples`` has one window per row.  The estimate is
    Hermitian-symmetrized and floored like every other ``CovMatrix``.
    """
    x = np.asarray(aligned_samples, dtype=np.complex128)
    if x.ndim == 1:
        x = x[None, :]
    if x.size == 0 or x.shape[0] == 0:
        raise ValueError("need at least one sample")
    c = (x.T @ x.conj()) / x.shape[0]
    return CovMatrix(c, epsilon_scale=epsilon_scale)


def _soi_cov_raw(spec: QpskSpec, n: int, k: int) -> np.ndarray:
    g = soi_shift_matrix(spec, n, k)
    return (g @ g.T).astype(np.complex128)


def _ofdm_cov_raw(spec: OfdmSpec, n: int, k: int) -> np.ndarray:
    b = ofdm_shift_matrix(spec, n, k)
    return b @ b.conj().T


def analytic_cov_soi(
    spec: QpskSpec, n: int, k: int, epsilon_scale: float = DEFAULT_EPSILON_SCALE
) -> CovMatrix:
    """Covariance of a length-``n`` SOI window at cyclic offset ``k``.

    Exact for the Gaussian alphabet; equal second-order statistics for QPSK.
    """
    return CovMatrix(_soi_cov_raw(spec, n, k), epsilon_scale=epsilon_scale)


def analytic_cov_ofdm(
    spec: OfdmSpec, n: int, k: int, epsilon_scale: float = DEFAULT_EPSILON_SCALE
) -> CovMatrix:
    """Covariance of a length-``n`` OFDM window at cyclic offset ``k``."""
    return CovMatrix(_ofdm_cov_raw(spec, n, k), epsilon_scale=epsilon_scale)


def whiten(y: np.ndarray, c: CovMatrix) -> np.ndarray:
    """Triangular-solve whitening ``chol^{-1} y`` (see ``CovMatrix.whiten``)."""
    return c.whiten(y)


def _inv_db(db: float) -> float:
    """Linear power coefficient ``10^(-db/10)``; +inf dB maps to 0."""
    if np.isinf(db) and db > 0:
        return 0.0
    return float(10.0 ** (-db / 10.0))


@dataclass
class CovBank:
    """All aligned statistics for one block length and interference period.

    ``c_yy[m] = c_ss + c_vv[m]`` holds entrywise;
    ``c_yy_avg = mean_m c_yy[m]`` is the unconditional mixture covariance
    under the uniform shift prior.  When built with ``keep_entries=False``
    only the Cholesky factors of ``c_yy[m]`` survive (``c_vv`` is dropped and
    the per-shift entries are released) to keep large banks lean.
    """

    L: int
    K_b: int
    sir_db: float
    snr_db: float
    epsilon_scale: float
    c_ss: CovMatrix
    c_vv: Optional[list[CovMatrix]]
    c_yy: list[CovMatrix]
    c_yy_avg: CovMatrix

    def crop(self, n: int) -> "CovBank":
        """Leading-``n`` principal sub-bank, used for a final partial block."""
        if n == self.L:
            return self
        if not 0 < n < self.L:
            raise ValueError(f"crop length must be in (0, {self.L}]")
        if self.c_vv is None or any(c.entries is None for c in self.c_yy):
            raise ValueError("cannot crop a bank whose entries were released")
        c_ss = CovMatrix(self.c_ss.entries[:n, :n], regularize=False)
        c_vv = [CovMatrix(c.entries[:n, :n], regularize=False) for c in self.c_vv]
        c_yy = [CovMatrix(c.entries[:n, :n], regularize=False) for c in self.c_yy]
        avg = CovMatrix(self.c_yy_avg.entries[:n, :n], regularize=False)
        return CovBank(
            L=n,
            K_b=self.K_b,
            sir_db=self.sir_db,
            snr_db=self.snr_db,
            epsilon_scale=self.epsilon_scale,
            c_ss=c_ss,
            c_vv=c_vv,
            c_yy=c_yy,
            c_yy_avg=avg,
        )


def _dataset_vv_blocks(dataset, L: int, K_b: int) -> list[np.ndarray]:
    """Group equivalent-noise blocks ``y - s`` of a dataset by effective shift."""
    groups: list[list[np.ndarray]] = [[] for _ in range(K_b)]
    for rec in dataset.records:
        if rec.s is None:
            raise ValueError("empirical bank needs a dataset with stored components")
        v = rec.y.samples - rec.s.samples
        n_blocks = v.size // L
        for j in range(n_blocks):
            m = (rec.k_b + j * L) % K_b
            groups[m].append(v[j * L : (j + 1) * L])
    if any(len(g) == 0 for g in groups):
        missing = [m for m, g in enumerate(groups) if not g]
        raise ValueError(f"dataset has no blocks for shifts {missing[:5]}...")
    return [np.asarray(g) for g in groups]


def _dataset_ss_blocks(dataset, L: int) -> np.ndarray:
    rows = []
    for rec in dataset.records:
        if rec.s is None:
            raise ValueError("empirical bank needs a dataset with stored components")
        if rec.k_s != 0:
            raise ValueError("empirical SOI covariance expects k_s = 0 records")
        s = rec.s.samples
        for j in range(s.size // L):
            rows.append(s[j * L : (j + 1) * L])
    return np.asarray(rows)


def build_bank(
    c_ss_source: Union[QpskSpec, CovMatrix, np.ndarray, object],
    c_bb_source: Union[OfdmSpec, Sequence[np.ndarray], None, object],
    sir_db: float,
    snr_db: float,
    L: int,
    K_b: int,
    epsilon_scale: float = DEFAULT_EPSILON_SCALE,
    keep_entries: bool = True,
    factor: bool = True,
) -> CovBank:
    """Assemble the per-shift covariance bank.

    ``c_ss_source`` is a ``QpskSpec`` (analytic), a matrix, or a dataset with
    stored components; ``c_bb_source`` is an ``OfdmSpec`` (analytic), a
    sequence of ``K_b`` interference covariances, ``None`` (no interference),
    or a dataset.  Analytic/matrix interference sources are combined as
    ``c_vv(m) = sir^-1 c_bb(m) + snr^-1 I``; a dataset source estimates
    ``c_vv(m)`` directly from ``y - s`` blocks (the stored mixtures already
    include the SIR/SNR scaling).
    """
    inv_sir = _inv_db(sir_db)
    inv_snr = _inv_db(snr_db)
    eye = np.eye(L)

    if isinstance(c_ss_source, QpskSpec):
        c_ss = CovMatrix(_soi_cov_raw(c_ss_source, L, 0), epsilon_scale=epsilon_scale)
    elif isinstance(c_ss_source, CovMatrix):
        c_ss = c_ss_source
    elif isinstance(c_ss_source, np.ndarray):
        c_ss = CovMatrix(c_ss_source, epsilon_scale=epsilon_scale)
    else:
        c_ss = empirical_cov(_dataset_ss_blocks(c_ss_source, L), epsilon_scale)

    c_vv: list[CovMatrix] = []
    if isinstance(c_bb_source, OfdmSpec):
        if K_b != c_bb_source.cyclic_period:
            raise ValueError("K_b must equal the OFDM cyclic period")
        for m in range(K_b):
            raw = inv_sir * _ofdm_cov_raw(c_bb_source, L, m) + inv_snr * eye
            c_vv.append(CovMatrix(raw, epsilon_scale=epsilon_scale))
    elif c_bb_source is None:
        for _ in range(K_b):
            c_vv.append(CovMatrix(inv_snr * eye, epsilon_scale=epsilon_scale))
    elif isinstance(c_bb_source, (list, tuple)):
        if len(c_bb_source) != K_b:
            raise ValueError("need one interference covariance per shift")
        for raw_b in c_bb_source:
            raw = inv_sir * np.asarray(raw_b, dtype=np.complex128) + inv_snr * eye
            c_vv.append(CovMatrix(raw, epsilon_scale=epsilon_scale))
    else:
        blocks = _dataset_vv_blocks(c_bb_source, L, K_b)
        c_vv = [empirical_cov(b, epsilon_scale) for b in blocks]

    return assemble_bank(
        c_ss,
        c_vv,
        sir_db,
        snr_db,
        epsilon_scale=epsilon_scale,
        keep_entries=keep_entries,
        factor=factor,
    )


def assemble_bank(
    c_ss: CovMatrix,
    c_vv: Sequence[CovMatrix],
    sir_db: float,
    snr_db: float,
    epsilon_scale: float = DEFAULT_EPSILON_SCALE,
    keep_entries: bool = True,
    factor: bool = True,
) -> CovBank:
    """Finish a bank from ready-made signal and equivalent-noise covariances."""
    c_vv = list(c_vv)
    K_b = len(c_vv)
    c_yy = [
        CovMatrix(c_ss.entries + cv.entries, regularize=False) for cv in c_vv
    ]
    avg_entries = sum(c.entries for c in c_yy) / K_b
    c_yy_avg = CovMatrix(avg_entries, regularize=False)

    if factor:
        for c in c_yy:
            c.chol  # noqa: B018 - force factorization eagerly
        c_yy_avg.chol

    bank = CovBank(
        L=c_ss.dim,
        K_b=K_b,
        sir_db=sir_db,
        snr_db=snr_db,
        epsilon_scale=epsilon_scale,
        c_ss=c_ss,
        c_vv=c_vv,
        c_yy=c_yy,
        c_yy_avg=c_yy_avg,
    )
    if not keep_entries:
        for c in bank.c_yy:
            c.release_entries()
        bank.c_vv = None
    return bank


def write_bank(bank: CovBank, path) -> None:
    """Binary cache of a bank (little-endian, magic ``SCOV``).

    Stores the signal covariance and the per-shift equivalent-noise
    covariances; the mixture covariances and factors are rebuilt on read.
    """
    if bank.c_vv is None:
        raise ValueError("cannot cache a bank whose entries were released")
    with open(path, "wb") as f:
        f.write(struct.pack("<4sH", _COV_MAGIC, _COV_VERSION))
        f.write(
            struct.pack(
                "<IHdddI",
                bank.L,
                bank.K_b,
                bank.sir_db,
                bank.snr_db,
                bank.epsilon_scale,
                0,
            )
        )
        f.write(np.ascontiguousarray(bank.c_ss.entries, dtype="<c16").tobytes())
        for c in bank.c_vv:
            f.write(np.ascontiguousarray(c.entries, dtype="<c16").tobytes())


def read_bank(path, factor: bool = True) -> CovBank:
    from .mixture import DatasetFormatError  # shared error type for binary files

    with open(path, "rb") as f:
        head = f.read(6)
        if len(head) != 6:
            raise DatasetFormatError("truncated bank file")
        magic, version = struct.unpack("<4sH", head)
        if magic != _COV_MAGIC:
            raise DatasetFormatError(f"bad magic {magic!r}, expected {_COV_MAGIC!r}")
        if version != _COV_VERSION:
            raise DatasetFormatError(f"unsupported bank version {version}")
        rest = f.read(struct.calcsize("<IHdddI"))
        if len(rest) != struct.calcsize("<IHdddI"):
            raise DatasetFormatError("truncated bank header")
        L, K_b, sir_db, snr_db, eps_scale, _flags = struct.unpack("<IHdddI", rest)
        mat_bytes = L * L * 16

        def read_mat() -> np.ndarray:
            raw = f.read(mat_bytes)
            if len(raw) != mat_bytes:
                raise DatasetFormatError("truncated bank matrices")
            return np.frombuffer(raw, dtype="<c16").reshape(L, L).astype(np.complex128)

        c_ss = CovMatrix(read_mat(), regularize=False)
        c_vv = [CovMatrix(read_mat(), regularize=False) for _ in range(K_b)]

    c_yy = [CovMatrix(c_ss.entries + cv.entries, regularize=False) for cv in c_vv]
    avg = CovMatrix(sum(c.entries for c in c_yy) / K_b, regularize=False)
    if factor:
        for c in c_yy:
            c.chol
        avg.chol
    return CovBank(
        L=L,
        K_b=K_b,
        sir_db=sir_db,
        snr_db=snr_db,
        epsilon_scale=eps_scale,
        c_ss=c_ss,
        c_vv=c_vv,
        c_yy=c_yy,
        c_yy_avg=avg,
    )
