"""Experiment harness: MSE/BER sweeps, asymptotic-ratio runs, and scoring.

Every run is driven by a :class:`SweepConfig`, produces a :class:`SweepResult`
table (one row per grid point, method and metric, each with a standard
error), and is byte-reproducible for a fixed seed regardless of the worker
count: randomness is keyed by ``(seed, purpose, point, chunk-or-record)`` and
chunk results are reduced in fixed order.

Results serialize to CSV with ``#``-prefixed provenance comments followed by
the fixed header ``sir_db,snr_db,n,method,metric,value,stderr,trials``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import estimators
from .covariance import (
    CovBank,
    CovMatrix,
    _ofdm_cov_raw,
    _soi_cov_raw,
    assemble_bank,
    build_bank,
)
from .demod import hard_decision, matched_filter, steady_symbol_slice
from .estimators import (
    METHOD_LMMSE,
    METHOD_MAP_QLMMSE,
    METHOD_MF,
    METHOD_MMSE,
    METHOD_PSI_QLMMSE,
    family_batch,
)
from .mixture import (
    Dataset,
    MixtureParams,
    PredictionSet,
    SurrogateSampler,
    make_record,
    read_dataset,
    read_predictions,
    write_predictions,
)
from .seeding import (
    DEFAULT_CHUNK,
    TAG_BER,
    TAG_BER_TRAIN,
    TAG_MSE,
    TAG_THEOREM1,
    iter_chunks,
    rng_for,
)
from .signals import GAUSSIAN, QAM16, QPSK, OfdmSpec, QpskSpec, rrc_taps


@dataclass(frozen=True)
class SweepConfig:
    """Grid, budget and reproducibility knobs for one experiment run."""

    sir_db: tuple = (0.0,)
    snr_db: tuple = (20.0,)
    n: tuple = (320,)
    methods: tuple = (METHOD_LMMSE, METHOD_MAP_QLMMSE, METHOD_PSI_QLMMSE, METHOD_MMSE)
    trials: int = 1000
    seed: int = 0
    block_len: int = 320
    sync_window: int = 640
    workers: int = 1
    alphabet: str = GAUSSIAN  # "gaussian" or "digital"
    rolloff: float = 0.5
    span_symbols: int = 8
    oversampling: int = 16
    fft_size: int = 64
    cp_len: int = 16
    eps_scale: float = 1e-9
    out: Optional[str] = None
    # BER sweep: where the aligned statistics come from.  "analytic" uses the
    # exact model covariances; "empirical" estimates them from a fresh labeled
    # training set per grid point (the data-driven setting, whose quality is
    # bounded by train_records).
    cov_source: str = "analytic"
    train_records: int = 1200
    # sync-eval specifics
    dataset_path: Optional[str] = None
    predictions_path: Optional[str] = None
    emit_predictions: Optional[str] = None
    label: str = "external"

    def __post_init__(self) -> None:
        if not self.sir_db or not self.snr_db or not self.n:
            raise ValueError("sweep grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def qpsk_spec(self) -> QpskSpec:
        alpha = GAUSSIAN if self.alphabet == GAUSSIAN else QPSK
        return QpskSpec(self.rolloff, self.span_symbols, self.oversampling, alpha)

    def ofdm_spec(self) -> OfdmSpec:
        alpha = GAUSSIAN if self.alphabet == GAUSSIAN else QAM16
        return OfdmSpec(self.fft_size, self.cp_len, alpha)

    def k_b(self) -> int:
        return self.fft_size + self.cp_len


@dataclass
class SweepRow:
    sir_db: float
    snr_db: float
    n: int
    method: str
    metric: str
    value: float
    stderr: float
    trials: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    comments: list[str] = field(default_factory=list)

    def csv_text(self) -> str:
        lines = [f"# {c}" for c in self.comments]
        lines.append("sir_db,snr_db,n,method,metric,value,stderr,trials")
        for r in self.rows:
            lines.append(
                ",".join(
                    [
                        _fmt(r.sir_db),
                        _fmt(r.snr_db),
                        str(r.n),
                        r.method,
                        r.metric,
                        _fmt(r.value),
                        _fmt(r.stderr),
                        str(r.trials),
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.csv_text())

    def select(self, **match) -> list[SweepRow]:
        out = []
        for r in self.rows:
            if all(getattr(r, k) == v for k, v in match.items()):
                out.append(r)
        return out


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


# fields that cannot change results; kept out of provenance so outputs are
# byte-identical across worker counts and destinations
_NON_SEMANTIC_FIELDS = {"workers", "out"}


def config_comments(command: str, config: SweepConfig) -> list[str]:
    items = []
    for key in sorted(vars(config)):
        if key in _NON_SEMANTIC_FIELDS:
            continue
        val = getattr(config, key)
        if isinstance(val, tuple):
            val = ",".join(_fmt(v) if isinstance(v, float) else str(v) for v in val)
        items.append(f"{key} = {val}")
    return [f"command = {command}"] + items


def _map_ordered(fn: Callable, args: Iterable, workers: int) -> list:
    args = list(args)
    if workers <= 1:
        return [fn(a) for a in args]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, args))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    m = float(np.mean(x))
    if x.size < 2:
        return m, 0.0
    return m, float(np.std(x, ddof=1) / math.sqrt(x.size))


def _grid(config: SweepConfig):
    idx = 0
    for sir in config.sir_db:
        for snr in config.snr_db:
            for n in config.n:
                yield idx, float(sir), float(snr), int(n)
                idx += 1


def _point_bank(
    config: SweepConfig,
    sir: float,
    snr: float,
    n: int,
    raw_cache: dict,
) -> CovBank:
    """Analytic bank for one grid point, reusing shift covariances per n."""
    qpsk = config.qpsk_spec()
    ofdm = config.ofdm_spec()
    key = ("raw", n)
    if key not in raw_cache:
        gau_q = QpskSpec(config.rolloff, config.span_symbols, config.oversampling, GAUSSIAN)
        gau_o = OfdmSpec(config.fft_size, config.cp_len, GAUSSIAN)
        raw_cache[key] = (
            _soi_cov_raw(gau_q, n, 0),
            [_ofdm_cov_raw(gau_o, n, m) for m in range(ofdm.cyclic_period)],
        )
    c_ss_raw, c_bb_raws = raw_cache[key]
    return build_bank(
        np.asarray(c_ss_raw),
        list(c_bb_raws),
        sir,
        snr,
        n,
        ofdm.cyclic_period,
        epsilon_scale=config.eps_scale,
    )


# ---------------------------------------------------------------------------
# MSE sweep (Gaussian surrogates, single-window estimates)
# ---------------------------------------------------------------------------


def run_mse_sweep(config: SweepConfig) -> SweepResult:
    """Per grid point, mean per-sample squared error of each estimator."""
    if config.alphabet != GAUSSIAN:
        raise ValueError("the MSE sweep uses Gaussian symbol alphabets")
    qpsk = config.qpsk_spec()
    ofdm = config.ofdm_spec()
    rows: list[SweepRow] = []
    raw_cache: dict = {}
    for point, sir, snr, n in _grid(config):
        bank = _point_bank(config, sir, snr, n, raw_cache)
        sampler = SurrogateSampler(qpsk, ofdm, n, sir, snr)
        chunks = list(iter_chunks(config.trials, min(DEFAULT_CHUNK, 512)))

        def run_chunk(ci_size, _bank=bank, _point=point, _n=n, _sampler=sampler):
            ci, size = ci_size
            rng = rng_for(config.seed, TAG_MSE, _point, ci)
            k_b = rng.integers(0, _bank.K_b, size=size)
            y, s = _sampler.draw(k_b, rng)
            ests = family_batch(y, _bank, config.methods)
            return {
                m: np.sum(np.abs(ests[m] - s) ** 2, axis=0) / _n for m in config.methods
            }

        parts = _map_ordered(run_chunk, chunks, config.workers)
        for m in config.methods:
            errs = np.concatenate([p[m] for p in parts])
            value, se = _mean_se(errs)
            rows.append(SweepRow(sir, snr, n, m, "mse", value, se, config.trials))
    return SweepResult(rows, config_comments("sweep-mse", config))


# ---------------------------------------------------------------------------
# asymptotic-equivalence run (ratio, regret, orthogonality identity)
# ---------------------------------------------------------------------------


def run_theorem1_check(config: SweepConfig) -> SweepResult:
    """MSE ratio and regret decomposition across window lengths.

    Emits per point: per-sample MSEs of the mixture and plug-in estimators,
    their ratio (delta-method standard error over paired trials), the mean
    squared optimality gap ("regret"), and the residual of the identity
    ``mse_plugin - mse_mixture = regret`` which should vanish in expectation.
    """
    if config.alphabet != GAUSSIAN:
        raise ValueError("the ratio check uses Gaussian symbol alphabets")
    qpsk = config.qpsk_spec()
    ofdm = config.ofdm_spec()
    rows: list[SweepRow] = []
    raw_cache: dict = {}
    for point, sir, snr, n in _grid(config):
        bank = _point_bank(config, sir, snr, n, raw_cache)
        sampler = SurrogateSampler(qpsk, ofdm, n, sir, snr)
        chunks = list(iter_chunks(config.trials, min(DEFAULT_CHUNK, 512)))

        def run_chunk(ci_size, _bank=bank, _point=point, _n=n, _sampler=sampler):
            ci, size = ci_size
            rng = rng_for(config.seed, TAG_THEOREM1, _point, ci)
            k_b = rng.integers(0, _bank.K_b, size=size)
            y, s = _sampler.draw(k_b, rng)
            ests = family_batch(y, _bank, (METHOD_MMSE, METHOD_MAP_QLMMSE))
            e_mix = np.sum(np.abs(ests[METHOD_MMSE] - s) ** 2, axis=0)
            e_plug = np.sum(np.abs(ests[METHOD_MAP_QLMMSE] - s) ** 2, axis=0)
            gap = np.sum(np.abs(ests[METHOD_MMSE] - ests[METHOD_MAP_QLMMSE]) ** 2, axis=0)
            return e_mix, e_plug, gap

        parts = _map_ordered(run_chunk, chunks, config.workers)
        e_mix = np.concatenate([p[0] for p in parts])
        e_plug = np.concatenate([p[1] for p in parts])
        gap = np.concatenate([p[2] for p in parts])

        t = e_mix.size
        mean_mix, se_mix = _mean_se(e_mix)
        mean_plug, se_plug = _mean_se(e_plug)
        ratio = mean_mix / mean_plug
        cov = float(np.cov(e_mix, e_plug, ddof=1)[0, 1]) / t if t > 1 else 0.0
        var_ratio = (
            (se_mix / mean_plug) ** 2
            + (mean_mix * se_plug / mean_plug**2) ** 2
            - 2.0 * mean_mix * cov / mean_plug**3
        )
        se_ratio = math.sqrt(max(var_ratio, 0.0))
        resid, se_resid = _mean_se(e_plug - e_mix - gap)
        mean_gap, se_gap = _mean_se(gap)

        rows.append(SweepRow(sir, snr, n, METHOD_MMSE, "mse", mean_mix / n, se_mix / n, t))
        rows.append(
            SweepRow(sir, snr, n, METHOD_MAP_QLMMSE, "mse", mean_plug / n, se_plug / n, t)
        )
        rows.append(SweepRow(sir, snr, n, "mmse/map-qlmmse", "ratio", ratio, se_ratio, t))
        rows.append(SweepRow(sir, snr, n, "mmse-gap", "regret", mean_gap / n, se_gap / n, t))
        rows.append(
            SweepRow(
                sir,
                snr,
                n,
                "identity",
                "residual",
                resid / n,
                se_resid / n,
                t,
            )
        )
    return SweepResult(rows, config_comments("theorem1", config))


# ---------------------------------------------------------------------------
# BER sweep (discrete alphabets, long records, block processing)
# ---------------------------------------------------------------------------


def _empirical_point_bank(
    config: SweepConfig, point: int, sir: float, snr: float, n: int
) -> CovBank:
    """Aligned statistics estimated from a fresh labeled training set.

    Mirrors the data-driven pipeline: ``config.train_records`` mixtures are
    generated at the grid point's SIR/SNR and their component windows are
    accumulated per effective shift, streaming so nothing large is retained.
    Training draws use a purpose tag disjoint from the evaluation records.
    """
    qpsk = config.qpsk_spec()
    ofdm = config.ofdm_spec()
    L = config.block_len
    K_b = ofdm.cyclic_period
    params = MixtureParams(
        n_samples=n, sir_db=sir, snr_db=snr, K_s=qpsk.cyclic_period, K_b=K_b
    )
    nb = n // L
    acc_vv = np.zeros((K_b, L, L), dtype=np.complex128)
    counts = np.zeros(K_b, dtype=np.int64)
    acc_ss = np.zeros((L, L), dtype=np.complex128)
    ss_count = 0
    for i in range(config.train_records):
        rec = make_record(qpsk, ofdm, params, rng_for(config.seed, TAG_BER_TRAIN, point, i))
        v = (rec.y.samples - rec.s.samples).reshape(nb, L)
        s = rec.s.samples.reshape(nb, L)
        shifts = (rec.k_b + np.arange(nb) * L) % K_b
        for m in np.unique(shifts):
            blk = v[shifts == m]
            acc_vv[m] += blk.T @ blk.conj()
            counts[m] += blk.shape[0]
        acc_ss += s.T @ s.conj()
        ss_count += nb
    if np.any(counts == 0):
        raise ValueError("training set left some shifts uncovered; increase train_records")
    c_ss = CovMatrix(acc_ss / ss_count, epsilon_scale=config.eps_scale)
    c_vv = [
        CovMatrix(acc_vv[m] / counts[m], epsilon_scale=config.eps_scale)
        for m in range(K_b)
    ]
    return assemble_bank(c_ss, c_vv, sir, snr, epsilon_scale=config.eps_scale)


def _combine_sync(ll: np.ndarray, block_len: int, period: int) -> np.ndarray:
    """Fuse per-block log-likelihoods (K, n_blocks, R) into (K, R) scores."""
    k = np.arange(period)
    out = np.zeros((period, ll.shape[2]))
    for j in range(ll.shape[1]):
        out += ll[(k + j * block_len) % period, j, :]
    return out


def _blocks_as_columns(y: np.ndarray, L: int) -> np.ndarray:
    """(N, R) records -> (L, n_blocks*R) block columns, record-major."""
    n, r = y.shape
    nb = n // L
    return y[: nb * L].reshape(nb, L, r).transpose(1, 0, 2).reshape(L, nb * r)


def _columns_as_blocks(cols: np.ndarray, L: int, n: int, r: int) -> np.ndarray:
    nb = n // L
    return cols.reshape(L, nb, r).transpose(1, 0, 2).reshape(nb * L, r)


def run_ber_sweep(config: SweepConfig) -> SweepResult:
    """Full demodulation-chain bit error rates for block-processed records.

    ``config.trials`` is the number of independent records per grid point;
    each record carries ``2 * ceil(n / oversampling)`` payload bits, with
    edge symbols excluded from the count.
    """
    if config.alphabet == GAUSSIAN:
        raise ValueError("the BER sweep uses discrete symbol alphabets")
    qpsk = config.qpsk_spec()
    ofdm = config.ofdm_spec()
    pulse = rrc_taps(config.rolloff, config.span_symbols, config.oversampling)
    L = config.block_len
    rows: list[SweepRow] = []
    raw_cache: dict = {}
    methods = config.methods or (METHOD_MF, METHOD_LMMSE, METHOD_MAP_QLMMSE)

    for point, sir, snr, n in _grid(config):
        if n % L != 0 or config.sync_window % L != 0 or n < config.sync_window:
            raise ValueError("need sync_window | n, both multiples of block_len")
        if config.cov_source == "analytic":
            bank = _point_bank(config, sir, snr, L, raw_cache)
        else:
            bank = _empirical_point_bank(config, point, sir, snr, n)
        params = MixtureParams(
            n_samples=n, sir_db=sir, snr_db=snr, K_s=qpsk.cyclic_period, K_b=bank.K_b
        )
        rec_chunks = list(iter_chunks(config.trials, 32))

        def run_chunk(ci_size, _bank=bank, _point=point, _params=params):
            ci, size = ci_size
            base = ci * 32
            recs = [
                make_record(qpsk, ofdm, _params, rng_for(config.seed, TAG_BER, _point, base + i))
                for i in range(size)
            ]
            return _ber_chunk(recs, _bank, methods, config, pulse)

        parts = _map_ordered(run_chunk, rec_chunks, config.workers)
        err = {m: 0 for m in methods}
        tot = {m: 0 for m in methods}
        sync_err = 0
        for p in parts:
            for m in methods:
                err[m] += p["errors"][m]
                tot[m] += p["bits"][m]
            sync_err += p["sync_errors"]
        for m in methods:
            p_hat = err[m] / tot[m]
            se = math.sqrt(max(p_hat * (1 - p_hat), 1e-300) / tot[m])
            rows.append(SweepRow(sir, snr, n, m, "ber", p_hat, se, tot[m]))
        if any(m in (METHOD_MAP_QLMMSE, METHOD_PSI_QLMMSE, METHOD_MMSE) for m in methods):
            p_hat = sync_err / config.trials
            se = math.sqrt(max(p_hat * (1 - p_hat), 1e-300) / config.trials)
            rows.append(
                SweepRow(sir, snr, n, "map", "sync_error_rate", p_hat, se, config.trials)
            )
    return SweepResult(rows, config_comments("sweep-ber", config))


def _ber_chunk(records, bank: CovBank, methods, config: SweepConfig, pulse) -> dict:
    L = bank.L
    n = records[0].params.n_samples
    r = len(records)
    y = np.stack([rec.y.samples for rec in records], axis=1)  # (N, R)
    k_true = np.array([rec.k_b for rec in records])
    ref_bits = np.stack([rec.bits for rec in records], axis=0)  # (R, nbits)

    needs_sync = any(
        m in (METHOD_MAP_QLMMSE, METHOD_PSI_QLMMSE, METHOD_MMSE) for m in methods
    )
    k_map = k_psi = None
    post = None
    if needs_sync:
        nsb = config.sync_window // L
        sync_cols = _blocks_as_columns(y[: config.sync_window], L)  # (L, nsb*R)
        quads = estimators.block_quadratics(sync_cols, bank).reshape(bank.K_b, nsb, r)
        logdets = np.array([c.logdet for c in bank.c_yy])
        ll = -quads - logdets[:, None, None]
        combined = _combine_sync(ll, L, bank.K_b)  # (K, R)
        k_map = np.argmax(combined, axis=0)
        psi = quads / L - 1.0
        k_psi = np.argmin(np.abs(_combine_sync(psi, L, bank.K_b) / nsb), axis=0)
        shifted = combined - np.max(combined, axis=0, keepdims=True)
        w = np.exp(shifted)
        post = w / np.sum(w, axis=0, keepdims=True)

    nb = n // L
    cols = _blocks_as_columns(y, L)  # (L, nb*R)
    block_of = np.repeat(np.arange(nb), r)
    rec_of = np.tile(np.arange(r), nb)

    out = {"errors": {}, "bits": {}, "sync_errors": 0}
    if needs_sync:
        out["sync_errors"] = int(np.sum(k_map != k_true))

    for method in methods:
        if method == METHOD_MF:
            s_hat = y
        elif method == METHOD_LMMSE:
            est = bank.c_ss.entries @ bank.c_yy_avg.solve(cols)
            s_hat = _columns_as_blocks(est, L, n, r)
        elif method in (METHOD_MAP_QLMMSE, METHOD_PSI_QLMMSE):
            k_hat = k_map if method == METHOD_MAP_QLMMSE else k_psi
            shift = (k_hat[rec_of] + block_of * L) % bank.K_b
            est = np.empty_like(cols)
            for m in np.unique(shift):
                idx = np.nonzero(shift == m)[0]
                est[:, idx] = bank.c_ss.entries @ bank.c_yy[m].solve(cols[:, idx])
            s_hat = _columns_as_blocks(est, L, n, r)
        elif method == METHOD_MMSE:
            est = np.zeros_like(cols)
            for m in range(bank.K_b):
                x_m = bank.c_ss.entries @ bank.c_yy[m].solve(cols)
                weights = post[(m - block_of * L) % bank.K_b, rec_of]
                est += weights[None, :] * x_m
            s_hat = _columns_as_blocks(est, L, n, r)
        else:
            raise ValueError(f"unsupported BER method {method!r}")
        errors, bits = _score_bits(s_hat, ref_bits, pulse, config.oversampling)
        out["errors"][method] = errors
        out["bits"][method] = bits
    return out


def _score_bits(s_hat: np.ndarray, ref_bits: np.ndarray, pulse, oversampling: int):
    """Demodulate estimated records and count interior-symbol bit errors."""
    n = s_hat.shape[0]
    symbols = matched_filter(s_hat, pulse, symbol_phase=0, scale=math.sqrt(oversampling))
    sl = steady_symbol_slice(n, pulse)
    dec = hard_decision(symbols[sl], QPSK)  # (2*nsl, R)
    r = ref_bits.shape[0]
    nsym = symbols.shape[0]
    ref = ref_bits.reshape(r, nsym, 2)[:, sl]
    ref = ref.transpose(1, 2, 0).reshape(-1, r)
    return int(np.sum(dec != ref)), int(dec.size)


# ---------------------------------------------------------------------------
# synchronizer / separator scoring against stored datasets
# ---------------------------------------------------------------------------


def run_sync_eval(config: SweepConfig) -> SweepResult:
    """Score shift and signal predictions against a labeled dataset.

    Without a predictions file, the built-in MAP and psi synchronizers run on
    each record's leading ``sync_window`` samples.  A predictions file is
    scored for shift accuracy (``k_b_hat``) and, when it carries estimated
    signals and the dataset stores components, per-sample MSE and
    demodulated BER.  ``emit_predictions`` writes the internal baseline's
    predictions for cross-component comparisons.
    """
    if not config.dataset_path:
        raise ValueError("sync-eval needs a dataset path")
    ds = read_dataset(config.dataset_path)
    n = ds.params.n_samples
    sir, snr = ds.params.sir_db, ds.params.snr_db
    rows: list[SweepRow] = []
    comments = config_comments("sync-eval", config)
    comments.append(f"dataset = {config.dataset_path}")

    if config.predictions_path:
        pred = read_predictions(config.predictions_path)
        if pred.count != len(ds.records) or pred.n_samples != n:
            raise ValueError("prediction file does not match the dataset")
        if pred.k_b_hat is not None:
            k_true = np.array([r.k_b for r in ds.records])
            rows += _sync_rows(pred.k_b_hat, k_true, ds, config.label)
        if pred.s_hat is not None:
            rows += _soi_rows(pred.s_hat, ds, config, config.label)
        return SweepResult(rows, comments)

    L = config.block_len
    sync_window = min(config.sync_window, (n // L) * L)
    if sync_window < L:
        raise ValueError("records shorter than one block")
    raw_cache: dict = {}
    bank = _point_bank(config, sir, snr, L, raw_cache)
    if bank.K_b != ds.params.K_b:
        raise ValueError("dataset K_b does not match the configured waveform")

    y = np.stack([r.y.samples[:sync_window] for r in ds.records], axis=1)
    k_true = np.array([r.k_b for r in ds.records])
    nsb = sync_window // L
    cols = _blocks_as_columns(y, L)
    quads = estimators.block_quadratics(cols, bank).reshape(bank.K_b, nsb, len(ds.records))
    logdets = np.array([c.logdet for c in bank.c_yy])
    combined = _combine_sync(-quads - logdets[:, None, None], L, bank.K_b)
    k_map = np.argmax(combined, axis=0)
    k_psi = np.argmin(np.abs(_combine_sync(quads / L - 1.0, L, bank.K_b) / nsb), axis=0)
    rows += _sync_rows(k_map, k_true, ds, "map")
    rows += _sync_rows(k_psi, k_true, ds, "psi")

    if config.emit_predictions:
        method = config.methods[0] if config.methods else METHOD_MAP_QLMMSE
        s_hat = np.empty((len(ds.records), n), dtype=np.complex128)
        for i, rec in enumerate(ds.records):
            res = estimators.separate_long(rec.y, bank, method, sync_window)
            s_hat[i] = res.s_hat.samples
        write_predictions(
            PredictionSet(
                n_samples=n,
                K_s=ds.params.K_s,
                K_b=ds.params.K_b,
                sir_db=sir,
                snr_db=snr,
                k_b_hat=k_map,
                s_hat=s_hat,
            ),
            config.emit_predictions,
        )
        rows += _soi_rows(s_hat, ds, config, method)
    return SweepResult(rows, comments)


def _sync_rows(k_hat, k_true, ds: Dataset, method: str) -> list[SweepRow]:
    n = ds.params.n_samples
    sir, snr = ds.params.sir_db, ds.params.snr_db
    count = len(k_true)
    acc = float(np.mean(k_hat == k_true))
    se = math.sqrt(max(acc * (1 - acc), 1e-300) / count)
    rows = [
        SweepRow(sir, snr, n, method, "sync_accuracy", acc, se, count),
        SweepRow(sir, snr, n, method, "sync_error_rate", 1 - acc, se, count),
    ]
    wrong = np.nonzero(k_hat != k_true)[0]
    if wrong.size:
        offsets = (np.asarray(k_hat)[wrong] - k_true[wrong]) % ds.params.K_b
        vals, counts = np.unique(offsets, return_counts=True)
        top = int(np.argmax(counts))
        rows.append(
            SweepRow(
                sir, snr, n, method, "mode_error_offset", float(vals[top]), 0.0, int(counts[top])
            )
        )
    return rows


def _soi_rows(s_hat: np.ndarray, ds: Dataset, config: SweepConfig, method: str) -> list[SweepRow]:
    n = ds.params.n_samples
    sir, snr = ds.params.sir_db, ds.params.snr_db
    rows = []
    if all(r.s is not None for r in ds.records):
        s_true = np.stack([r.s.samples for r in ds.records], axis=0)
        per_rec = np.sum(np.abs(s_hat - s_true) ** 2, axis=1) / n
        value, se = _mean_se(per_rec)
        rows.append(SweepRow(sir, snr, n, method, "mse", value, se, len(ds.records)))
    if all(r.bits is not None for r in ds.records):
        pulse = rrc_taps(config.rolloff, config.span_symbols, config.oversampling)
        ref_bits = np.stack([r.bits for r in ds.records], axis=0)
        errors, bits = _score_bits(
            s_hat.T, ref_bits, pulse, config.oversampling
        )
        p_hat = errors / bits
        se = math.sqrt(max(p_hat * (1 - p_hat), 1e-300) / bits)
        rows.append(SweepRow(sir, snr, n, method, "ber", p_hat, se, bits))
    return rows
