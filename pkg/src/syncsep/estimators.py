"""Signal estimators: linear, conditional-linear, posterior-mixture, and plug-in.

All estimators are pure functions of the observed window and a shared
read-only :class:`~syncsep.covariance.CovBank`:

* ``lmmse``        - linear estimate with the shift-averaged mixture covariance;
* ``lmmse_cond``   - linear estimate conditioned on an interference shift;
* ``shift_posterior`` / ``map_sync`` - Gaussian posterior over the shift and
  its argmax (ties to the lowest index);
* ``psi_stat`` / ``psi_sync`` - normalized whitened-energy statistic, zero
  mean at the true shift, and its argmin-magnitude synchronizer;
* ``map_qlmmse``   - synchronize-then-conditionally-filter plug-in;
* ``mmse``         - posterior-weighted mixture of conditional estimates,
  the exact conditional mean for Gaussian windows;
* ``separate_long``- block processing for signals longer than the bank,
  synchronizing once and advancing the shift deterministically per block.

Vector arguments may be a single window of shape ``(L,)`` or a batch of
columns ``(L, T)``; batch shapes return batched results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .covariance import CovBank, CovMatrix
from .signals import ComplexSignal

METHOD_MF = "mf-only"
METHOD_LMMSE = "lmmse"
METHOD_MMSE = "mmse"
METHOD_MAP_QLMMSE = "map-qlmmse"
METHOD_PSI_QLMMSE = "psi-qlmmse"
METHODS = (METHOD_MF, METHOD_LMMSE, METHOD_MMSE, METHOD_MAP_QLMMSE, METHOD_PSI_QLMMSE)


@dataclass
class ShiftPosterior:
    """Posterior over interference shifts; ``log_likes`` kept for diagnostics."""

    probs: np.ndarray
    log_likes: np.ndarray


@dataclass
class SeparationResult:
    s_hat: ComplexSignal
    k_b_hat: Optional[int]
    posterior: Optional[ShiftPosterior]
    method: str


def _as_columns(y) -> tuple[np.ndarray, bool]:
    arr = y.samples if isinstance(y, ComplexSignal) else np.asarray(y)
    arr = arr.astype(np.complex128, copy=False)
    if arr.ndim == 1:
        return arr[:, None], True
    if arr.ndim == 2:
        return arr, False
    raise ValueError("expected a vector (L,) or column batch (L, T)")


def _squeeze(x: np.ndarray, was_vector: bool) -> np.ndarray:
    return x[..., 0] if was_vector else x


def block_quadratics(y, bank: CovBank) -> np.ndarray:
    """Quadratic forms ``y^H C_yy(m)^{-1} y`` for every shift, shape (K_b, T)."""
    cols, _ = _as_columns(y)
    if cols.shape[0] != bank.L:
        raise ValueError(f"window length {cols.shape[0]} != bank block length {bank.L}")
    quads = np.empty((bank.K_b, cols.shape[1]))
    for m in range(bank.K_b):
        u = bank.c_yy[m].whiten(cols)
        quads[m] = np.sum(np.abs(u) ** 2, axis=0)
    return quads


def block_loglikes(y, bank: CovBank) -> np.ndarray:
    """Unnormalized Gaussian log-likelihoods ``-quad - logdet`` per shift."""
    quads = block_quadratics(y, bank)
    logdets = np.array([c.logdet for c in bank.c_yy])
    return -quads - logdets[:, None]


def _softmax_columns(log_likes: np.ndarray) -> np.ndarray:
    shifted = log_likes - np.max(log_likes, axis=0, keepdims=True)
    w = np.exp(shifted)
    return w / np.sum(w, axis=0, keepdims=True)


def shift_posterior(y, bank: CovBank) -> ShiftPosterior:
    """Posterior over the interference shift under the uniform prior."""
    cols, was_vec = _as_columns(y)
    ll = block_loglikes(cols, bank)
    if not np.all(np.isfinite(ll)):
        raise FloatingPointError("non-finite shift log-likelihood")
    probs = _softmax_columns(ll)
    return ShiftPosterior(
        probs=_squeeze(probs, was_vec), log_likes=_squeeze(ll, was_vec)
    )


def map_sync(y, bank: CovBank):
    """Most probable shift; exact ties resolve to the lowest index."""
    cols, was_vec = _as_columns(y)
    ll = block_loglikes(cols, bank)
    idx = np.argmax(ll, axis=0)
    return int(idx[0]) if was_vec else idx


def psi_stat(y, m: int, bank: CovBank):
    """Whitened-energy statistic ``(1/L) y^H C_yy(m)^{-1} y - 1``."""
    cols, was_vec = _as_columns(y)
    u = bank.c_yy[m].whiten(cols)
    psi = np.sum(np.abs(u) ** 2, axis=0) / bank.L - 1.0
    return float(psi[0]) if was_vec else psi


def psi_sync(y, bank: CovBank):
    """Shift minimizing ``|psi|``; ties resolve to the lowest index."""
    cols, was_vec = _as_columns(y)
    psi = block_quadratics(cols, bank) / bank.L - 1.0
    idx = np.argmin(np.abs(psi), axis=0)
    return int(idx[0]) if was_vec else idx


def lmmse(y, bank: CovBank) -> np.ndarray:
    """Linear estimate with the shift-averaged (unconditional) covariance."""
    cols, was_vec = _as_columns(y)
    if cols.shape[0] != bank.L:
        raise ValueError(f"window length {cols.shape[0]} != bank block length {bank.L}")
    out = bank.c_ss.entries @ bank.c_yy_avg.solve(cols)
    return _squeeze(out, was_vec)


def lmmse_cond(y, m: int, bank: CovBank) -> np.ndarray:
    """Linear estimate conditioned on interference shift ``m`` (k_s = 0)."""
    if not 0 <= m < bank.K_b:
        raise ValueError(f"shift {m} outside [0, {bank.K_b})")
    cols, was_vec = _as_columns(y)
    if cols.shape[0] != bank.L:
        raise ValueError(f"window length {cols.shape[0]} != bank block length {bank.L}")
    out = bank.c_ss.entries @ bank.c_yy[m].solve(cols)
    return _squeeze(out, was_vec)


def map_qlmmse(y, bank: CovBank) -> SeparationResult:
    """Plug-in estimator: conditional filter at the MAP shift."""
    post = shift_posterior(y, bank)
    k_hat = int(np.argmax(post.log_likes))
    s_hat = lmmse_cond(y, k_hat, bank)
    return SeparationResult(
        s_hat=ComplexSignal(s_hat),
        k_b_hat=k_hat,
        posterior=post,
        method=METHOD_MAP_QLMMSE,
    )


def mmse(
    y, bank: CovBank, soi_shifts: Optional[Sequence[CovMatrix]] = None
) -> SeparationResult:
    """Posterior-weighted mixture of conditional linear estimates.

    With ``soi_shifts`` (one SOI covariance per candidate SOI shift) the
    general double sum over both shifts is evaluated instead of the
    default k_s = 0 branch; intended for small blocks, since the pairwise
    mixture covariances are factored on the fly.
    """
    cols, was_vec = _as_columns(y)
    if soi_shifts is None:
        post = shift_posterior(cols, bank)
        acc = np.zeros_like(cols)
        for m in range(bank.K_b):
            acc += post.probs[m][None, :] * (
                bank.c_ss.entries @ bank.c_yy[m].solve(cols)
            )
        probs = _squeeze(post.probs, was_vec)
        lls = _squeeze(post.log_likes, was_vec)
        return SeparationResult(
            s_hat=ComplexSignal(_squeeze(acc, was_vec)),
            k_b_hat=None,
            posterior=ShiftPosterior(probs=probs, log_likes=lls),
            method=METHOD_MMSE,
        )

    if bank.c_vv is None:
        raise ValueError("general double-sum needs a bank with retained entries")
    k_s_count = len(soi_shifts)
    lls = np.empty((k_s_count, bank.K_b, cols.shape[1]))
    ests = {}
    for ms, css in enumerate(soi_shifts):
        for mb in range(bank.K_b):
            cyy = CovMatrix(css.entries + bank.c_vv[mb].entries, regularize=False)
            z = cyy.solve(cols)
            lls[ms, mb] = -np.sum(np.real(np.conj(cols) * z), axis=0) - cyy.logdet
            ests[(ms, mb)] = css.entries @ z
    flat = lls.reshape(k_s_count * bank.K_b, -1)
    probs = _softmax_columns(flat).reshape(k_s_count, bank.K_b, -1)
    acc = np.zeros_like(cols)
    for ms in range(k_s_count):
        for mb in range(bank.K_b):
            acc += probs[ms, mb][None, :] * ests[(ms, mb)]
    marg_b = probs.sum(axis=0)
    return SeparationResult(
        s_hat=ComplexSignal(_squeeze(acc, was_vec)),
        k_b_hat=None,
        posterior=ShiftPosterior(
            probs=_squeeze(marg_b, was_vec),
            log_likes=_squeeze(np.log(np.maximum(marg_b, 1e-300)), was_vec),
        ),
        method=METHOD_MMSE,
    )


def _advance(k: np.ndarray, offset: int, period: int) -> np.ndarray:
    return (k + offset) % period


def combined_sync_loglikes(blocks_ll: np.ndarray, block_len: int, period: int) -> np.ndarray:
    """Fuse per-block log-likelihoods into window-start-shift scores.

    ``blocks_ll[j, m]`` scores block ``j`` under block-local shift ``m``; the
    window-start hypothesis ``k`` implies block ``j`` sits at shift
    ``(k + j * block_len) mod period``.
    """
    n_blocks = blocks_ll.shape[0]
    k = np.arange(period)
    out = np.zeros(period)
    for j in range(n_blocks):
        out += blocks_ll[j, _advance(k, j * block_len, period)]
    return out


def separate_long(
    y, bank: CovBank, method: str, sync_window: int
) -> SeparationResult:
    """Estimate a long signal block by block with a single synchronization.

    The shift is estimated once from the first ``sync_window`` samples by
    fusing per-block scores with the deterministic per-block shift advance,
    then block ``j`` is processed at effective shift
    ``(k_hat + j L) mod K_b``.  A final partial block uses a cropped
    sub-bank so no samples are dropped.
    """
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    sig = y if isinstance(y, ComplexSignal) else ComplexSignal(np.asarray(y))
    n = len(sig)
    L = bank.L
    if sync_window % L != 0 or sync_window <= 0:
        raise ValueError("sync_window must be a positive multiple of the block length")
    if n < sync_window:
        raise ValueError(f"signal length {n} < sync window {sync_window}")

    needs_sync = method in (METHOD_MMSE, METHOD_MAP_QLMMSE, METHOD_PSI_QLMMSE)
    k_hat: Optional[int] = None
    posterior: Optional[ShiftPosterior] = None
    if needs_sync:
        n_sync_blocks = sync_window // L
        blocks = sig.samples[: n_sync_blocks * L].reshape(n_sync_blocks, L).T
        quads = block_quadratics(blocks, bank)  # (K_b, n_sync_blocks)
        logdets = np.array([c.logdet for c in bank.c_yy])
        lls = (-quads - logdets[:, None]).T  # (n_sync_blocks, K_b)
        combined = combined_sync_loglikes(lls, L, bank.K_b)
        posterior = ShiftPosterior(
            probs=_softmax_columns(combined[:, None])[:, 0], log_likes=combined
        )
        if method == METHOD_PSI_QLMMSE:
            psis = (quads / L - 1.0).T  # (n_sync_blocks, K_b)
            combined_psi = combined_sync_loglikes(psis, L, bank.K_b) / psis.shape[0]
            k_hat = int(np.argmin(np.abs(combined_psi)))
        else:
            k_hat = int(np.argmax(combined))

    out = np.empty(n, dtype=np.complex128)
    n_full = n // L
    for j in range(n_full):
        blk = sig.samples[j * L : (j + 1) * L]
        out[j * L : (j + 1) * L] = _estimate_block(blk, bank, method, k_hat, posterior, j * L)
    tail = n - n_full * L
    if tail:
        sub = bank.crop(tail)
        blk = sig.samples[n_full * L :]
        out[n_full * L :] = _estimate_block(blk, sub, method, k_hat, posterior, n_full * L)

    return SeparationResult(
        s_hat=ComplexSignal(out, dict(sig.meta)),
        k_b_hat=k_hat,
        posterior=posterior,
        method=method,
    )


def _estimate_block(
    blk: np.ndarray,
    bank: CovBank,
    method: str,
    k_hat: Optional[int],
    posterior: Optional[ShiftPosterior],
    offset: int,
) -> np.ndarray:
    if method == METHOD_MF:
        return blk
    if method == METHOD_LMMSE:
        return lmmse(blk, bank)
    if method in (METHOD_MAP_QLMMSE, METHOD_PSI_QLMMSE):
        return lmmse_cond(blk, (k_hat + offset) % bank.K_b, bank)
    # MMSE: weight conditional estimates by the sync-window posterior,
    # advanced to this block's position.
    acc = np.zeros_like(blk)
    for m in range(bank.K_b):
        p = posterior.probs[m]
        if p > 0.0:
            acc += p * lmmse_cond(blk, (m + offset) % bank.K_b, bank)
    return acc


def family_batch(
    Y: np.ndarray,
    bank: CovBank,
    methods: Sequence[str],
) -> dict:
    """Batched single-block estimates for Monte-Carlo sweeps.

    ``Y`` has one window per column.  Returns a dict with an ``(L, T)`` array
    per requested estimator plus ``"map_k"``/``"psi_k"`` index arrays and the
    posterior matrix ``"probs"`` of shape ``(K_b, T)``.
    """
    methods = [m.lower() for m in methods]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    out: dict = {}
    L, t = Y.shape
    need_post = any(
        m in (METHOD_MMSE, METHOD_MAP_QLMMSE, METHOD_PSI_QLMMSE) for m in methods
    )
    sel_targets = [m for m in (METHOD_MAP_QLMMSE, METHOD_PSI_QLMMSE) if m in methods]

    if METHOD_MF in methods:
        out[METHOD_MF] = Y.copy()
    if METHOD_LMMSE in methods:
        out[METHOD_LMMSE] = bank.c_ss.entries @ bank.c_yy_avg.solve(Y)
    if not need_post:
        return out

    quads = block_quadratics(Y, bank)
    logdets = np.array([c.logdet for c in bank.c_yy])
    ll = -quads - logdets[:, None]
    probs = _softmax_columns(ll)
    out["probs"] = probs
    map_k = np.argmax(ll, axis=0)
    psi_k = np.argmin(np.abs(quads / L - 1.0), axis=0)
    out["map_k"] = map_k
    out["psi_k"] = psi_k

    sel_idx = {METHOD_MAP_QLMMSE: map_k, METHOD_PSI_QLMMSE: psi_k}
    for m in sel_targets:
        out[m] = np.empty_like(Y)
    if METHOD_MMSE in methods:
        out[METHOD_MMSE] = np.zeros_like(Y)

    if METHOD_MMSE in methods:
        # One pass over all shifts serves the mixture sum and the plug-ins.
        for m in range(bank.K_b):
            x_m = bank.c_ss.entries @ bank.c_yy[m].solve(Y)
            out[METHOD_MMSE] += probs[m][None, :] * x_m
            for meth in sel_targets:
                idx = np.nonzero(sel_idx[meth] == m)[0]
                if idx.size:
                    out[meth][:, idx] = x_m[:, idx]
    else:
        for meth in sel_targets:
            for m in np.unique(sel_idx[meth]):
                idx = np.nonzero(sel_idx[meth] == m)[0]
                x_m = bank.c_ss.entries @ bank.c_yy[m].solve(Y[:, idx])
                out[meth][:, idx] = x_m
    return out
