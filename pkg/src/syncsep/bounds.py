"""Closed-form tail bounds for the whitened-energy statistic, and decay runs.

At the true shift the statistic ``psi = (1/N) y^H C_yy(k)^{-1} y - 1`` is a
centered, scaled chi-square with moment generating function
``E[e^{tau psi}] = (1 - tau/N)^{-N} e^{-tau}`` for ``tau < N``.  Chernoff
bounds on its tails,

    B1(t, a) = (1 - t/N)^{-N} e^{-t(1+a)}   (t < N),
    B2(t, a) = (1 + t/N)^{-N} e^{ t(1-a)}   (t > -N),

minimize over ``t`` to ``(1+a)^N e^{-Na}`` and ``(1-a)^N e^{Na}``; with the
threshold family ``a = N^{-(0.5-eps)}`` these become the superpolynomially
decaying sequences driving the synchronizer-consistency argument.  All
evaluations run in the log domain, with base-10 logs as first-class outputs
since the bounds underflow doubles near ``N ~ 1e4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .covariance import CovBank
from .estimators import map_sync, psi_sync
from .mixture import SurrogateSampler
from .seeding import DEFAULT_CHUNK, TAG_DECAY, TAG_MGF, TAG_TAIL, iter_chunks, rng_for
from .signals import OfdmSpec, QpskSpec


@dataclass(frozen=True)
class ChernoffParams:
    n: int
    tau: float
    a: float
    eps: float = 0.1

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.a <= 0:
            raise ValueError("threshold a must be positive")
        if not 0.0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 0.5)")


def mgf_psi_analytic(tau: float, n: int) -> float:
    """Closed-form ``E[e^{tau psi}]`` at the true shift, valid for tau < n."""
    if tau >= n:
        raise ValueError(f"tau must be < n (got tau={tau}, n={n})")
    return math.exp(-n * math.log1p(-tau / n) - tau)


def chernoff_b1(params: ChernoffParams) -> float:
    if params.tau >= params.n:
        raise ValueError("B1 requires tau < n")
    return math.exp(
        -params.n * math.log1p(-params.tau / params.n) - params.tau * (1.0 + params.a)
    )


def chernoff_b2(params: ChernoffParams) -> float:
    if params.tau <= -params.n:
        raise ValueError("B2 requires tau > -n")
    return math.exp(
        -params.n * math.log1p(params.tau / params.n) + params.tau * (1.0 - params.a)
    )


def chernoff_b1_min(n: int, a: float) -> float:
    """``min_t B1(t, a) = (1+a)^n e^{-na}``, the upper-tail bound."""
    if a <= 0:
        raise ValueError("a must be positive")
    return math.exp(n * (math.log1p(a) - a))


def chernoff_b2_min(n: int, a: float) -> float:
    """``min_t B2(t, a) = (1-a)^n e^{na}``, the lower-tail bound (0 < a < 1)."""
    if not 0.0 < a < 1.0:
        raise ValueError("a must lie in (0, 1)")
    return math.exp(n * (math.log1p(-a) + a))


class ChernoffOpt(NamedTuple):
    b1_star: float
    b2_star: float
    log10_b1_star: float
    log10_b2_star: float


def chernoff_opt(n: int, eps: float) -> ChernoffOpt:
    """Optimized bounds at the threshold ``a = n^{-(0.5 - eps)}``."""
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    a = float(n) ** (-(0.5 - eps))
    log_b1 = n * (math.log1p(a) - a)
    log_b2 = n * (math.log1p(-a) + a) if a < 1.0 else -math.inf
    ln10 = math.log(10.0)
    return ChernoffOpt(
        b1_star=math.exp(log_b1) if log_b1 > -745 else 0.0,
        b2_star=math.exp(log_b2) if log_b2 > -745 else 0.0,
        log10_b1_star=log_b1 / ln10,
        log10_b2_star=log_b2 / ln10,
    )


def wilson_interval(errors: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial rate; informative even at 0 errors."""
    if trials < 1:
        raise ValueError("trials must be positive")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class DecayCurve:
    n_values: list[int]
    err_prob: list[float]
    conf: list[float]
    conf_lo: list[float]
    conf_hi: list[float]
    method: str
    trials: int


def _true_shift_psi(
    bank: CovBank,
    qpsk: QpskSpec,
    ofdm: OfdmSpec,
    trials: int,
    seed: int,
    tag: int,
    chunk: int = DEFAULT_CHUNK,
):
    """Yield batches of the statistic evaluated at the true shift."""
    n = bank.L
    sampler = SurrogateSampler(qpsk, ofdm, n, bank.sir_db, bank.snr_db)
    for ci, size in iter_chunks(trials, chunk):
        rng = rng_for(seed, tag, n, ci)
        k_b = rng.integers(0, bank.K_b, size=size)
        y, _ = sampler.draw(k_b, rng)
        psi = np.empty(size)
        for k in np.unique(k_b):
            idx = np.nonzero(k_b == k)[0]
            u = bank.c_yy[int(k)].whiten(y[:, idx])
            psi[idx] = np.sum(np.abs(u) ** 2, axis=0) / n - 1.0
        yield psi


def psi_true_samples(
    bank: CovBank,
    qpsk: QpskSpec,
    ofdm: OfdmSpec,
    trials: int,
    seed: int,
) -> np.ndarray:
    """All true-shift statistic draws at once, for multi-use estimates."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return np.concatenate(
        list(_true_shift_psi(bank, qpsk, ofdm, trials, seed, TAG_MGF))
    )


def empirical_mgf(
    bank: CovBank,
    qpsk: QpskSpec,
    ofdm: OfdmSpec,
    tau: float,
    trials: int,
    seed: int,
) -> tuple[float, float]:
    """Monte-Carlo estimate and standard error of ``E[e^{tau psi}]``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    total = 0.0
    total_sq = 0.0
    for psi in _true_shift_psi(bank, qpsk, ofdm, trials, seed, TAG_MGF):
        v = np.exp(tau * psi)
        total += float(np.sum(v))
        total_sq += float(np.sum(v * v))
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    return mean, math.sqrt(var / trials)


def tail_rates(
    bank: CovBank,
    qpsk: QpskSpec,
    ofdm: OfdmSpec,
    a_values: Sequence[float],
    trials: int,
    seed: int,
) -> list[dict]:
    """Empirical ``P[psi > a]`` and ``P[psi < -a]`` with standard errors."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hi = np.zeros(len(a_values), dtype=np.int64)
    lo = np.zeros(len(a_values), dtype=np.int64)
    for psi in _true_shift_psi(bank, qpsk, ofdm, trials, seed, TAG_TAIL, chunk=8192):
        for i, a in enumerate(a_values):
            hi[i] += int(np.sum(psi > a))
            lo[i] += int(np.sum(psi < -a))
    out = []
    for i, a in enumerate(a_values):
        p_hi = hi[i] / trials
        p_lo = lo[i] / trials
        out.append(
            {
                "a": float(a),
                "p_upper": p_hi,
                "se_upper": math.sqrt(max(p_hi * (1 - p_hi), 1e-300) / trials),
                "p_lower": p_lo,
                "se_lower": math.sqrt(max(p_lo * (1 - p_lo), 1e-300) / trials),
                "b1_min": chernoff_b1_min(bank.L, a),
                "b2_min": chernoff_b2_min(bank.L, a),
            }
        )
    return out


def sync_decay_experiment(
    bank_builder: Callable[[int], CovBank],
    n_values: Sequence[int],
    trials: int,
    seed: int,
    qpsk: QpskSpec,
    ofdm: OfdmSpec,
    method: str = "map",
) -> DecayCurve:
    """Empirical synchronizer error probability versus window length.

    For each window length, mixtures with uniform shifts are drawn and the
    chosen synchronizer (``map`` or ``psi``) runs on the full window; error
    rates come with Wilson confidence intervals.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if method not in ("map", "psi"):
        raise ValueError(f"unknown synchronizer {method!r}")
    errs = []
    los = []
    his = []
    for n in n_values:
        bank = bank_builder(int(n))
        sampler = SurrogateSampler(qpsk, ofdm, int(n), bank.sir_db, bank.snr_db)
        wrong = 0
        chunk = max(64, min(DEFAULT_CHUNK, (1 << 22) // max(n, 1)))
        for ci, size in iter_chunks(trials, chunk):
            rng = rng_for(seed, TAG_DECAY, n, ci)
            k_b = rng.integers(0, bank.K_b, size=size)
            y, _ = sampler.draw(k_b, rng)
            k_hat = map_sync(y, bank) if method == "map" else psi_sync(y, bank)
            wrong += int(np.sum(k_hat != k_b))
        lo, hi = wilson_interval(wrong, trials)
        errs.append(wrong / trials)
        los.append(lo)
        his.append(hi)
    return DecayCurve(
        n_values=[int(n) for n in n_values],
        err_prob=errs,
        conf=[(h - l) / 2 for l, h in zip(los, his)],
        conf_lo=los,
        conf_hi=his,
        method=method,
        trials=trials,
    )
