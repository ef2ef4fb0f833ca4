"""Command-line interface.

Subcommands: ``gen`` (dataset generation), ``cov`` (covariance-bank cache),
``sweep-mse``, ``sweep-ber``, ``theorem1``, ``sync-eval``, ``bounds-check``.
Flags override entries of a flat ``key = value`` config file; every run logs
the resolved configuration and master seed as ``#`` comments in its output.
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from . import bench, bounds
from .bench import SweepConfig
from .covariance import build_bank, write_bank
from .estimators import METHOD_LMMSE, METHOD_MAP_QLMMSE, METHOD_MF
from .mixture import MixtureParams, gen_dataset, read_dataset, write_dataset
from .signals import GAUSSIAN, OfdmSpec, QpskSpec

_VALUE_FLAGS = {
    "--sir",
    "--snr",
    "--n",
    "--kb",
    "--seed",
    "--trials",
    "--count",
    "--workers",
    "--block-len",
    "--sync-window",
    "--l",
    "--eps",
    "--eps-scale",
    "--rolloff",
}


def _fuse_negative_values(argv: Sequence[str]) -> list[str]:
    """Join ``--flag -10:-2:2`` into ``--flag=-10:-2:2`` so argparse accepts it."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            nxt = argv[i + 1]
            if len(nxt) > 1 and (nxt[1].isdigit() or nxt[1] == "."):
                out.append(f"{tok}={nxt}")
                i += 2
                continue
        out.append(tok)
        i += 1
    return out


def _parse_list(text: str, cast=float) -> tuple:
    """Parse ``a,b,c`` lists or inclusive ``start:stop:step`` ranges."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step == 0:
            raise ValueError("range step must be nonzero")
        count = int(round((stop - start) / step))
        values = [start + i * step for i in range(count + 1)]
        return tuple(cast(v) for v in values)
    return tuple(cast(_parse_scalar(v)) for v in text.split(","))


def _parse_scalar(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return float("inf")
    return float(text)


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key = value")
            key, val = line.split("=", 1)
            values[key.strip().replace("_", "-")] = val.strip()
    return values


def _merged(args: argparse.Namespace, key: str, fallback):
    """Flag value if given, else config-file value, else fallback."""
    flag_val = getattr(args, key.replace("-", "_"), None)
    if flag_val is not None:
        return flag_val
    cfg = getattr(args, "_config_values", {})
    if key in cfg:
        return cfg[key]
    return fallback


def _common_waveform_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rolloff", type=float, help="RRC roll-off factor")
    p.add_argument("--span", type=int, dest="span", help="RRC span in symbols")
    p.add_argument("--oversampling", type=int, help="samples per SOI symbol")
    p.add_argument("--fft", type=int, dest="fft", help="OFDM FFT size")
    p.add_argument("--cp", type=int, dest="cp", help="OFDM cyclic prefix length")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syncsep",
        description="mixture generation, covariance banks, estimator sweeps, and bound checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate and store a labeled mixture dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--n", type=str, default="10240")
    p.add_argument("--sir", type=str, default="0")
    p.add_argument("--snr", type=str, default="20")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alphabet", choices=["gaussian", "digital"], default="digital")
    p.add_argument("--ks-mode", choices=["fixed-zero", "uniform"], default="fixed-zero")
    p.add_argument("--kb-mode", choices=["uniform", "fixed"], default="uniform")
    p.add_argument("--kb", type=int, default=None, help="fixed interference shift")
    p.add_argument(
        "--no-components",
        action="store_true",
        help="store only mixtures and labels (smaller files for sync training)",
    )
    _common_waveform_flags(p)

    p = sub.add_parser("cov", help="build and cache a covariance bank")
    p.add_argument("--out", required=True)
    p.add_argument("--l", type=int, default=320, help="block length")
    p.add_argument("--sir", type=str, default="0")
    p.add_argument("--snr", type=str, default="20")
    p.add_argument("--eps-scale", type=float, default=1e-9)
    p.add_argument("--source", choices=["analytic", "dataset"], default="analytic")
    p.add_argument("--dataset", help="dataset path for the empirical route")
    _common_waveform_flags(p)

    for name, help_text in [
        ("sweep-mse", "estimator MSE over an SIR/SNR grid (Gaussian surrogates)"),
        ("sweep-ber", "demodulated BER over an SIR grid (discrete alphabets)"),
        ("theorem1", "MSE ratio, regret, and identity check over window lengths"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out")
        p.add_argument("--sir", type=str)
        p.add_argument("--snr", type=str)
        p.add_argument("--n", type=str)
        p.add_argument("--methods", type=str)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--block-len", type=int)
        p.add_argument("--sync-window", type=int)
        if name == "sweep-ber":
            p.add_argument(
                "--cov-source",
                choices=["analytic", "empirical"],
                help="aligned-statistics source (default: analytic model covariances)",
            )
            p.add_argument("--train-records", type=int)
        _common_waveform_flags(p)

    p = sub.add_parser("sync-eval", help="score synchronizer/separator predictions")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictions")
    p.add_argument("--emit-predictions", help="write internal baseline predictions here")
    p.add_argument("--method", default=METHOD_MAP_QLMMSE, help="baseline separator to emit")
    p.add_argument("--label", default="external")
    p.add_argument("--out")
    p.add_argument("--block-len", type=int, default=320)
    p.add_argument("--sync-window", type=int, default=640)
    _common_waveform_flags(p)

    p = sub.add_parser("bounds-check", help="synchronizer decay curve with tail bounds")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--out")
    p.add_argument("--n", type=str)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--sir", type=str)
    p.add_argument("--snr", type=str)
    p.add_argument("--method", choices=["map", "psi"])
    p.add_argument("--eps", type=float, help="threshold exponent for the bound family")
    _common_waveform_flags(p)
    return parser


def _sweep_config(args: argparse.Namespace, alphabet: str) -> SweepConfig:
    methods = _merged(args, "methods", None)
    if isinstance(methods, str):
        methods = tuple(m.strip() for m in methods.split(","))
    defaults = {
        "sweep-mse": ("lmmse", "map-qlmmse", "psi-qlmmse", "mmse"),
        "sweep-ber": (METHOD_MF, METHOD_LMMSE, METHOD_MAP_QLMMSE),
        "theorem1": ("mmse", "map-qlmmse"),
    }
    sir = _merged(args, "sir", "0")
    snr = _merged(args, "snr", "20")
    n = _merged(args, "n", "320" if args.command != "sweep-ber" else "10240")
    return SweepConfig(
        sir_db=_parse_list(str(sir)),
        snr_db=_parse_list(str(snr)),
        n=tuple(int(v) for v in _parse_list(str(n), cast=float)),
        methods=methods or defaults.get(args.command, (METHOD_MAP_QLMMSE,)),
        trials=int(_merged(args, "trials", 1000)),
        seed=int(_merged(args, "seed", 0)),
        block_len=int(_merged(args, "block-len", 320)),
        sync_window=int(_merged(args, "sync-window", 640)),
        workers=int(_merged(args, "workers", 1)),
        alphabet=alphabet,
        rolloff=float(_merged(args, "rolloff", 0.5)),
        span_symbols=int(_merged(args, "span", 8)),
        oversampling=int(_merged(args, "oversampling", 16)),
        fft_size=int(_merged(args, "fft", 64)),
        cp_len=int(_merged(args, "cp", 16)),
        out=_merged(args, "out", None),
        cov_source=str(_merged(args, "cov-source", "analytic")),
        train_records=int(_merged(args, "train-records", 1200)),
    )


def _cmd_gen(args: argparse.Namespace) -> int:
    alphabet = args.alphabet
    qpsk = QpskSpec(
        rolloff=args.rolloff if args.rolloff is not None else 0.5,
        span_symbols=args.span or 8,
        oversampling=args.oversampling or 16,
        alphabet=GAUSSIAN if alphabet == "gaussian" else "qpsk",
    )
    ofdm = OfdmSpec(
        fft_size=args.fft or 64,
        cp_len=args.cp if args.cp is not None else 16,
        alphabet=GAUSSIAN if alphabet == "gaussian" else "qam16",
    )
    params = MixtureParams(
        n_samples=int(_parse_scalar(args.n)),
        sir_db=_parse_scalar(args.sir),
        snr_db=_parse_scalar(args.snr),
        k_s_mode=args.ks_mode,
        k_b_mode=args.kb_mode,
        k_b_fixed=args.kb,
        K_s=qpsk.cyclic_period,
        K_b=ofdm.cyclic_period,
    )
    ds = gen_dataset(qpsk, ofdm, params, args.count, args.seed)
    if args.no_components:
        for rec in ds.records:
            rec.s = None
            rec.b = None
    write_dataset(ds, args.out)
    print(f"wrote {args.count} records to {args.out}")
    return 0


def _cmd_cov(args: argparse.Namespace) -> int:
    qpsk = QpskSpec(
        rolloff=args.rolloff if args.rolloff is not None else 0.5,
        span_symbols=args.span or 8,
        oversampling=args.oversampling or 16,
        alphabet=GAUSSIAN,
    )
    ofdm = OfdmSpec(fft_size=args.fft or 64, cp_len=args.cp if args.cp is not None else 16, alphabet=GAUSSIAN)
    sir = _parse_scalar(args.sir)
    snr = _parse_scalar(args.snr)
    if args.source == "dataset":
        if not args.dataset:
            raise ValueError("--source dataset requires --dataset")
        ds = read_dataset(args.dataset)
        bank = build_bank(ds, ds, sir, snr, args.l, ds.params.K_b, args.eps_scale)
    else:
        bank = build_bank(qpsk, ofdm, sir, snr, args.l, ofdm.cyclic_period, args.eps_scale)
    write_bank(bank, args.out)
    print(f"wrote covariance bank (L={args.l}, K_b={bank.K_b}) to {args.out}")
    return 0


def _cmd_bounds_check(args: argparse.Namespace) -> int:
    n_values = tuple(
        int(v) for v in _parse_list(str(_merged(args, "n", "80,160,320,640")), cast=float)
    )
    trials = int(_merged(args, "trials", 2000))
    seed = int(_merged(args, "seed", 0))
    sir = _parse_scalar(str(_merged(args, "sir", "0")))
    snr = _parse_scalar(str(_merged(args, "snr", "20")))
    method = _merged(args, "method", "map")
    eps = float(_merged(args, "eps", 0.1))
    qpsk = QpskSpec(
        rolloff=float(_merged(args, "rolloff", 0.5)),
        span_symbols=int(_merged(args, "span", 8)),
        oversampling=int(_merged(args, "oversampling", 16)),
        alphabet=GAUSSIAN,
    )
    ofdm = OfdmSpec(
        fft_size=int(_merged(args, "fft", 64)),
        cp_len=int(_merged(args, "cp", 16)),
        alphabet=GAUSSIAN,
    )

    def builder(n: int):
        return build_bank(
            qpsk, ofdm, sir, snr, n, ofdm.cyclic_period, keep_entries=False
        )

    curve = bounds.sync_decay_experiment(
        builder, n_values, trials, seed, qpsk, ofdm, method=method
    )
    lines = [
        "# command = bounds-check",
        f"# seed = {seed}",
        f"# trials = {trials}",
        f"# sir_db = {sir}",
        f"# snr_db = {snr}",
        f"# method = {method}",
        f"# eps = {eps}",
        "n,err_prob,conf_lo,conf_hi,log10_b1_star,log10_b2_star",
    ]
    for i, n in enumerate(curve.n_values):
        opt = bounds.chernoff_opt(n, eps)
        lines.append(
            f"{n},{curve.err_prob[i]:.12g},{curve.conf_lo[i]:.12g},"
            f"{curve.conf_hi[i]:.12g},{opt.log10_b1_star:.12g},{opt.log10_b2_star:.12g}"
        )
    text = "\n".join(lines) + "\n"
    out = _merged(args, "out", None)
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_sync_eval(args: argparse.Namespace) -> int:
    config = SweepConfig(
        sir_db=(0.0,),
        snr_db=(20.0,),
        n=(1,),
        methods=(args.method,),
        trials=1,
        seed=0,
        block_len=args.block_len,
        sync_window=args.sync_window,
        alphabet=GAUSSIAN,
        rolloff=args.rolloff if args.rolloff is not None else 0.5,
        span_symbols=args.span or 8,
        oversampling=args.oversampling or 16,
        fft_size=args.fft or 64,
        cp_len=args.cp if args.cp is not None else 16,
        dataset_path=args.dataset,
        predictions_path=args.predictions,
        emit_predictions=args.emit_predictions,
        label=args.label,
    )
    result = bench.run_sync_eval(config)
    _emit(result, args.out)
    return 0


def _emit(result: bench.SweepResult, out: Optional[str]) -> None:
    if out:
        result.to_csv(out)
    else:
        sys.stdout.write(result.csv_text())


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(_fuse_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if getattr(args, "config", None):
            args._config_values = _read_config_file(args.config)
        else:
            args._config_values = {}
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "cov":
            return _cmd_cov(args)
        if args.command == "bounds-check":
            return _cmd_bounds_check(args)
        if args.command == "sync-eval":
            return _cmd_sync_eval(args)
        if args.command == "sweep-mse":
            config = _sweep_config(args, GAUSSIAN)
            result = bench.run_mse_sweep(config)
        elif args.command == "sweep-ber":
            config = _sweep_config(args, "digital")
            result = bench.run_ber_sweep(config)
        else:
            config = _sweep_config(args, GAUSSIAN)
            result = bench.run_theorem1_check(config)
        _emit(result, config.out)
        return 0
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
