"""Command line for training and inference against dataset files."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .predict import predict_separator, predict_sync
from .training import SepHyper, SyncHyper, train_separator, train_sync


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neuralsep")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-sync", help="train the shift classifier")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=SyncHyper.epochs)
    p.add_argument("--batch-size", type=int, default=SyncHyper.batch_size)
    p.add_argument("--lr", type=float, default=SyncHyper.lr)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("predict-sync", help="write shift predictions for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-separator", help="train the U-Net separator")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=SepHyper.epochs)
    p.add_argument("--batch-size", type=int, default=SepHyper.batch_size)
    p.add_argument("--lr", type=float, default=SepHyper.lr)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-sync", action="store_true", help="train without conditioning")
    p.add_argument("--replicate", action="store_true", help="one replica per shift")

    p = sub.add_parser("predict-separator", help="write signal estimates for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sync-model", help="synchronizer checkpoint for conditioning")
    p.add_argument("--true-shift", action="store_true", help="condition on stored labels")
    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "train-sync":
            hyper = SyncHyper(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr)
            ck = train_sync(args.dataset, args.out, hyper, seed=args.seed)
            print(f"saved {args.out} (val accuracy {ck['val_accuracy']:.4f})")
        elif args.command == "predict-sync":
            predict_sync(args.model, args.dataset, args.out)
            print(f"wrote predictions to {args.out}")
        elif args.command == "train-separator":
            hyper = SepHyper(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr)
            ck = train_separator(
                args.dataset,
                args.out,
                hyper,
                use_sync=not args.no_sync,
                replicate=args.replicate,
                seed=args.seed,
            )
            print(f"saved {args.out} (val mse {ck['val_mse_per_sample']:.4f})")
        else:
            predict_separator(
                args.model,
                args.dataset,
                args.out,
                sync_model_path=args.sync_model,
                use_true_shift=args.true_shift,
            )
            print(f"wrote predictions to {args.out}")
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
