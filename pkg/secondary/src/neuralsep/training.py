"""Seeded CPU training loops and checkpoint handling.

Datasets are loaded fully into memory (desk scale), batching uses a seeded
generator, and checkpoints carry the resolved architecture and training
configuration so prediction can rebuild the exact model.  Runs are
reproducible on CPU up to library-version differences; the achieved
validation metric is stored in the checkpoint for reference.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
import torch

from .data import MixtureSet, read_mixtures, stacked_real_imag
from .models import ReplicatedUNet, SyncNet, UNet1d


@dataclass
class SyncHyper:
    epochs: int = 6
    batch_size: int = 256
    lr: float = 1.5e-3
    val_fraction: float = 0.1
    corr_lag: int = 64
    pair_channels: int = 16
    wide_kernel: int = 97
    wide_channels: int = 16
    head_width: int = 48


@dataclass
class SepHyper:
    epochs: int = 6
    batch_size: int = 24
    lr: float = 2e-3
    val_fraction: float = 0.1
    first_kernel: int = 101
    base: int = 14
    depth: int = 3
    embed_dim: int = 24


def _split(count: int, val_fraction: float, rng: np.random.Generator):
    order = rng.permutation(count)
    n_val = max(1, int(count * val_fraction))
    return order[n_val:], order[:n_val]


def train_sync(
    dataset_path,
    out_path,
    hyper: Optional[SyncHyper] = None,
    seed: int = 0,
    log=print,
) -> dict:
    """Train the shift classifier on a labeled dataset file."""
    hyper = hyper or SyncHyper()
    ds = read_mixtures(dataset_path)
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)

    x = torch.from_numpy(stacked_real_imag(ds.y))
    labels = torch.from_numpy(ds.k_b)
    train_idx, val_idx = _split(ds.count, hyper.val_fraction, rng)

    config = {
        "input_len": ds.n_samples,
        "k_b": ds.K_b,
        "corr_lag": hyper.corr_lag,
        "pair_channels": hyper.pair_channels,
        "wide_kernel": hyper.wide_kernel,
        "wide_channels": hyper.wide_channels,
        "head_width": hyper.head_width,
    }
    model = SyncNet(**config)
    opt = torch.optim.Adam(model.parameters(), lr=hyper.lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=hyper.epochs)
    loss_fn = torch.nn.CrossEntropyLoss()

    for epoch in range(hyper.epochs):
        model.train()
        order = rng.permutation(train_idx)
        total = 0.0
        for start in range(0, order.size, hyper.batch_size):
            idx = order[start : start + hyper.batch_size]
            opt.zero_grad()
            logits = model(x[idx])
            loss = loss_fn(logits, labels[idx])
            loss.backward()
            opt.step()
            total += loss.item() * idx.size
        sched.step()
        acc = _sync_accuracy(model, x, labels, val_idx)
        log(f"epoch {epoch + 1}/{hyper.epochs}: loss {total / order.size:.4f} val acc {acc:.4f}")

    checkpoint = {
        "kind": "sync",
        "state": model.state_dict(),
        "config": config,
        "hyper": asdict(hyper),
        "seed": seed,
        "val_accuracy": acc,
    }
    torch.save(checkpoint, out_path)
    return checkpoint


@torch.no_grad()
def _sync_accuracy(model, x, labels, idx, batch: int = 512) -> float:
    model.eval()
    hits = 0
    for start in range(0, idx.size, batch):
        sel = idx[start : start + batch]
        hits += int((model(x[sel]).argmax(dim=-1) == labels[sel]).sum())
    return hits / idx.size


def load_sync(path) -> SyncNet:
    ck = torch.load(path, map_location="cpu", weights_only=True)
    if ck.get("kind") != "sync":
        raise ValueError(f"{path} is not a synchronizer checkpoint")
    model = SyncNet(**ck["config"])
    model.load_state_dict(ck["state"])
    model.eval()
    return model


def train_separator(
    dataset_path,
    out_path,
    hyper: Optional[SepHyper] = None,
    use_sync: bool = True,
    replicate: bool = False,
    seed: int = 0,
    log=print,
) -> dict:
    """Train the separator; with ``use_sync`` records are routed by their
    true shift label (conditional separation)."""
    hyper = hyper or SepHyper()
    ds = read_mixtures(dataset_path)
    if ds.s is None:
        raise ValueError("separator training needs stored reference signals")
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)

    x = torch.from_numpy(stacked_real_imag(ds.y))
    target = torch.from_numpy(stacked_real_imag(ds.s))
    shifts = torch.from_numpy(ds.k_b)
    train_idx, val_idx = _split(ds.count, hyper.val_fraction, rng)

    kwargs = dict(
        input_len=ds.n_samples,
        first_kernel=hyper.first_kernel,
        base=hyper.base,
        depth=hyper.depth,
    )
    if use_sync and replicate:
        model: torch.nn.Module = ReplicatedUNet(ds.K_b, **kwargs)
    else:
        model = UNet1d(
            k_b=ds.K_b, conditional=use_sync, embed_dim=hyper.embed_dim, **kwargs
        )
    opt = torch.optim.Adam(model.parameters(), lr=hyper.lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=hyper.epochs)

    for epoch in range(hyper.epochs):
        model.train()
        order = rng.permutation(train_idx)
        total = 0.0
        for start in range(0, order.size, hyper.batch_size):
            idx = order[start : start + hyper.batch_size]
            opt.zero_grad()
            est = model(x[idx], shifts[idx]) if use_sync else model(x[idx])
            loss = torch.mean((est - target[idx]) ** 2)
            loss.backward()
            opt.step()
            total += loss.item() * idx.size
        sched.step()
        val = _separator_mse(model, x, target, shifts if use_sync else None, val_idx)
        log(f"epoch {epoch + 1}/{hyper.epochs}: loss {total / order.size:.4f} val mse {val:.4f}")

    checkpoint = {
        "kind": "separator",
        "state": model.state_dict(),
        "config": {
            "input_len": ds.n_samples,
            "k_b": ds.K_b,
            "first_kernel": hyper.first_kernel,
            "base": hyper.base,
            "depth": hyper.depth,
            "embed_dim": hyper.embed_dim,
            "use_sync": use_sync,
            "replicate": replicate,
        },
        "hyper": asdict(hyper),
        "seed": seed,
        "val_mse_per_sample": val,
    }
    torch.save(checkpoint, out_path)
    return checkpoint


@torch.no_grad()
def _separator_mse(model, x, target, shifts, idx, batch: int = 64) -> float:
    """Per-complex-sample squared error (both real channels summed)."""
    model.eval()
    total = 0.0
    for start in range(0, idx.size, batch):
        sel = idx[start : start + batch]
        est = model(x[sel], shifts[sel]) if shifts is not None else model(x[sel])
        total += float(torch.sum((est - target[sel]) ** 2))
    return total / (idx.size * x.shape[-1])


def load_separator(path) -> torch.nn.Module:
    ck = torch.load(path, map_location="cpu", weights_only=True)
    if ck.get("kind") != "separator":
        raise ValueError(f"{path} is not a separator checkpoint")
    cfg = ck["config"]
    kwargs = dict(
        input_len=cfg["input_len"],
        first_kernel=cfg["first_kernel"],
        base=cfg["base"],
        depth=cfg["depth"],
    )
    if cfg["use_sync"] and cfg["replicate"]:
        model: torch.nn.Module = ReplicatedUNet(cfg["k_b"], **kwargs)
    else:
        model = UNet1d(
            k_b=cfg["k_b"],
            conditional=cfg["use_sync"],
            embed_dim=cfg["embed_dim"],
            **kwargs,
        )
    model.load_state_dict(ck["state"])
    model.eval()
    return model
