"""Inference entry points that emit prediction files for the primary scorer."""

from __future__ import annotations

from typing import Optional

import numpy as np
import torch

from .data import MixtureSet, read_mixtures, stacked_real_imag, write_predictions
from .training import load_separator, load_sync


@torch.no_grad()
def predict_sync(model_path, dataset_path, out_path, batch: int = 512) -> np.ndarray:
    """Classify every record's interference shift and write a prediction file."""
    model = load_sync(model_path)
    ds = read_mixtures(dataset_path)
    if model.k_b != ds.K_b:
        raise ValueError(
            f"model was trained for K_b={model.k_b}, dataset has K_b={ds.K_b}"
        )
    if model.input_len != ds.n_samples:
        raise ValueError(
            f"model expects {model.input_len}-sample records, dataset has {ds.n_samples}"
        )
    x = torch.from_numpy(stacked_real_imag(ds.y))
    out = np.empty(ds.count, dtype=np.int64)
    for start in range(0, ds.count, batch):
        probs = model.probabilities(x[start : start + batch])
        out[start : start + batch] = probs.argmax(dim=-1).numpy()
    write_predictions(out_path, ds, k_b_hat=out)
    return out


@torch.no_grad()
def predict_separator(
    model_path,
    dataset_path,
    out_path,
    sync_model_path: Optional[str] = None,
    use_true_shift: bool = False,
    batch: int = 64,
) -> np.ndarray:
    """Estimate the signal of interest per record and write a prediction file.

    A conditional separator takes its shift from the synchronizer checkpoint
    (the deployed pipeline) or, for diagnostics, from the stored labels.
    """
    model = load_separator(model_path)
    ds = read_mixtures(dataset_path)
    x = torch.from_numpy(stacked_real_imag(ds.y))

    needs_shift = hasattr(model, "replicas") or getattr(model, "conditional", False)
    shifts = None
    k_b_hat = None
    if needs_shift:
        if use_true_shift:
            k_b_hat = ds.k_b.copy()
        elif sync_model_path is not None:
            sync = load_sync(sync_model_path)
            if sync.input_len > ds.n_samples:
                raise ValueError("synchronizer window longer than the records")
            xs = x[:, :, : sync.input_len].contiguous()
            k_b_hat = np.empty(ds.count, dtype=np.int64)
            for start in range(0, ds.count, 512):
                probs = sync.probabilities(xs[start : start + 512])
                k_b_hat[start : start + 512] = probs.argmax(dim=-1).numpy()
        else:
            raise ValueError("conditional separator needs a sync model or true shifts")
        shifts = torch.from_numpy(k_b_hat)

    s_hat = np.empty((ds.count, ds.n_samples), dtype=np.complex128)
    for start in range(0, ds.count, batch):
        xb = x[start : start + batch]
        est = model(xb, shifts[start : start + batch]) if shifts is not None else model(xb)
        est = est.numpy()
        s_hat[start : start + batch] = est[:, 0] + 1j * est[:, 1]
    write_predictions(out_path, ds, k_b_hat=k_b_hat, s_hat=s_hat)
    return s_hat
