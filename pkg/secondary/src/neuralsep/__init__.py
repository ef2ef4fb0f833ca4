"""Data-driven synchronizer and separator for single-channel signal mixtures.

Trains a convolutional shift classifier and a 1-D U-Net separator on the
binary dataset files produced by the ``syncsep`` toolkit, and writes its
predictions back in the shared container format so the toolkit's scorer can
evaluate them.  The two packages interact only through those files.
"""

from .data import FormatError, MixtureSet, read_mixtures, write_predictions
from .models import ReplicatedUNet, SyncNet, UNet1d
from .predict import predict_separator, predict_sync
from .training import (
    SepHyper,
    SyncHyper,
    load_separator,
    load_sync,
    train_separator,
    train_sync,
)

__version__ = "0.1.0"
