"""Fixtures that drive the signal toolkit CLI to produce real dataset files."""

import shutil
import subprocess

import pytest

SYNCSEP = shutil.which("syncsep")

requires_syncsep = pytest.mark.skipif(
    SYNCSEP is None, reason="syncsep CLI not installed"
)


def run_syncsep(*args: str) -> subprocess.CompletedProcess:
    proc = subprocess.run(
        [SYNCSEP, *map(str, args)], capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise RuntimeError(f"syncsep {' '.join(map(str, args))} failed: {proc.stderr}")
    return proc


@pytest.fixture(scope="session")
def toy_sync_files(tmp_path_factory):
    """Small period-10 mixtures for fast synchronizer tests."""
    root = tmp_path_factory.mktemp("toy_sync")
    train = root / "train.scss"
    test = root / "test.scss"
    common = [
        "--n", "80", "--sir", "-5", "--snr", "20", "--alphabet", "digital",
        "--rolloff", "0.5", "--span", "4", "--oversampling", "4",
        "--fft", "8", "--cp", "2", "--no-components",
    ]
    run_syncsep("gen", "--out", train, "--count", 4000, "--seed", 1, *common)
    run_syncsep("gen", "--out", test, "--count", 600, "--seed", 2, *common)
    return train, test


@pytest.fixture(scope="session")
def binary_sync_files(tmp_path_factory):
    """Period-2 interference (single-subcarrier frames): trivially separable."""
    root = tmp_path_factory.mktemp("binary_sync")
    train = root / "train.scss"
    test = root / "test.scss"
    common = [
        "--n", "40", "--sir", "-5", "--snr", "20", "--alphabet", "digital",
        "--rolloff", "0.5", "--span", "4", "--oversampling", "4",
        "--fft", "1", "--cp", "1", "--no-components",
    ]
    run_syncsep("gen", "--out", train, "--count", 3000, "--seed", 3, *common)
    run_syncsep("gen", "--out", test, "--count", 400, "--seed", 4, *common)
    return train, test


@pytest.fixture(scope="session")
def toy_separator_files(tmp_path_factory):
    """Short records with stored components for separator tests."""
    root = tmp_path_factory.mktemp("toy_sep")
    train = root / "train.scss"
    test = root / "test.scss"
    common = [
        "--n", "320", "--sir", "-8", "--snr", "inf", "--alphabet", "digital",
        "--rolloff", "0.5", "--span", "4", "--oversampling", "4",
        "--fft", "8", "--cp", "2",
    ]
    run_syncsep("gen", "--out", train, "--count", 600, "--seed", 5, *common)
    run_syncsep("gen", "--out", test, "--count", 120, "--seed", 6, *common)
    return train, test
