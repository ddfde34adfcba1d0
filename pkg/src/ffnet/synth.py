"""Deterministic synthetic datasets for demos and offline tests.

Each class gets a fixed sparse template in [0, 1]^d; samples are the
template plus clipped Gaussian noise. Easy enough that a small network
separates it in a few epochs, which keeps the end-to-end tests fast without
shipping any real data.
"""

from __future__ import annotations

import zlib

import numpy as np

from .data import Dataset, N_LABELS
from .linalg import make_rng


def class_templates(
    d: int, n_labels: int = N_LABELS, seed: int = 0, active_fraction: float = 0.25
) -> np.ndarray:
    rng = make_rng(seed)
    n_active = max(1, int(d * active_fraction))
    templates = np.zeros((n_labels, d))
    for c in range(n_labels):
        support = rng.choice(d, size=n_active, replace=False)
        templates[c, support] = rng.uniform(0.5, 1.0, size=n_active)
    return templates


def synthetic_dataset(
    n: int,
    d: int = 64,
    n_labels: int = N_LABELS,
    seed: int = 0,
    noise: float = 0.12,
    split: str = "train",
    name: str = "synthetic",
) -> Dataset:
    """``n`` noisy template samples with balanced-ish random labels.

    The class templates depend only on (d, n_labels, seed), so train and
    test splits built with different draw seeds share the same concepts.
    """
    templates = class_templates(d, n_labels, seed)
    # crc32 keeps the stream split-dependent without Python's salted hash()
    rng = np.random.default_rng([seed, zlib.crc32(split.encode()), n])
    labels = rng.integers(0, n_labels, size=n)
    images = templates[labels] + noise * rng.standard_normal((n, d))
    return Dataset(np.clip(images, 0.0, 1.0), labels, name=name, split=split)


def synthetic_pair(
    n_train: int,
    n_test: int,
    d: int = 64,
    n_labels: int = N_LABELS,
    seed: int = 0,
    noise: float = 0.12,
) -> tuple[Dataset, Dataset]:
    train = synthetic_dataset(n_train, d, n_labels, seed, noise, split="train")
    test = synthetic_dataset(n_test, d, n_labels, seed, noise, split="test")
    return train, test
