"""Dataset ingestion, label linking, and negative sampling.

On-disk formats
---------------
IDX (MNIST / Fashion-MNIST): big-endian, magic 0x00000803 for image files
with dims (n, rows, cols) and 0x00000801 for label files with dim (n),
followed by unsigned bytes. Gzip-compressed files are detected by their
leading 0x1f 0x8b bytes.

CIFAR-10 binary batches: a flat sequence of 3073-byte records, one label
byte followed by 3072 pixel bytes in channel-major (CHW) order.

Pixels are scaled to [0, 1]. A "linked" input is the flattened sample with a
10-dim one-hot label block appended after the pixels, so MNIST-sized inputs
become 794-dim.
"""

from __future__ import annotations

import gzip
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError

N_LABELS = 10

# Flattened dimension required for each known dataset name; other names are
# allowed (synthetic data) and skip the check.
DATASET_DIMS = {"mnist": 784, "fashion_mnist": 784, "cifar10": 3072}

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class Dataset:
    images: np.ndarray  # (n, d) float64 in [0, 1]
    labels: np.ndarray  # (n,) int64 in 0..9
    name: str
    split: str

    def __post_init__(self) -> None:
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 2:
            raise DataFormatError(f"images must be 2-D, got shape {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise DataFormatError(
                f"label count {self.labels.shape} does not match "
                f"{self.images.shape[0]} images"
            )
        expected = DATASET_DIMS.get(self.name)
        if expected is not None and self.n > 0 and self.d != expected:
            raise DataFormatError(
                f"{self.name} images must have {expected} pixels, got {self.d}"
            )
        if self.n > 0:
            lo, hi = float(self.images.min()), float(self.images.max())
            if lo < 0.0 or hi > 1.0:
                raise DataFormatError(f"pixel values outside [0, 1]: [{lo}, {hi}]")
            if self.labels.min() < 0 or self.labels.max() >= N_LABELS:
                raise DataFormatError("labels outside 0..9")

    @property
    def n(self) -> int:
        return self.images.shape[0]

    @property
    def d(self) -> int:
        return self.images.shape[1]

    def subset(self, n: int) -> "Dataset":
        """First ``n`` samples (deterministic)."""
        return Dataset(self.images[:n], self.labels[:n], self.name, self.split)


def _open_maybe_gzip(path):
    with open(path, "rb") as probe:
        head = probe.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_idx(path, expected_magic: int, what: str) -> np.ndarray:
    path = Path(path)
    try:
        with _open_maybe_gzip(path) as handle:
            raw = handle.read()
    except (OSError, EOFError) as exc:
        raise DataFormatError(f"{what} file {path}: unreadable ({exc})") from exc
    if len(raw) < 4:
        raise DataFormatError(f"{what} file {path}: truncated before magic")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise DataFormatError(
            f"{what} file {path}: expected magic 0x{expected_magic:08x}, "
            f"found 0x{magic:08x}"
        )
    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise DataFormatError(f"{what} file {path}: truncated dimension header")
    dims = struct.unpack(f">{ndim}I", raw[4:header_len])
    expected_items = int(np.prod(dims))
    payload = np.frombuffer(raw, dtype=np.uint8, offset=header_len)
    if payload.size != expected_items:
        raise DataFormatError(
            f"{what} file {path}: expected {expected_items} data bytes, "
            f"found {payload.size}"
        )
    return payload.reshape(dims)


def load_idx(images_path, labels_path, name: str = "mnist", split: str = "train") -> Dataset:
    """Parse an IDX image/label file pair into a Dataset."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC, "images")
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC, "labels")
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"image/label count mismatch: {images.shape[0]} images vs "
            f"{labels.shape[0]} labels"
        )
    n = images.shape[0]
    flat = images.reshape(n, -1).astype(np.float64) / 255.0
    return Dataset(flat, labels.astype(np.int64), name=name, split=split)


def write_idx(path, array: np.ndarray) -> None:
    """Inverse of :func:`_read_idx` for uint8 arrays; gzips when path ends .gz."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    header = struct.pack(">I", magic) + struct.pack(
        f">{array.ndim}I", *array.shape
    )
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as handle:
        handle.write(header)
        handle.write(array.tobytes())


CIFAR_RECORD_BYTES = 3073  # 1 label byte + 32*32*3 pixels


def load_cifar_bin(batch_paths, split: str = "train") -> Dataset:
    """Concatenate CIFAR-10 binary batch files into one Dataset."""
    images_parts = []
    labels_parts = []
    for path in batch_paths:
        raw = Path(path).read_bytes()
        if len(raw) == 0:
            warnings.warn(f"CIFAR batch {path} is empty", stacklevel=2)
            continue
        if len(raw) % CIFAR_RECORD_BYTES != 0:
            raise DataFormatError(
                f"CIFAR batch {path}: size {len(raw)} is not a multiple of "
                f"{CIFAR_RECORD_BYTES}"
            )
        records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        labels_parts.append(records[:, 0].astype(np.int64))
        images_parts.append(records[:, 1:].astype(np.float64) / 255.0)
    if not images_parts:
        return Dataset(
            np.zeros((0, CIFAR_RECORD_BYTES - 1)),
            np.zeros((0,), dtype=np.int64),
            name="cifar10",
            split=split,
        )
    return Dataset(
        np.concatenate(images_parts, axis=0),
        np.concatenate(labels_parts, axis=0),
        name="cifar10",
        split=split,
    )


def one_hot(labels, n_labels: int = N_LABELS) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], n_labels))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def link_inputs(images, labels, n_labels: int = N_LABELS) -> np.ndarray:
    """Append a one-hot label block after the pixels."""
    images = np.asarray(images, dtype=np.float64)
    return np.hstack([images, one_hot(labels, n_labels)])


@dataclass
class LinkedBatch:
    """One training batch of linked inputs with per-row polarity.

    Positive rows carry the true label in the one-hot block; negative rows a
    uniformly random wrong one. Rows are ordered positives first.
    """

    inputs: np.ndarray        # (rows, d + n_labels)
    polarity: np.ndarray      # (rows,) +1.0 / -1.0
    true_labels: np.ndarray   # (rows,)
    linked_labels: np.ndarray  # (rows,)


def sample_wrong_labels(
    true_labels, rng: np.random.Generator, n_labels: int = N_LABELS
) -> np.ndarray:
    """Uniform draw over the n_labels - 1 labels that differ from the truth."""
    true_labels = np.asarray(true_labels, dtype=np.int64)
    draws = rng.integers(0, n_labels - 1, size=true_labels.shape[0])
    return draws + (draws >= true_labels)


def make_linked_batches(
    ds: Dataset,
    rng: np.random.Generator,
    batch_size: int,
    negatives_per_positive: int = 1,
    n_labels: int = N_LABELS,
):
    """One epoch of shuffled LinkedBatch values.

    ``batch_size`` counts dataset samples; each contributes one positive row
    plus ``negatives_per_positive`` negative rows, so a batch holds
    batch_size * (1 + negatives_per_positive) rows. Reinvoking with the same
    generator reshuffles and redraws the wrong labels, which is how epochs
    get fresh negatives.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    if negatives_per_positive < 0:
        raise ConfigError(
            f"negatives_per_positive must be >= 0, got {negatives_per_positive}"
        )
    order = rng.permutation(ds.n)
    for start in range(0, ds.n, batch_size):
        idx = order[start : start + batch_size]
        images = ds.images[idx]
        true = ds.labels[idx]
        m = idx.shape[0]
        reps = negatives_per_positive
        neg_true = np.tile(true, reps)
        wrong = sample_wrong_labels(neg_true, rng, n_labels)
        inputs = np.vstack(
            [
                link_inputs(images, true, n_labels),
                link_inputs(np.tile(images, (reps, 1)), wrong, n_labels),
            ]
        )
        polarity = np.concatenate([np.ones(m), -np.ones(m * reps)])
        yield LinkedBatch(
            inputs=inputs,
            polarity=polarity,
            true_labels=np.concatenate([true, neg_true]),
            linked_labels=np.concatenate([true, wrong]),
        )


def make_plain_batches(ds: Dataset, rng: np.random.Generator, batch_size: int):
    """One epoch of shuffled (images, labels) pairs for the classic baseline."""
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    order = rng.permutation(ds.n)
    for start in range(0, ds.n, batch_size):
        idx = order[start : start + batch_size]
        yield ds.images[idx], ds.labels[idx]
