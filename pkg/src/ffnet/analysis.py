"""Layer-subset evaluation and marginal contributions.

Goodness voting lets any subset of layers classify on its own, which turns
"how much does layer i help" into a measurable quantity: evaluate the full
voting set with and without the layer and difference the error rates. A
per-(sample, label, layer) goodness cache keeps the cost at one forward
pass per (sample, label) regardless of how many subsets are requested.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import N_LABELS, Dataset, link_inputs
from .errors import ConfigError
from .ff import goodness
from .nn import MlpNetwork, forward_trace


@dataclass(frozen=True)
class SubsetResult:
    layers: frozenset  # 0-based layer indices
    error: float
    n: int


@dataclass
class SubsetEvalReport:
    entries: list[SubsetResult]

    def error_of(self, layers) -> float:
        key = frozenset(int(i) for i in layers)
        for entry in self.entries:
            if entry.layers == key:
                return entry.error
        raise KeyError(f"subset {sorted(key)} not evaluated")


def subset_label(layers) -> str:
    """Human/CSV form of a subset, 1-based: {0, 2} -> '1+3'."""
    return "+".join(str(i + 1) for i in sorted(layers))


def parse_subset_label(text: str) -> frozenset:
    """Inverse of :func:`subset_label`."""
    try:
        parts = [int(p) for p in text.split("+")]
    except ValueError as exc:
        raise ConfigError(f"bad subset spec {text!r}") from exc
    if any(p < 1 for p in parts):
        raise ConfigError(f"subset labels are 1-based, got {text!r}")
    return frozenset(p - 1 for p in parts)


def default_subset_family(depth: int) -> list[frozenset]:
    """Singletons, prefixes, leave-one-outs, and the full set."""
    full = frozenset(range(depth))
    family: list[frozenset] = []
    for i in range(depth):
        family.append(frozenset([i]))
    for i in range(2, depth + 1):
        family.append(frozenset(range(i)))
    for i in range(depth):
        family.append(full - {i})
    family.append(full)
    seen: set[frozenset] = set()
    unique = []
    for s in family:
        if s not in seen:
            seen.add(s)
            unique.append(s)
    return unique


def goodness_cache(
    net: MlpNetwork, images, n_labels: int = N_LABELS, chunk: int = 4096
) -> np.ndarray:
    """Goodness for every (sample, candidate label, layer), shape (n, y, k)."""
    images = np.asarray(images, dtype=np.float64)
    n = images.shape[0]
    cache = np.empty((n, n_labels, net.depth))
    for y in range(n_labels):
        for start in range(0, n, chunk):
            block = images[start : start + chunk]
            linked = link_inputs(block, np.full(block.shape[0], y, dtype=np.int64))
            trace = forward_trace(net, linked)
            for i in range(net.depth):
                cache[start : start + chunk, y, i] = goodness(trace, i)
    return cache


def evaluate_subsets(
    net: MlpNetwork, ds: Dataset, subsets, n_labels: int = N_LABELS
) -> SubsetEvalReport:
    """Test error of goodness voting restricted to each requested subset."""
    requested = [frozenset(int(i) for i in s) for s in subsets]
    if not requested:
        raise ConfigError("no subsets requested")
    unique: list[frozenset] = []
    for s in requested:
        if not s:
            raise ConfigError("empty layer subset")
        if min(s) < 0 or max(s) >= net.depth:
            raise ConfigError(f"subset {sorted(s)} outside network depth {net.depth}")
        if s in unique:
            warnings.warn(f"duplicate subset {subset_label(s)} ignored", stacklevel=2)
            continue
        unique.append(s)

    cache = goodness_cache(net, ds.images, n_labels)
    entries = []
    for s in unique:
        scores = cache[:, :, sorted(s)].sum(axis=2)
        preds = np.argmax(scores, axis=1)  # ties go to the smallest label id
        entries.append(
            SubsetResult(layers=s, error=float(np.mean(preds != ds.labels)), n=ds.n)
        )
    return SubsetEvalReport(entries=entries)


def marginal_contributions(report: SubsetEvalReport, depth: int) -> np.ndarray:
    """error(full minus layer) - error(full), per layer; positive means the
    layer helps the vote."""
    full = frozenset(range(depth))
    try:
        err_full = report.error_of(full)
        return np.array(
            [report.error_of(full - {i}) - err_full for i in range(depth)]
        )
    except KeyError as exc:
        raise ConfigError(
            f"report lacks the subsets needed for marginals: {exc}"
        ) from exc
