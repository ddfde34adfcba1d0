"""Goodness-based layer-local training and its collaborative variant.

A layer's goodness for a linked input is the squared sum of its ReLU
activities. Each layer is trained to push goodness above a threshold theta
on positive rows and below it on negative rows, through the logistic
probability

    p = sigmoid(g + gamma - theta)

where ``gamma`` is a per-sample sum of *detached* goodness values from other
layers. gamma only shifts the effective threshold, so no gradient flows
through it; that shift is what lets a layer react to the rest of the
network without any backward pass.

Two schedules are provided: ``layerwise`` trains each layer for its full
epoch budget before moving to the next, and ``alternating`` gives every
layer one update per batch. Inference links each candidate label to the
sample, sums goodness over a layer mask, and votes by the largest sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .data import N_LABELS, Dataset, link_inputs, make_linked_batches
from .errors import ConfigError, EstimationError, ShapeError
from .linalg import make_rng, row_sumsq
from .nn import (
    ForwardTrace,
    MlpNetwork,
    apply_adam_update,
    forward_trace,
    layer_local_grad,
    make_adam_states,
)

GAMMA_MODES = ("none", "all_other_layers", "predecessors_only")
SCHEDULES = ("layerwise", "alternating")
LOSS_KINDS = ("sigmoid_goodness", "entropy")

# Open-interval clamp for probabilities; the loss itself is evaluated in
# log-space so this never touches the gradient path.
_P_FLOOR = np.finfo(np.float64).tiny
_P_CEIL = np.nextafter(1.0, 0.0)

# Keeps h = g + gamma strictly positive inside the entropy objective.
_ENTROPY_H_FLOOR = 1e-12


@dataclass
class FfConfig:
    """Knobs for one forward-forward training run.

    ``inference_layer_mask`` is a set of 0-based layer indices; None means
    every layer votes.
    """

    theta: float = 10.0
    gamma_mode: str = "none"
    schedule: str = "layerwise"
    loss_kind: str = "sigmoid_goodness"
    epochs: int = 150
    batch_size: int = 200
    learning_rate: float = 0.001
    seed: int = 0
    negatives_per_positive: int = 1
    inference_layer_mask: Optional[frozenset] = None

    def __post_init__(self) -> None:
        if not np.isfinite(self.theta):
            raise ConfigError(f"theta must be finite, got {self.theta}")
        if self.gamma_mode not in GAMMA_MODES:
            raise ConfigError(
                f"gamma_mode must be one of {GAMMA_MODES}, got {self.gamma_mode!r}"
            )
        if self.schedule not in SCHEDULES:
            raise ConfigError(
                f"schedule must be one of {SCHEDULES}, got {self.schedule!r}"
            )
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(
                f"loss_kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}"
            )
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.negatives_per_positive < 1:
            raise ConfigError(
                f"negatives_per_positive must be >= 1, got {self.negatives_per_positive}"
            )
        if self.inference_layer_mask is not None:
            mask = frozenset(int(i) for i in self.inference_layer_mask)
            if not mask:
                raise ConfigError("inference_layer_mask must be nonempty")
            if any(i < 0 for i in mask):
                raise ConfigError(f"negative layer index in mask: {sorted(mask)}")
            self.inference_layer_mask = mask


@dataclass(frozen=True)
class GoodnessTable:
    """Per-sample, per-layer goodness values, detached from any gradient."""

    values: np.ndarray  # (m, layers_computed)
    detached: bool = True


def goodness(trace: ForwardTrace, layer: int) -> np.ndarray:
    """Squared sum of the layer's ReLU activities, per sample."""
    return row_sumsq(trace.act[layer])


def goodness_table(trace: ForwardTrace) -> GoodnessTable:
    values = np.column_stack([goodness(trace, i) for i in range(trace.depth)])
    return GoodnessTable(values=values)


def positive_prob(g, gamma=0.0, theta=0.0):
    """Probability that a sample is positive given goodness ``g``.

    The logit is computed as g - (theta - gamma), never as (g + gamma) -
    theta: folding gamma into the threshold first makes the identity
    positive_prob(g, gamma, theta) == positive_prob(g, 0, theta - gamma)
    hold bitwise, which the stop-gradient equivalence tests rely on.
    """
    logit = np.asarray(g, dtype=np.float64) - (
        np.asarray(theta, dtype=np.float64) - np.asarray(gamma, dtype=np.float64)
    )
    return np.clip(expit(logit), _P_FLOOR, _P_CEIL)


def compute_gamma(table: GoodnessTable, layer: int, mode: str) -> np.ndarray:
    """Detached goodness offset for one layer under the given mode."""
    values = table.values
    m, depth = values.shape
    if not 0 <= layer < depth:
        raise ShapeError(f"layer {layer} outside table depth {depth}")
    if mode == "none":
        return np.zeros(m)
    if mode == "all_other_layers":
        return values.sum(axis=1) - values[:, layer]
    if mode == "predecessors_only":
        return values[:, :layer].sum(axis=1)
    raise ConfigError(f"unknown gamma mode {mode!r}")


def _logits(trace: ForwardTrace, layer: int, gamma, theta) -> tuple[np.ndarray, np.ndarray]:
    act = trace.act[layer]
    g = row_sumsq(act)
    # Same threshold-first form as positive_prob; see its docstring.
    logit = g - (np.asarray(theta, dtype=np.float64) - np.asarray(gamma, dtype=np.float64))
    return act, logit


def ff_loss_and_coeffs(
    trace: ForwardTrace, layer: int, gamma, theta, polarity
) -> tuple[float, np.ndarray]:
    """Batch-mean logistic goodness loss and its activity derivatives.

    Positive rows contribute -log sigmoid(g + gamma - theta), negative rows
    -log sigmoid(-(g + gamma - theta)). The returned coefficient matrix is
    d(loss)/d(activity), ready for :func:`ffnet.nn.layer_local_grad`.
    """
    act, logit = _logits(trace, layer, gamma, theta)
    polarity = np.asarray(polarity, dtype=np.float64)
    if polarity.shape != (act.shape[0],):
        raise ShapeError(
            f"polarity shape {polarity.shape} does not match batch of {act.shape[0]}"
        )
    signed = polarity * logit
    loss = float(np.mean(np.logaddexp(0.0, -signed)))
    # d/d logit of softplus(-polarity * logit) = -polarity * sigmoid(-signed)
    d_logit = -polarity * expit(-signed)
    m = act.shape[0]
    coeffs = (d_logit / m)[:, None] * 2.0 * act
    return loss, coeffs


def entropy_loss_and_coeffs(
    trace: ForwardTrace, layer: int, gamma, polarity
) -> tuple[float, np.ndarray]:
    """Batch entropy objective over h = g + gamma and its activity derivatives.

    The objective Ent(h) = mean(h * log(h / mean(h))) is estimated separately
    over the positive and the negative rows, each with its own mean, and the
    returned scalar is Ent(positive) - Ent(negative): training *maximizes*
    it, mirroring the push-up/push-down convention of the sigmoid loss. The
    coefficient matrix is d(objective)/d(activity); a minimizer must negate
    it. Uses d Ent/d h_s = log(h_s / mean(h)) / m (the remaining terms cancel)
    chained with d h/d act = 2 act.
    """
    act = trace.act[layer]
    g = row_sumsq(act)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=np.float64), g.shape)
    polarity = np.asarray(polarity, dtype=np.float64)
    if polarity.shape != g.shape:
        raise ShapeError(
            f"polarity shape {polarity.shape} does not match batch of {g.shape[0]}"
        )
    h = g + gamma + _ENTROPY_H_FLOOR
    d_h = np.zeros_like(h)
    objective = 0.0
    for sign, mask in ((1.0, polarity > 0), (-1.0, polarity < 0)):
        count = int(mask.sum())
        if count == 0:
            continue
        if count < 2:
            raise EstimationError(
                "entropy objective needs at least 2 samples per polarity, "
                f"got {count}"
            )
        h_part = h[mask]
        log_ratio = np.log(h_part / h_part.mean())
        objective += sign * float(np.mean(h_part * log_ratio))
        d_h[mask] = sign * log_ratio / count
    coeffs = d_h[:, None] * 2.0 * act
    return objective, coeffs


def _descent_loss_and_coeffs(trace, layer, gamma, cfg: FfConfig, polarity):
    """Uniform minimization interface over both loss kinds."""
    if cfg.loss_kind == "sigmoid_goodness":
        return ff_loss_and_coeffs(trace, layer, gamma, cfg.theta, polarity)
    objective, ascent = entropy_loss_and_coeffs(trace, layer, gamma, polarity)
    return -objective, -ascent


class _EpochStats:
    """Accumulates per-layer loss and goodness means across batches."""

    def __init__(self, depth: int):
        self.loss_sum = np.zeros(depth)
        self.batches = np.zeros(depth, dtype=np.int64)
        self.good_pos = np.zeros(depth)
        self.good_neg = np.zeros(depth)
        self.n_pos = np.zeros(depth, dtype=np.int64)
        self.n_neg = np.zeros(depth, dtype=np.int64)

    def record(self, layer: int, loss: float, g: np.ndarray, polarity: np.ndarray):
        if not np.isfinite(loss):
            raise FloatingPointError(
                f"non-finite loss at layer {layer}; training diverged"
            )
        self.loss_sum[layer] += loss
        self.batches[layer] += 1
        pos = polarity > 0
        self.good_pos[layer] += g[pos].sum()
        self.good_neg[layer] += g[~pos].sum()
        self.n_pos[layer] += int(pos.sum())
        self.n_neg[layer] += int((~pos).sum())

    def rows(self, epoch: int, loss_kind: str, layers) -> list[dict]:
        out = []
        for i in layers:
            out.append(
                {
                    "epoch": epoch,
                    "layer": i + 1,  # file schema is 1-based
                    "loss_kind": loss_kind,
                    "split": "train",
                    "loss": self.loss_sum[i] / max(self.batches[i], 1),
                    "mean_goodness_pos": self.good_pos[i] / max(self.n_pos[i], 1),
                    "mean_goodness_neg": self.good_neg[i] / max(self.n_neg[i], 1),
                }
            )
        return out


EpochCallback = Callable[[int, MlpNetwork], None]


def train_layerwise(
    net: MlpNetwork,
    ds: Dataset,
    cfg: FfConfig,
    on_epoch: Optional[EpochCallback] = None,
) -> tuple[MlpNetwork, list[dict]]:
    """Train layers strictly in order, each for the full epoch budget.

    Earlier layers are frozen once trained. With ``predecessors_only`` the
    offset comes from those frozen layers; with ``all_other_layers`` the
    not-yet-trained successors contribute at their current parameters. The
    callback receives a global epoch counter (layer * epochs + epoch).
    """
    if cfg.schedule != "layerwise":
        raise ConfigError(f"config schedule is {cfg.schedule!r}, not 'layerwise'")
    rng = make_rng(cfg.seed)
    states = make_adam_states(net, cfg.learning_rate)
    depth = net.depth
    history: list[dict] = []
    for i in range(depth):
        # Successor activations are only needed when they feed gamma.
        upto = depth if cfg.gamma_mode == "all_other_layers" else i + 1
        for epoch in range(1, cfg.epochs + 1):
            stats = _EpochStats(depth)
            for batch in make_linked_batches(
                ds, rng, cfg.batch_size, cfg.negatives_per_positive
            ):
                trace = forward_trace(net, batch.inputs, upto=upto)
                table = goodness_table(trace)
                gamma = compute_gamma(table, i, cfg.gamma_mode)
                loss, coeffs = _descent_loss_and_coeffs(
                    trace, i, gamma, cfg, batch.polarity
                )
                grad_w, grad_b = layer_local_grad(
                    net.layers[i], trace.layer_input(i), coeffs
                )
                apply_adam_update(net, i, grad_w, grad_b, states)
                stats.record(i, loss, table.values[:, i], batch.polarity)
            history.extend(stats.rows(epoch, cfg.loss_kind, [i]))
            if on_epoch is not None:
                on_epoch(i * cfg.epochs + epoch, net)
    return net, history


def train_alternating(
    net: MlpNetwork,
    ds: Dataset,
    cfg: FfConfig,
    on_epoch: Optional[EpochCallback] = None,
) -> tuple[MlpNetwork, list[dict]]:
    """Give every layer one update per batch for ``epochs`` passes.

    Each batch runs a single forward pass on the pre-batch parameters; all
    per-layer gradients and gamma offsets are computed from that snapshot,
    so the within-batch update order does not matter.
    """
    if cfg.schedule != "alternating":
        raise ConfigError(f"config schedule is {cfg.schedule!r}, not 'alternating'")
    rng = make_rng(cfg.seed)
    states = make_adam_states(net, cfg.learning_rate)
    depth = net.depth
    history: list[dict] = []
    for epoch in range(1, cfg.epochs + 1):
        stats = _EpochStats(depth)
        for batch in make_linked_batches(
            ds, rng, cfg.batch_size, cfg.negatives_per_positive
        ):
            trace = forward_trace(net, batch.inputs)
            table = goodness_table(trace)
            updates = []
            for i in range(depth):
                gamma = compute_gamma(table, i, cfg.gamma_mode)
                loss, coeffs = _descent_loss_and_coeffs(
                    trace, i, gamma, cfg, batch.polarity
                )
                updates.append(
                    layer_local_grad(net.layers[i], trace.layer_input(i), coeffs)
                )
                stats.record(i, loss, table.values[:, i], batch.polarity)
            for i, (grad_w, grad_b) in enumerate(updates):
                apply_adam_update(net, i, grad_w, grad_b, states)
        history.extend(stats.rows(epoch, cfg.loss_kind, range(depth)))
        if on_epoch is not None:
            on_epoch(epoch, net)
    return net, history


def train(
    net: MlpNetwork,
    ds: Dataset,
    cfg: FfConfig,
    on_epoch: Optional[EpochCallback] = None,
) -> tuple[MlpNetwork, list[dict]]:
    """Dispatch on ``cfg.schedule``."""
    if cfg.schedule == "layerwise":
        return train_layerwise(net, ds, cfg, on_epoch)
    return train_alternating(net, ds, cfg, on_epoch)


def _validated_mask(mask, depth: int) -> list[int]:
    if mask is None:
        return list(range(depth))
    layers = sorted(int(i) for i in mask)
    if not layers:
        raise ConfigError("layer mask must be nonempty")
    if layers[0] < 0 or layers[-1] >= depth:
        raise ConfigError(f"layer mask {layers} outside network depth {depth}")
    return layers


def label_goodness_scores(
    net: MlpNetwork,
    images,
    labels=range(N_LABELS),
    mask=None,
    chunk: int = 4096,
) -> np.ndarray:
    """Summed goodness over masked layers for every (sample, candidate label).

    Returns an (n, len(labels)) score matrix; columns follow the sorted
    candidate labels. Shared by inference and the subset-analysis cache so
    both paths see identical arithmetic.
    """
    images = np.asarray(images, dtype=np.float64)
    layers = _validated_mask(mask, net.depth)
    candidates = sorted(int(y) for y in labels)
    n = images.shape[0]
    scores = np.zeros((n, len(candidates)))
    upto = max(layers) + 1
    for col, y in enumerate(candidates):
        for start in range(0, n, chunk):
            block = images[start : start + chunk]
            linked = link_inputs(block, np.full(block.shape[0], y, dtype=np.int64))
            trace = forward_trace(net, linked, upto=upto)
            total = np.zeros(block.shape[0])
            for i in layers:
                total += goodness(trace, i)
            scores[start : start + chunk, col] = total
    return scores


def predict(net: MlpNetwork, images, labels=range(N_LABELS), mask=None) -> np.ndarray:
    """Goodness-voting prediction for a batch of raw samples."""
    candidates = np.array(sorted(int(y) for y in labels), dtype=np.int64)
    scores = label_goodness_scores(net, images, candidates, mask)
    # argmax takes the first maximum, i.e. ties go to the smallest label id
    return candidates[np.argmax(scores, axis=1)]


def infer(net: MlpNetwork, x, labels=range(N_LABELS), mask=None) -> int:
    """Predicted label for one raw (unlinked) sample."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return int(predict(net, x, labels, mask)[0])


def test_error(net: MlpNetwork, ds: Dataset, mask=None) -> float:
    """Fraction of misclassified samples under goodness voting."""
    preds = predict(net, ds.images, range(N_LABELS), mask)
    return float(np.mean(preds != ds.labels))
