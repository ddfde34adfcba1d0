"""Backpropagation reference models: pairwise discriminator and classic classifier.

The pairwise model consumes the same linked (sample + one-hot label) inputs
as forward-forward training and applies the same logistic goodness loss,
but only at the last layer, with gradients chain-ruled through the whole
stack (normalization included). The classic model is a plain MLP on raw
inputs with a linear label head and softmax cross-entropy.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .data import Dataset, make_linked_batches, make_plain_batches, one_hot
from .errors import ShapeError
from .ff import FfConfig
from .linalg import make_rng, row_sumsq
from .nn import (
    MlpNetwork,
    apply_adam_update,
    forward_pass,
    full_backprop_grad,
    make_adam_states,
)


def softmax_cross_entropy(logits, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(
            f"logits {logits.shape} incompatible with labels {labels.shape}"
        )
    m = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    loss = float(-np.mean(log_probs[np.arange(m), labels]))
    d_logits = (np.exp(log_probs) - one_hot(labels, logits.shape[1])) / m
    return loss, d_logits


def train_pairwise(
    net: MlpNetwork,
    ds: Dataset,
    cfg: FfConfig,
    on_epoch: Optional[Callable[[int, MlpNetwork], None]] = None,
) -> tuple[MlpNetwork, list[dict]]:
    """Backprop the last layer's goodness loss through every layer."""
    rng = make_rng(cfg.seed)
    states = make_adam_states(net, cfg.learning_rate)
    last = net.depth - 1
    history: list[dict] = []
    for epoch in range(1, cfg.epochs + 1):
        loss_sum, batches = 0.0, 0
        good_pos = good_neg = 0.0
        n_pos = n_neg = 0
        for batch in make_linked_batches(
            ds, rng, cfg.batch_size, cfg.negatives_per_positive
        ):
            trace = forward_pass(net, batch.inputs)
            act = trace.act[last]
            g = row_sumsq(act)
            signed = batch.polarity * (g - cfg.theta)
            loss = float(np.mean(np.logaddexp(0.0, -signed)))
            if not np.isfinite(loss):
                raise FloatingPointError("pairwise loss diverged")
            d_logit = -batch.polarity * expit(-signed)
            output_grad = (d_logit / act.shape[0])[:, None] * 2.0 * act
            grads = full_backprop_grad(net, batch.inputs, output_grad, trace=trace)
            for i, (grad_w, grad_b) in enumerate(grads):
                apply_adam_update(net, i, grad_w, grad_b, states)
            loss_sum += loss
            batches += 1
            pos = batch.polarity > 0
            good_pos += g[pos].sum()
            good_neg += g[~pos].sum()
            n_pos += int(pos.sum())
            n_neg += int((~pos).sum())
        history.append(
            {
                "epoch": epoch,
                "layer": last + 1,
                "loss_kind": "bp_pairwise",
                "split": "train",
                "loss": loss_sum / max(batches, 1),
                "mean_goodness_pos": good_pos / max(n_pos, 1),
                "mean_goodness_neg": good_neg / max(n_neg, 1),
            }
        )
        if on_epoch is not None:
            on_epoch(epoch, net)
    return net, history


def classic_logits(net: MlpNetwork, images, normalize: bool = False) -> np.ndarray:
    trace = forward_pass(net, images, normalize=normalize, final_linear=True)
    return trace.act[-1]


def classic_predict(net: MlpNetwork, images, normalize: bool = False) -> np.ndarray:
    return np.argmax(classic_logits(net, images, normalize), axis=1)


def classic_test_error(net: MlpNetwork, ds: Dataset, normalize: bool = False) -> float:
    preds = classic_predict(net, ds.images, normalize)
    return float(np.mean(preds != ds.labels))


def train_classic(
    net: MlpNetwork,
    ds: Dataset,
    cfg: FfConfig,
    normalize: bool = False,
    on_epoch: Optional[Callable[[int, MlpNetwork], None]] = None,
) -> tuple[MlpNetwork, list[dict]]:
    """Softmax cross-entropy classifier on raw inputs.

    ``net`` must end in a label-width linear head (the last layer is kept
    un-rectified). Inter-layer normalization is off by default, matching a
    standard MLP; pass normalize=True for the ablation variant.
    """
    rng = make_rng(cfg.seed)
    states = make_adam_states(net, cfg.learning_rate)
    history: list[dict] = []
    for epoch in range(1, cfg.epochs + 1):
        loss_sum, batches = 0.0, 0
        for images, labels in make_plain_batches(ds, rng, cfg.batch_size):
            trace = forward_pass(net, images, normalize=normalize, final_linear=True)
            loss, d_logits = softmax_cross_entropy(trace.act[-1], labels)
            if not np.isfinite(loss):
                raise FloatingPointError("classic loss diverged")
            grads = full_backprop_grad(
                net, images, d_logits, normalize=normalize, final_linear=True, trace=trace
            )
            for i, (grad_w, grad_b) in enumerate(grads):
                apply_adam_update(net, i, grad_w, grad_b, states)
            loss_sum += loss
            batches += 1
        history.append(
            {
                "epoch": epoch,
                "layer": net.depth,
                "loss_kind": "bp_classic",
                "split": "train",
                "loss": loss_sum / max(batches, 1),
                "mean_goodness_pos": float("nan"),
                "mean_goodness_neg": float("nan"),
            }
        )
        if on_epoch is not None:
            on_epoch(epoch, net)
    return net, history
