"""Margin-rescaled hinge losses per level, structured cost, and the joint objective.

Each level (token / sentence / document) contributes, per instance,

    [ cost(pred, gold) - E(inputs, pred) + E(inputs, gold) ]_+  +  mu * CE(pred, gold)

averaged over the level's instances in the batch: mentions for the token and
sentence levels, mention pairs for the document level.  The joint objective
is the lambda-weighted sum of the three level losses plus an L2 penalty over
all trainable parameters.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import torch
import torch.nn.functional as F
from torch import Tensor

from .encoders import encode_pair

if TYPE_CHECKING:  # pragma: no cover
    from .model import JointEventNetwork, TaskBatch

DTYPE = torch.float64
_LOG_FLOOR = 1e-12


@dataclass
class LossWeights:
    """Cross-entropy ratios (mu) per level, task ratios (lambda), and L2 coefficient."""

    mu_token: float = 1.0
    mu_sentence: float = 1.0
    mu_document: float = 1.0
    lambda_token: float = 1.0
    lambda_sentence: float = 1.0
    lambda_document: float = 1.0
    l2_coeff: float = 1e-5

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")


@dataclass
class LevelTerms:
    """Per-level batch means, kept as tensors so they stay differentiable."""

    loss: Tensor
    hinge: Tensor
    ce: Tensor


def structured_cost(pred: Tensor, gold: Tensor) -> Tensor:
    """Sum of squared differences over all entries; zero iff equal, symmetric."""
    if pred.shape != gold.shape:
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(gold.shape)}")
    return (pred - gold).pow(2).sum()


def hamming_cost(pred: Tensor, gold: Tensor) -> Tensor:
    """Argmax disagreement count; non-default ablation cost (no gradient)."""
    if pred.shape != gold.shape:
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(gold.shape)}")
    return (pred.argmax(-1) != gold.argmax(-1)).sum().to(pred.dtype)


def cross_entropy(pred: Tensor, gold_index: Tensor) -> Tensor:
    """Elementwise -log p(gold); exactly zero when the gold entry is 1."""
    p = pred.gather(-1, gold_index.unsqueeze(-1)).squeeze(-1)
    return -torch.log(p.clamp_min(_LOG_FLOOR))


def one_hot(index: Tensor, n_labels: int) -> Tensor:
    return F.one_hot(index, num_classes=n_labels).to(DTYPE)


def _batched_cost(pred: Tensor, gold: Tensor, cost: str) -> Tensor:
    """Per-instance structured cost: sums every non-batch dim."""
    if cost == "squared-l2":
        return (pred - gold).pow(2).sum(tuple(range(1, pred.dim())))
    if cost == "hamming":
        mismatch = (pred.argmax(-1) != gold.argmax(-1)).to(pred.dtype)
        return mismatch.sum(tuple(range(1, mismatch.dim()))) if mismatch.dim() > 1 else mismatch
    raise ValueError(f"unknown structured cost {cost!r}")


def token_loss(
    features: Tensor,
    pred: Tensor,
    gold: Tensor,
    energy,
    mu: float,
    cost: str = "squared-l2",
) -> LevelTerms:
    """Token-level loss over a batch of mentions.

    features [M, L, d]; pred [M, L, T] simplex rows; gold [M, L] label ids.
    The cost and hinge treat each mention's whole padded sequence as one
    structured instance; CE averages over the sequence positions.
    """
    gold_hot = one_hot(gold, pred.shape[-1])
    margin = _batched_cost(pred, gold_hot, cost)
    hinge = torch.relu(margin - energy(features, pred) + energy(features, gold_hot))
    ce = cross_entropy(pred, gold).mean(-1)
    return LevelTerms(loss=(hinge + mu * ce).mean(), hinge=hinge.mean(), ce=ce.mean())


def sentence_loss(
    embeddings: Tensor,
    pred: Tensor,
    gold: Tensor,
    energy,
    mu: float,
    cost: str = "squared-l2",
) -> LevelTerms:
    """Sentence-level loss; embeddings [M, d], pred [M, E], gold [M] class ids."""
    gold_hot = one_hot(gold, pred.shape[-1])
    margin = _batched_cost(pred, gold_hot, cost)
    hinge = torch.relu(margin - energy(embeddings, pred) + energy(embeddings, gold_hot))
    ce = cross_entropy(pred, gold)
    return LevelTerms(loss=(hinge + mu * ce).mean(), hinge=hinge.mean(), ce=ce.mean())


def document_loss(
    pair_features: Tensor,
    pred: Tensor,
    gold: Tensor,
    energy,
    mu: float,
    cost: str = "squared-l2",
) -> LevelTerms:
    """Document-level loss over mention pairs; pair_features [N, 3d], pred [N, R]."""
    gold_hot = one_hot(gold, pred.shape[-1])
    margin = _batched_cost(pred, gold_hot, cost)
    hinge = torch.relu(margin - energy(pair_features, pred) + energy(pair_features, gold_hot))
    ce = cross_entropy(pred, gold)
    return LevelTerms(loss=(hinge + mu * ce).mean(), hinge=hinge.mean(), ce=ce.mean())


def l2_penalty(parameters: Iterable[Tensor]) -> Tensor:
    total = torch.zeros((), dtype=DTYPE)
    for p in parameters:
        total = total + p.pow(2).sum()
    return total


_ZERO = LevelTerms(
    loss=torch.zeros((), dtype=DTYPE),
    hinge=torch.zeros((), dtype=DTYPE),
    ce=torch.zeros((), dtype=DTYPE),
)


def joint_loss(
    network: "JointEventNetwork",
    batch: "TaskBatch",
    weights: LossWeights,
    cost: str = "squared-l2",
) -> tuple[Tensor, dict[str, Tensor]]:
    """Weighted three-level loss plus L2 penalty, with a per-term breakdown.

    The breakdown carries the unweighted level losses and their hinge/CE
    parts, suitable for the training-log curves.
    """
    features = network.encode(batch.token_ids)
    token_pred = network.token_head(features)
    tok = token_loss(features, token_pred, batch.token_gold, network.token_energy, weights.mu_token, cost)

    embeds = network.mention_embeddings(features, batch.trigger_index)
    event_pred = network.spheres.measure(embeds)
    sen = sentence_loss(embeds, event_pred, batch.event_gold, network.sentence_energy, weights.mu_sentence, cost)

    if batch.n_pairs:
        pair_feats = encode_pair(embeds[batch.pair_left], embeds[batch.pair_right])
        rel_pred = network.relation_head(pair_feats)
        doc = document_loss(pair_feats, rel_pred, batch.relation_gold, network.document_energy,
                            weights.mu_document, cost)
    else:
        doc = _ZERO

    penalty = l2_penalty(network.parameters())
    total = (
        weights.lambda_token * tok.loss
        + weights.lambda_sentence * sen.loss
        + weights.lambda_document * doc.loss
        + weights.l2_coeff * penalty
    )
    breakdown = {
        "loss_token": tok.loss.detach(),
        "loss_sentence": sen.loss.detach(),
        "loss_document": doc.loss.detach(),
        "hinge_token": tok.hinge.detach(),
        "hinge_sentence": sen.hinge.detach(),
        "hinge_document": doc.hinge.detach(),
        "ce_token": tok.ce.detach(),
        "ce_sentence": sen.ce.detach(),
        "ce_document": doc.ce.detach(),
        "penalty": (weights.l2_coeff * penalty).detach(),
        "total": total.detach(),
    }
    return total, breakdown
