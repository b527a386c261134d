"""The joint network (encoder, heads, hyperspheres, energies) and batch prep."""
from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import Tensor, nn

from .corpus import Document, LabelSpaces, enumerate_pairs
from .encoders import (
    EncoderConfig,
    LinearLabelHead,
    build_encoder,
    encode_pair,
    mentions_to_ids,
)
from .energies import LabelSetEnergy, TokenEnergy, minimize_energy
from .spheres import EventHyperspheres


@dataclass
class TaskBatch:
    """Tensors for one batch of documents, spanning all three task levels.

    Mentions of all documents share one axis (M rows); pairs index into it.
    """

    token_ids: Tensor      # [M, L] long
    token_gold: Tensor     # [M, L] long token labels (class / non-trigger / padding)
    trigger_index: Tensor  # [M] long, 1-based
    event_gold: Tensor     # [M] long class ids
    pair_left: Tensor      # [N] long mention-row ids
    pair_right: Tensor     # [N]
    relation_gold: Tensor  # [N] long relation ids
    mention_ids: list[str]
    doc_ids: list[str]

    @property
    def n_mentions(self) -> int:
        return self.token_ids.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.pair_left.shape[0]


def build_batch(
    documents: list[Document],
    spaces: LabelSpaces,
    vocab: dict[str, int],
    mention_cap: int,
) -> TaskBatch | None:
    """Pad and index a list of documents; returns None when there are no mentions."""
    mentions = []
    doc_ids = []
    pair_left: list[int] = []
    pair_right: list[int] = []
    relation_gold: list[int] = []
    offset = 0
    for doc in documents:
        kept = doc.mentions[:mention_cap]
        if not kept:
            continue
        mentions.extend(kept)
        doc_ids.extend([doc.doc_id] * len(kept))
        for i, j, rel in enumerate_pairs(doc, mention_cap, spaces.na_index):
            pair_left.append(offset + i)
            pair_right.append(offset + j)
            relation_gold.append(rel)
        offset += len(kept)
    if not mentions:
        return None

    token_ids = mentions_to_ids(mentions, vocab)
    length = token_ids.shape[1]
    token_gold = torch.full((len(mentions), length), spaces.padding_label, dtype=torch.long)
    for row, m in enumerate(mentions):
        token_gold[row, : len(m.tokens)] = spaces.non_trigger_label
        token_gold[row, m.trigger_index - 1] = m.event_class
    return TaskBatch(
        token_ids=token_ids,
        token_gold=token_gold,
        trigger_index=torch.tensor([m.trigger_index for m in mentions], dtype=torch.long),
        event_gold=torch.tensor([m.event_class for m in mentions], dtype=torch.long),
        pair_left=torch.tensor(pair_left, dtype=torch.long),
        pair_right=torch.tensor(pair_right, dtype=torch.long),
        relation_gold=torch.tensor(relation_gold, dtype=torch.long),
        mention_ids=[m.mention_id for m in mentions],
        doc_ids=doc_ids,
    )


class JointEventNetwork(nn.Module):
    """Shared encoder feeding the three task levels.

    Token level: linear head over token features plus a sequence energy.
    Sentence level: hypersphere measurement over trigger embeddings plus a
    label-set energy.  Document level: linear head over pair features plus a
    label-set energy.
    """

    def __init__(
        self,
        encoder_cfg: EncoderConfig,
        spaces: LabelSpaces,
        radius: float = 1.0,
        trainable_radius: bool = False,
    ) -> None:
        super().__init__()
        self.encoder_cfg = encoder_cfg
        self.spaces = spaces
        d = encoder_cfg.embed_dim
        n_token_labels = spaces.token_label_count
        self.encoder = build_encoder(encoder_cfg)
        # Distinct stream from the encoder's so adding encoder layers never
        # reshuffles head/energy initialization.
        gen = torch.Generator().manual_seed(encoder_cfg.seed + 1)
        self.token_head = LinearLabelHead(d, n_token_labels, gen)
        self.relation_head = LinearLabelHead(3 * d, spaces.n_relations, gen)
        self.spheres = EventHyperspheres(
            spaces.n_event_classes, d, gen, radius=radius, trainable_radius=trainable_radius
        )
        self.token_energy = TokenEnergy(n_token_labels, d, spaces.padding_label, gen)
        self.sentence_energy = LabelSetEnergy(spaces.n_event_classes, d, gen)
        self.document_energy = LabelSetEnergy(spaces.n_relations, 3 * d, gen)

    def encode(self, token_ids: Tensor) -> Tensor:
        return self.encoder(token_ids)

    def mention_embeddings(self, features: Tensor, trigger_index: Tensor) -> Tensor:
        """Trigger rows of the token features; trigger_index is 1-based."""
        rows = torch.arange(features.shape[0])
        return features[rows, trigger_index - 1]

    def pair_features(self, embeddings: Tensor, left: Tensor, right: Tensor) -> Tensor:
        return encode_pair(embeddings[left], embeddings[right])

    def energy_parameters(self) -> list[nn.Parameter]:
        """The energy-function parameters (the Theta block)."""
        return (
            list(self.token_energy.parameters())
            + list(self.sentence_energy.parameters())
            + list(self.document_energy.parameters())
        )

    def predictor_parameters(self) -> list[nn.Parameter]:
        """Everything except the energy functions (the prediction-model block)."""
        energy_ids = {id(p) for p in self.energy_parameters()}
        return [p for p in self.parameters() if id(p) not in energy_ids]

    # Inference -----------------------------------------------------------

    @torch.no_grad()
    def predict_batch(self, batch: TaskBatch) -> dict[str, Tensor]:
        """Classifier-head probabilities for every task on one batch."""
        features = self.encode(batch.token_ids)
        token_probs = self.token_head(features)
        embeds = self.mention_embeddings(features, batch.trigger_index)
        event_probs = self.spheres.measure(embeds)
        out = {
            "token_probs": token_probs,
            "event_probs": event_probs,
            "mention_embeddings": embeds,
        }
        if batch.n_pairs:
            pair_feats = self.pair_features(embeds, batch.pair_left, batch.pair_right)
            out["relation_probs"] = self.relation_head(pair_feats)
        else:
            out["relation_probs"] = torch.zeros((0, self.spaces.n_relations), dtype=features.dtype)
        return out

    def predict_batch_energy_min(
        self, batch: TaskBatch, steps: int = 50, step_size: float = 1.0,
    ) -> dict[str, Tensor]:
        """Energy-minimizing inference (optional mode): argmin over relaxed labels."""
        with torch.no_grad():
            features = self.encode(batch.token_ids)
            embeds = self.mention_embeddings(features, batch.trigger_index)
        n_token_labels = self.spaces.token_label_count
        token_rows = [
            minimize_energy(
                lambda y, f=features[k]: self.token_energy(f, y),
                (features.shape[1], n_token_labels), steps=steps, step_size=step_size,
            )
            for k in range(features.shape[0])
        ]
        event_rows = [
            minimize_energy(
                lambda y, e=embeds[k]: self.sentence_energy(e, y),
                (self.spaces.n_event_classes,), steps=steps, step_size=step_size,
            )
            for k in range(embeds.shape[0])
        ]
        out = {
            "token_probs": torch.stack(token_rows),
            "event_probs": torch.stack(event_rows),
            "mention_embeddings": embeds,
        }
        if batch.n_pairs:
            with torch.no_grad():
                pair_feats = self.pair_features(embeds, batch.pair_left, batch.pair_right)
            out["relation_probs"] = torch.stack([
                minimize_energy(
                    lambda z, f=pair_feats[k]: self.document_energy(f, z),
                    (self.spaces.n_relations,), steps=steps, step_size=step_size,
                )
                for k in range(pair_feats.shape[0])
            ])
        else:
            out["relation_probs"] = torch.zeros((0, self.spaces.n_relations), dtype=features.dtype)
        return out
