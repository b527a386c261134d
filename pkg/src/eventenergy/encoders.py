"""Token/mention/pair feature encoders and the linear label heads.

The default backbone is a small trainable embedding with windowed context
mixing layers; a pretrained backbone can be plugged in through
:func:`register_backbone` behind the same tensor interface.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import torch
from torch import Tensor, nn

from .corpus import EventMention

PAD_TOKEN = "<pad>"
OOV_TOKEN = "<oov>"
DTYPE = torch.float64


@dataclass
class EncoderConfig:
    embed_dim: int
    vocab: dict[str, int]
    backbone: str = "toy-context"
    seed: int = 0
    mixer_layers: int = 2

    def __post_init__(self) -> None:
        if self.embed_dim < 2:
            raise ValueError(f"embed_dim must be >= 2, got {self.embed_dim}")
        for special in (PAD_TOKEN, OOV_TOKEN):
            if special not in self.vocab:
                raise ValueError(f"vocab is missing the {special!r} entry")
        if self.mixer_layers < 0:
            raise ValueError("mixer_layers must be >= 0")


def build_vocab(documents) -> dict[str, int]:
    """Deterministic token -> id map with padding at 0 and OOV at 1."""
    tokens = sorted({t for doc in documents for m in doc.mentions for t in m.tokens})
    vocab = {PAD_TOKEN: 0, OOV_TOKEN: 1}
    for tok in tokens:
        vocab[tok] = len(vocab)
    return vocab


def mentions_to_ids(
    mentions: Sequence[EventMention], vocab: dict[str, int], pad_to: int | None = None,
) -> Tensor:
    """Pad a batch of mentions into a [M, L] id tensor (suffix padding)."""
    length = pad_to if pad_to is not None else max(len(m.tokens) for m in mentions)
    pad_id, oov_id = vocab[PAD_TOKEN], vocab[OOV_TOKEN]
    rows = []
    for m in mentions:
        ids = [vocab.get(t, oov_id) for t in m.tokens[:length]]
        ids.extend([pad_id] * (length - len(ids)))
        rows.append(ids)
    return torch.tensor(rows, dtype=torch.long)


class WindowMixer(nn.Module):
    """One context-mixing layer: h_n += tanh(W [h_{n-1}; h_n; h_{n+1}] + b).

    Out-of-range neighbours are the layer's current pure-padding vector, so a
    padding-only sequence stays at the padding image through every layer.
    """

    def __init__(self, dim: int, generator: torch.Generator) -> None:
        super().__init__()
        scale = (3 * dim) ** -0.5
        self.weight = nn.Parameter(torch.randn(3 * dim, dim, generator=generator, dtype=DTYPE) * scale)
        self.bias = nn.Parameter(torch.zeros(dim, dtype=DTYPE))

    def forward(self, h: Tensor, pad_vec: Tensor) -> tuple[Tensor, Tensor]:
        batch = h.shape[0]
        edge = pad_vec.expand(batch, 1, -1)
        left = torch.cat([edge, h[:, :-1]], dim=1)
        right = torch.cat([h[:, 1:], edge], dim=1)
        window = torch.cat([left, h, right], dim=-1)
        h_next = h + torch.tanh(window @ self.weight + self.bias)
        pad_window = torch.cat([pad_vec, pad_vec, pad_vec], dim=-1)
        pad_next = pad_vec + torch.tanh(pad_window @ self.weight + self.bias)
        return h_next, pad_next


class TokenContextEncoder(nn.Module):
    """Trainable embedding plus stacked window mixers; float64 throughout."""

    def __init__(self, cfg: EncoderConfig) -> None:
        super().__init__()
        self.cfg = cfg
        gen = torch.Generator().manual_seed(cfg.seed)
        n_vocab, d = len(cfg.vocab), cfg.embed_dim
        self.embedding = nn.Parameter(torch.randn(n_vocab, d, generator=gen, dtype=DTYPE) * d ** -0.5)
        self.mixers = nn.ModuleList(WindowMixer(d, gen) for _ in range(cfg.mixer_layers))
        self.pad_id = cfg.vocab[PAD_TOKEN]

    @property
    def receptive_radius(self) -> int:
        return len(self.mixers)

    def forward(self, token_ids: Tensor) -> Tensor:
        if token_ids.dim() != 2:
            raise ValueError(f"expected [batch, length] token ids, got shape {tuple(token_ids.shape)}")
        h = self.embedding[token_ids]
        pad_vec = self.embedding[self.pad_id]
        for mixer in self.mixers:
            h, pad_vec = mixer(h, pad_vec)
        return h

    def padding_image(self) -> Tensor:
        """The vector every position of an all-padding sequence maps to."""
        pad_vec = self.embedding[self.pad_id]
        for mixer in self.mixers:
            _, pad_vec = mixer(pad_vec.reshape(1, 1, -1), pad_vec)
            pad_vec = pad_vec.reshape(-1)
        return pad_vec

    def encode_mention(self, mention: EventMention, pad_to: int | None = None) -> Tensor:
        """Feature matrix [L, d] for a single mention."""
        ids = mentions_to_ids([mention], self.cfg.vocab, pad_to=pad_to)
        return self.forward(ids)[0]


_BACKBONES: dict[str, Callable[[EncoderConfig], nn.Module]] = {
    "toy-context": TokenContextEncoder,
}


def register_backbone(name: str, factory: Callable[[EncoderConfig], nn.Module]) -> None:
    """Register a backbone factory, e.g. an adapter around a pretrained encoder.

    The factory must return an ``nn.Module`` mapping [batch, length] token ids
    to [batch, length, embed_dim] float64 features.
    """
    _BACKBONES[name] = factory


def build_encoder(cfg: EncoderConfig) -> nn.Module:
    try:
        factory = _BACKBONES[cfg.backbone]
    except KeyError:
        raise ValueError(
            f"unknown backbone {cfg.backbone!r}; registered: {sorted(_BACKBONES)}. "
            f"Pretrained backbones plug in via register_backbone()."
        ) from None
    return factory(cfg)


def encode_mention(features: Tensor, trigger_index: int) -> Tensor:
    """Mention embedding = the trigger row of the token features (1-based)."""
    if not 1 <= trigger_index <= features.shape[0]:
        raise ValueError(f"trigger index {trigger_index} outside [1, {features.shape[0]}]")
    return features[trigger_index - 1]


def encode_pair(fi: Tensor, fj: Tensor) -> Tensor:
    """Pair feature [fi || fj || fi*fj]; supports leading batch dims."""
    if fi.shape != fj.shape:
        raise ValueError(f"pair members must have equal shapes, got {tuple(fi.shape)} vs {tuple(fj.shape)}")
    return torch.cat([fi, fj, fi * fj], dim=-1)


class LinearLabelHead(nn.Module):
    """Linear layer plus row softmax; zero weights give uniform rows."""

    def __init__(self, in_dim: int, n_labels: int, generator: torch.Generator) -> None:
        super().__init__()
        self.weight = nn.Parameter(torch.randn(in_dim, n_labels, generator=generator, dtype=DTYPE) * in_dim ** -0.5)
        self.bias = nn.Parameter(torch.zeros(n_labels, dtype=DTYPE))

    def logits(self, features: Tensor) -> Tensor:
        return features @ self.weight + self.bias

    def forward(self, features: Tensor) -> Tensor:
        return torch.softmax(self.logits(features), dim=-1)
