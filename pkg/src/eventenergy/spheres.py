"""Event classes as hyperspheres: one learnable centroid per class, shared radius."""
from __future__ import annotations

import torch
from torch import Tensor, nn

DTYPE = torch.float64
# Keeps the distance gradient finite if an embedding ever lands exactly on a
# centroid; the forward value is unchanged at float64 precision.
_NORM_FLOOR = 1e-300


class EventHyperspheres(nn.Module):
    """Per-class centroids with a shared radius.

    Class membership is scored by the hinge distance
    ``max(0, ||centroid - embedding|| - radius)``: zero on or inside the
    sphere, growing linearly outside.  :meth:`measure` turns the negated
    hinge distances into a probability vector over classes.
    """

    def __init__(
        self,
        n_classes: int,
        dim: int,
        generator: torch.Generator,
        radius: float = 1.0,
        trainable_radius: bool = False,
    ) -> None:
        super().__init__()
        if n_classes < 1 or dim < 2:
            raise ValueError(f"need n_classes >= 1 and dim >= 2, got {n_classes}, {dim}")
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        raw = torch.randn(n_classes, dim, generator=generator, dtype=DTYPE)
        self.centroids = nn.Parameter(raw / raw.norm(dim=-1, keepdim=True))
        radii = torch.full((n_classes,), float(radius), dtype=DTYPE)
        if trainable_radius:
            self.radii = nn.Parameter(radii)
        else:
            self.register_buffer("radii", radii)

    @property
    def n_classes(self) -> int:
        return self.centroids.shape[0]

    def hinge_distances(self, embedding: Tensor) -> Tensor:
        """Hinge distance to every centroid; [..., d] -> [..., n_classes]."""
        delta = self.centroids - embedding.unsqueeze(-2)
        dist = delta.pow(2).sum(-1).clamp_min(_NORM_FLOOR).sqrt()
        return torch.relu(dist - self.radii)

    def hinge_distance(self, embedding: Tensor, class_index: int) -> Tensor:
        """Hinge distance to one class; zero iff on or inside that sphere."""
        if not 0 <= class_index < self.n_classes:
            raise ValueError(f"class index {class_index} outside [0, {self.n_classes})")
        delta = self.centroids[class_index] - embedding
        dist = delta.pow(2).sum(-1).clamp_min(_NORM_FLOOR).sqrt()
        return torch.relu(dist - self.radii[class_index])

    def measure(self, embedding: Tensor) -> Tensor:
        """Class probabilities: softmax of negated hinge distances."""
        return torch.softmax(-self.hinge_distances(embedding), dim=-1)


def init_centroids(
    n_classes: int, dim: int, seed: int, radius: float = 1.0, trainable_radius: bool = False,
) -> EventHyperspheres:
    """Unit-norm random centroids, deterministic per seed."""
    gen = torch.Generator().manual_seed(seed)
    return EventHyperspheres(n_classes, dim, gen, radius=radius, trainable_radius=trainable_radius)
