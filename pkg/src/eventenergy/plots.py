"""Diagnostic plots: per-level loss curves and the class-sphere projection."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "eventenergy"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import torch  # noqa: E402

from .corpus import Document  # noqa: E402
from .model import build_batch  # noqa: E402
from .training import Checkpoint, TrainingLog  # noqa: E402

_LEVELS = (("token", "loss_token"), ("sentence", "loss_sentence"), ("document", "loss_document"))


def _savefig(fig, out_path: str | Path) -> None:
    out_path = Path(out_path)
    if out_path.suffix.lower() == ".svg":
        # strip the creation date so identical inputs give identical bytes
        fig.savefig(out_path, metadata={"Date": None})
    else:
        fig.savefig(out_path)
    plt.close(fig)


def plot_energy_curves(log: TrainingLog, out_path: str | Path) -> dict[str, list[float]]:
    """Three per-level loss curves vs. training step; returns the plotted series."""
    if not log.records:
        raise ValueError("training log is empty; nothing to plot")
    steps = log.series("step")
    series = {name: log.series(key) for name, key in _LEVELS}
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, _ in _LEVELS:
        ax.plot(steps, series[name], label=f"{name}-level loss", linewidth=1.2)
    ax.set_xlabel("training step")
    ax.set_ylabel("loss")
    ax.legend()
    fig.tight_layout()
    _savefig(fig, out_path)
    return series


def class_embeddings(checkpoint: Checkpoint, documents: Sequence[Document], class_index: int) -> torch.Tensor:
    """Mention embeddings of every gold mention of one class."""
    net = checkpoint.network
    net.eval()
    rows = []
    for start in range(0, len(documents), 32):
        batch = build_batch(
            list(documents[start: start + 32]), checkpoint.spaces, net.encoder_cfg.vocab,
            checkpoint.mention_cap,
        )
        if batch is None:
            continue
        probs = net.predict_batch(batch)
        mask = batch.event_gold == class_index
        if mask.any():
            rows.append(probs["mention_embeddings"][mask])
    if not rows:
        raise ValueError(
            f"class {checkpoint.spaces.event_classes[class_index]!r} has no mentions in the corpus"
        )
    return torch.cat(rows)


def _pca_2d(points: np.ndarray) -> np.ndarray:
    """Deterministic PCA to 2 components (sign fixed by largest loading)."""
    centered = points - points.mean(axis=0, keepdims=True)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:2]
    for k in range(comps.shape[0]):
        pivot = np.argmax(np.abs(comps[k]))
        if comps[k, pivot] < 0:
            comps[k] = -comps[k]
    return centered @ comps.T


def plot_class_sphere(
    checkpoint: Checkpoint,
    documents: Sequence[Document],
    class_name: str,
    out_path: str | Path,
) -> dict[str, float]:
    """2-D projection of one class: its centroid, its mentions, the radius circle.

    Returns pre-projection cluster statistics: mean hinge distance to the own
    centroid, to the nearest other centroid, and the fraction of mentions
    strictly closer (in hinge distance) to their own centroid.
    """
    spaces = checkpoint.spaces
    class_index = spaces.event_index(class_name)
    embeds = class_embeddings(checkpoint, documents, class_index)
    spheres = checkpoint.network.spheres
    with torch.no_grad():
        hinges = spheres.hinge_distances(embeds)  # [M, E]
    own = hinges[:, class_index]
    others = torch.cat([hinges[:, :class_index], hinges[:, class_index + 1:]], dim=1)
    if others.shape[1]:
        nearest_other = others.min(dim=1).values
    else:  # single-class label space: no competing centroid
        nearest_other = torch.full_like(own, float("inf"))
    stats = {
        "mean_hinge_own": float(own.mean()),
        "mean_hinge_nearest_other": float(nearest_other.mean()),
        "fraction_closer": float((own < nearest_other).to(torch.float64).mean()),
        "n_mentions": float(embeds.shape[0]),
    }

    centroid = spheres.centroids[class_index].detach().numpy()
    radius = float(spheres.radii[class_index])
    points = np.concatenate([embeds.numpy(), centroid[None, :]], axis=0)
    projected = _pca_2d(points)
    mention_xy, centroid_xy = projected[:-1], projected[-1]

    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    ax.scatter(mention_xy[:, 0], mention_xy[:, 1], s=12, alpha=0.7, label="mentions")
    ax.scatter([centroid_xy[0]], [centroid_xy[1]], marker="*", s=160, color="crimson", label="centroid")
    circle = plt.Circle(centroid_xy, radius, fill=False, linestyle="--", color="gray",
                        label=f"radius {radius:g}")
    ax.add_patch(circle)
    ax.set_aspect("equal")
    ax.set_title(class_name)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _savefig(fig, out_path)
    return stats
