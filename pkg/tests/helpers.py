"""Shared test utilities: finite-difference gradient oracle and tiny fixtures.

The finite-difference checker is the independent oracle for every gradient
assertion; it never calls autograd on the path it verifies.
"""
from __future__ import annotations

from typing import Callable, Sequence

import torch

from eventenergy.corpus import Document, EventMention, LabelSpaces

DTYPE = torch.float64


def finite_difference_gradient(f: Callable[[], torch.Tensor], tensor: torch.Tensor, h: float = 1e-5) -> torch.Tensor:
    """Central differences of a scalar-valued closure w.r.t. one tensor, coordinate by coordinate."""
    grad = torch.zeros_like(tensor)
    flat = tensor.reshape(-1)
    grad_flat = grad.reshape(-1)
    with torch.no_grad():
        for k in range(flat.numel()):
            original = float(flat[k])
            flat[k] = original + h
            plus = float(f())
            flat[k] = original - h
            minus = float(f())
            flat[k] = original
            grad_flat[k] = (plus - minus) / (2.0 * h)
    return grad


def max_relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    scale = torch.maximum(torch.ones_like(analytic), torch.maximum(analytic.abs(), numeric.abs()))
    return float(((analytic - numeric).abs() / scale).max())


def assert_gradients_match(
    f: Callable[[], torch.Tensor],
    tensors: Sequence[torch.Tensor],
    h: float = 1e-5,
    tol: float = 1e-4,
) -> float:
    """Autograd vs central differences for every tensor; returns the worst error."""
    for t in tensors:
        t.requires_grad_(True)
        if t.grad is not None:
            t.grad = None
    value = f()
    analytic = torch.autograd.grad(value, tensors, allow_unused=False)
    worst = 0.0
    for t, a in zip(tensors, analytic):
        t.requires_grad_(False)
        numeric = finite_difference_gradient(f, t, h=h)
        err = max_relative_error(a, numeric)
        worst = max(worst, err)
        assert err <= tol, f"gradient mismatch: rel err {err:.3g} > {tol}"
    return worst


def random_simplex_rows(*shape: int, generator: torch.Generator) -> torch.Tensor:
    """Random points strictly inside the simplex (softmax of gaussians)."""
    z = torch.randn(*shape, generator=generator, dtype=DTYPE)
    return torch.softmax(z, dim=-1)


def tiny_spaces(n_classes: int = 3, n_relations: int = 3) -> LabelSpaces:
    return LabelSpaces(
        event_classes=("None", *(f"EVT{i}" for i in range(1, n_classes))),
        relations=("NA", *(f"REL{i}" for i in range(1, n_relations))),
    )


def make_mention(tokens: Sequence[str], trigger_index: int, event_class: int, mention_id: str = "m") -> EventMention:
    return EventMention(
        tokens=tuple(tokens), trigger_index=trigger_index, event_class=event_class, mention_id=mention_id
    )


def make_document(
    doc_id: str,
    mention_specs: Sequence[tuple[Sequence[str], int, int]],
    relations: dict[tuple[int, int], int] | None = None,
) -> Document:
    mentions = tuple(
        make_mention(tokens, trig, cls, mention_id=f"{doc_id}:{k}")
        for k, (tokens, trig, cls) in enumerate(mention_specs)
    )
    return Document(doc_id=doc_id, mentions=mentions, relations=relations or {})


def brute_force_micro_counts(
    pred: Sequence[int], gold: Sequence[int], excluded: set[int],
) -> tuple[int, int, int]:
    """Independent TP/FP/FN counter, written as per-label loops then pooled."""
    labels = set(pred) | set(gold)
    tp = fp = fn = 0
    for lab in labels:
        if lab in excluded:
            continue
        for p, g in zip(pred, gold):
            if p == lab and g == lab:
                tp += 1
            elif p == lab and g != lab:
                fp += 1
            elif g == lab and p != lab:
                fn += 1
    return tp, fp, fn
