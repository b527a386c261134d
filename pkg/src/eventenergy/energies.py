"""The three structured energy functions and energy-minimizing inference.

Every energy follows the same two-term shape: a local term pairing label mass
with input features through per-label weight vectors, and a label term scoring
the label configuration on its own.  Lower energy means the input/label pair
is more compatible; the leading minus sign keeps that orientation.
"""
from __future__ import annotations

from typing import Callable

import torch
import torch.nn.functional as F
from torch import Tensor, nn

DTYPE = torch.float64
_INIT_SCALE = 0.1


def _init(shape: tuple[int, ...], generator: torch.Generator) -> nn.Parameter:
    return nn.Parameter(torch.randn(*shape, generator=generator, dtype=DTYPE) * _INIT_SCALE)


class TokenEnergy(nn.Module):
    """Sequence energy with per-label local scores and a label-bigram term.

    E(x, y) = -( sum_n sum_i y_n[i] * (label_weights[i] . x_n)
                 + sum_n y_{n-1}^T transition y_n )

    where y_0, the virtual label before the first token, is the padding
    one-hot.  ``labels`` rows may be relaxed (on the simplex) or one-hot.
    """

    def __init__(self, n_labels: int, dim: int, padding_label: int, generator: torch.Generator) -> None:
        super().__init__()
        self.label_weights = _init((n_labels, dim), generator)
        self.transition = _init((n_labels, n_labels), generator)
        boundary = torch.zeros(n_labels, dtype=DTYPE)
        boundary[padding_label] = 1.0
        self.register_buffer("boundary", boundary)

    def forward(self, features: Tensor, labels: Tensor) -> Tensor:
        """[L, d] x [L, T] -> scalar, or [B, L, d] x [B, L, T] -> [B]."""
        single = features.dim() == 2
        if single:
            features, labels = features.unsqueeze(0), labels.unsqueeze(0)
        if features.shape[:2] != labels.shape[:2]:
            raise ValueError(
                f"features {tuple(features.shape)} and labels {tuple(labels.shape)} disagree on [batch, length]"
            )
        if labels.shape[-1] != self.label_weights.shape[0]:
            raise ValueError(f"labels have {labels.shape[-1]} columns, expected {self.label_weights.shape[0]}")
        local = (labels * (features @ self.label_weights.T)).sum((-2, -1))
        prev = torch.cat([self.boundary.expand(labels.shape[0], 1, -1), labels[:, :-1]], dim=1)
        bigram = torch.einsum("blt,tu,blu->b", prev, self.transition, labels)
        energy = -(local + bigram)
        return energy[0] if single else energy


class LabelSetEnergy(nn.Module):
    """Single-label-vector energy used at the sentence and document levels.

    E(x, y) = -( sum_i y[i] * (label_weights[i] . x)
                 + out_weights . softplus(interaction @ y) )
    """

    def __init__(self, n_labels: int, dim: int, generator: torch.Generator) -> None:
        super().__init__()
        self.label_weights = _init((n_labels, dim), generator)
        self.interaction = _init((n_labels, n_labels), generator)
        self.out_weights = _init((n_labels,), generator)

    def forward(self, feature: Tensor, labels: Tensor) -> Tensor:
        """[d] x [C] -> scalar, or [B, d] x [B, C] -> [B]."""
        if feature.shape[-1] != self.label_weights.shape[1]:
            raise ValueError(f"feature dim {feature.shape[-1]} != expected {self.label_weights.shape[1]}")
        if labels.shape[-1] != self.label_weights.shape[0]:
            raise ValueError(f"labels have {labels.shape[-1]} entries, expected {self.label_weights.shape[0]}")
        local = (labels * (feature @ self.label_weights.T)).sum(-1)
        label_term = F.softplus(labels @ self.interaction.T) @ self.out_weights
        return -(local + label_term)


def project_to_simplex(v: Tensor) -> Tensor:
    """Euclidean projection of each last-dim vector onto the probability simplex."""
    n = v.shape[-1]
    u, _ = torch.sort(v, dim=-1, descending=True)
    css = u.cumsum(-1) - 1.0
    ind = torch.arange(1, n + 1, dtype=v.dtype, device=v.device)
    rho = (u * ind > css).sum(-1, keepdim=True)
    theta = css.gather(-1, rho - 1) / rho.to(v.dtype)
    return torch.clamp(v - theta, min=0.0)


def minimize_energy(
    energy_fn: Callable[[Tensor], Tensor],
    label_shape: tuple[int, ...],
    steps: int = 50,
    step_size: float = 1.0,
    max_halvings: int = 20,
    return_trace: bool = False,
) -> Tensor | tuple[Tensor, list[float]]:
    """Projected gradient descent over simplex rows, starting from uniform.

    Each step backtracks (halving the step size) until the energy strictly
    decreases; if no decrease is found the search stops.  Returns the
    lowest-energy iterate seen (with the energies of the accepted iterates
    when ``return_trace`` is set).  Optional inference path; training never
    calls this.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    y = torch.full(label_shape, 1.0 / label_shape[-1], dtype=DTYPE)
    best_y, best_e = y, _scalar_energy(energy_fn, y)
    trace = [best_e]
    eta = step_size
    for _ in range(steps):
        y_var = y.clone().requires_grad_(True)
        energy = energy_fn(y_var)
        (grad,) = torch.autograd.grad(energy, y_var)
        current = float(energy.detach())
        accepted = False
        trial = eta
        for _ in range(max_halvings):
            candidate = project_to_simplex(y - trial * grad)
            if _scalar_energy(energy_fn, candidate) < current:
                y, eta, accepted = candidate, trial, True
                break
            trial /= 2.0
        if not accepted:
            break
        e = _scalar_energy(energy_fn, y)
        trace.append(e)
        if e < best_e:
            best_y, best_e = y, e
    result = best_y.detach()
    return (result, trace) if return_trace else result


def _scalar_energy(energy_fn: Callable[[Tensor], Tensor], y: Tensor) -> float:
    with torch.no_grad():
        return float(energy_fn(y))
