"""Projected gradient descent in the L-infinity ball, pixel domain.

Attack parameters follow the evaluation convention: budget epsilon (default
0.1), iteration cap (default 32), step size 2.5 * epsilon / iterations,
random start inside the ball. An image counts as robustly classified only
if both the unperturbed input and the attacked input are classified
correctly, so attacked accuracy can never exceed clean accuracy.
"""

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class AttackConfig:
    norm: str = "l_inf"
    epsilon: float = 0.1
    max_iterations: int = 32
    step_size: float | None = None

    def __post_init__(self):
        if self.norm != "l_inf":
            raise ValueError(f"unsupported norm {self.norm!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    @property
    def step(self):
        if self.step_size is not None:
            return self.step_size
        return 2.5 * self.epsilon / self.max_iterations


def pgd_perturb(model, images, labels, attack, generator=None):
    """Adversarial examples within the budget; inputs stay in [0, 1]."""
    x = images.detach()
    if attack.epsilon == 0.0:
        return x.clone()
    loss_fn = nn.CrossEntropyLoss()
    delta = torch.empty_like(x).uniform_(-attack.epsilon, attack.epsilon, generator=generator)
    delta = (x + delta).clamp(0.0, 1.0) - x  # keep the start valid
    for _ in range(attack.max_iterations):
        delta.requires_grad_(True)
        loss = loss_fn(model((x + delta).clamp(0.0, 1.0)), labels)
        (grad,) = torch.autograd.grad(loss, delta)
        with torch.no_grad():
            delta = delta + attack.step * grad.sign()
            delta = delta.clamp(-attack.epsilon, attack.epsilon)
            delta = (x + delta).clamp(0.0, 1.0) - x
    return (x + delta.detach()).clamp(0.0, 1.0)


def whitebox_accuracy(model, images, labels, attack=AttackConfig(), generator=None):
    """Accuracy on PGD-perturbed inputs (counting only doubly-correct ones).

    Returns (accuracy, max perturbation actually used).
    """
    for p in model.parameters():
        if not p.dtype.is_floating_point:
            raise ValueError("model is not differentiable end-to-end")
    adv = pgd_perturb(model, images, labels, attack, generator)
    budget_used = float((adv - images).abs().max()) if len(images) else 0.0
    if budget_used > attack.epsilon + 1e-6:
        raise AssertionError(f"perturbation {budget_used} exceeds budget {attack.epsilon}")
    with torch.no_grad():
        clean_pred = model(images).argmax(dim=1)
        adv_pred = model(adv).argmax(dim=1)
    robust = (clean_pred == labels) & (adv_pred == labels)
    return float(robust.float().mean()), budget_used


def clean_accuracy(model, images, labels):
    with torch.no_grad():
        pred = model(images).argmax(dim=1)
    return float((pred == labels).float().mean())
