"""Classifier registry: torchvision architectures plus a fast test net.

Weights resolution: "DEFAULT" pulls the pretrained torchvision weights
(needs the weight cache or network); "seeded" initializes the architecture
deterministically (torch.manual_seed) so offline runs are reproducible;
a filesystem path loads a state dict.
"""

import torch
from torch import nn

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

SEEDED_INIT_SEED = 1234


class TinyNet(nn.Module):
    """Small strided CNN with a 1000-way head; built for fast CPU tests."""

    def __init__(self, n_classes=1000):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 16, kernel_size=7, stride=4, padding=3),
            nn.ReLU(inplace=True),
            nn.Conv2d(16, 32, kernel_size=5, stride=4, padding=2),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d(4),
        )
        self.classifier = nn.Linear(32 * 16, n_classes)

    def forward(self, x):
        x = self.features(x)
        return self.classifier(torch.flatten(x, 1))


class Normalized(nn.Module):
    """Model wrapper taking pixel-domain input in [0, 1]; normalization is
    inside the module so attacks differentiate through it."""

    def __init__(self, model, mean=IMAGENET_MEAN, std=IMAGENET_STD):
        super().__init__()
        self.model = model
        self.register_buffer("mean", torch.tensor(mean).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(std).view(1, 3, 1, 1))

    def forward(self, x):
        return self.model((x - self.mean) / self.std)


def build_model(name, weights="seeded"):
    """Instantiate a named classifier wrapped with input normalization."""
    if name == "tiny":
        torch.manual_seed(SEEDED_INIT_SEED)
        net = TinyNet()
    else:
        from torchvision import models as tvm

        factory = getattr(tvm, name, None)
        if factory is None:
            raise ValueError(f"unknown torchvision model {name!r}")
        if weights == "DEFAULT":
            net = factory(weights="DEFAULT")
        else:
            torch.manual_seed(SEEDED_INIT_SEED)
            net = factory(weights=None)
    if weights not in (None, "seeded", "DEFAULT"):
        net.load_state_dict(torch.load(weights, map_location="cpu"))
    net.eval()
    wrapped = Normalized(net)
    wrapped.eval()
    return wrapped
