"""Task-specific projection of the shared feature embedding.

Three parameterizations of the same map: a scalar scale-and-shift, a
per-channel (attention-like) scale-and-shift, and a full channel-mixing
matrix with a per-channel shift. All modes initialize to the identity, so a
freshly built projection passes its input through unchanged.
"""

import torch
from torch import nn

from ..errors import ValidationError
from .config import PROJECTIONS


class FeatureProjection(nn.Module):
    def __init__(self, mode: str, channels: int):
        super().__init__()
        if mode not in PROJECTIONS:
            raise ValidationError(f"unknown projection mode {mode!r}, expected one of {PROJECTIONS}")
        self.mode = mode
        self.channels = channels
        if mode == "scalar":
            self.phi = nn.Parameter(torch.ones(()))
            self.beta = nn.Parameter(torch.zeros(()))
        elif mode == "vector":
            self.phi = nn.Parameter(torch.ones(channels))
            self.beta = nn.Parameter(torch.zeros(channels))
        else:  # matrix
            self.phi = nn.Parameter(torch.eye(channels))
            self.beta = nn.Parameter(torch.zeros(channels))

    def forward(self, embedding: torch.Tensor) -> torch.Tensor:
        squeeze = embedding.dim() == 3
        if squeeze:
            embedding = embedding.unsqueeze(0)
        if embedding.dim() != 4 or embedding.shape[1] != self.channels:
            raise ValidationError(
                f"expected embedding with {self.channels} channels, got shape {tuple(embedding.shape)}"
            )
        if self.mode == "scalar":
            out = embedding * self.phi + self.beta
        elif self.mode == "vector":
            out = embedding * self.phi.view(1, -1, 1, 1) + self.beta.view(1, -1, 1, 1)
        else:
            mixed = torch.einsum("oc,bchw->bohw", self.phi.to(embedding.dtype), embedding)
            out = mixed + self.beta.view(1, -1, 1, 1)
        return out.squeeze(0) if squeeze else out
