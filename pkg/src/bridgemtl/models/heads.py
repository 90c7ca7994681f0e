"""Branch heads and the score upsampler.

A head is two stacked 3x3 convolutions: (c + partner channels) -> c/4 with a
ReLU in between, then c/4 -> class count. With cross-talk enabled the
partner branch's score maps are concatenated along the channel axis before
the first convolution. The upsampler restores input resolution with fixed
bilinear x4 interpolation followed by a learnable 1x1 convolution.
"""

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import ValidationError


class BranchHead(nn.Module):
    def __init__(self, channels: int, num_classes: int, partner_channels: int = 0):
        super().__init__()
        self.partner_channels = partner_channels
        hidden = max(channels // 4, 1)
        self.conv1 = nn.Conv2d(channels + partner_channels, hidden, 3, padding=1)
        self.conv2 = nn.Conv2d(hidden, num_classes, 3, padding=1)

    def forward(self, features: torch.Tensor, partner: torch.Tensor | None = None) -> torch.Tensor:
        if self.partner_channels:
            if partner is None:
                raise ValidationError("cross-talk head called without partner score maps")
            if partner.shape[1] != self.partner_channels:
                raise ValidationError(
                    f"partner has {partner.shape[1]} channels, head expects {self.partner_channels}"
                )
            features = torch.cat([features, partner], dim=1)
        elif partner is not None:
            raise ValidationError("head is not configured for partner input")
        return self.conv2(F.relu(self.conv1(features)))


class ScoreUpsampler(nn.Module):
    def __init__(self, num_classes: int, factor: int = 4):
        super().__init__()
        self.factor = factor
        self.conv = nn.Conv2d(num_classes, num_classes, 1)

    def forward(self, scores: torch.Tensor) -> torch.Tensor:
        up = F.interpolate(
            scores, scale_factor=self.factor, mode="bilinear", align_corners=False
        )
        return self.conv(up)
