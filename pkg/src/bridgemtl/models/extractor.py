"""Shared feature extractors: image (3, H, W) -> embedding (c, H/4, W/4)."""

import importlib
from typing import Callable

from torch import nn

from ..errors import ValidationError
from .config import EXTRACTOR_HRNET, EXTRACTOR_REFERENCE, Dims

_REGISTRY: dict[str, Callable[[Dims], nn.Module]] = {}


def register_extractor(extractor_id: str, factory: Callable[[Dims], nn.Module]) -> None:
    """Register an external extractor factory (e.g. a full HRNet-W32 build)."""
    _REGISTRY[extractor_id] = factory


class ReferenceTinyExtractor(nn.Module):
    """Small stride-4 convolutional stack honoring the backbone contract.

    Stands in for the full high-resolution backbone in desk-scale runs; the
    channel count is configurable so paper dimensions (c=480) remain buildable.
    """

    def __init__(self, channels: int):
        super().__init__()
        half = max(channels // 2, 8)
        self.stem = nn.Sequential(
            nn.Conv2d(3, half, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(half, channels, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.ReLU(inplace=True),
        )

    def forward(self, images):
        return self.stem(images)


def build_extractor(extractor_id: str, dims: Dims) -> nn.Module:
    if extractor_id == EXTRACTOR_REFERENCE:
        return ReferenceTinyExtractor(dims.channels)
    if extractor_id in _REGISTRY:
        return _REGISTRY[extractor_id](dims)
    if extractor_id == EXTRACTOR_HRNET:
        try:
            module = importlib.import_module("hrnet_w32")
        except ImportError as exc:
            raise RuntimeError(
                "extractor not installed: 'hrnet_w32_external' needs either a "
                "registered factory (bridgemtl.models.register_extractor) or an "
                "importable 'hrnet_w32' module exposing build_extractor(dims)"
            ) from exc
        return module.build_extractor(dims)
    raise ValidationError(f"unknown extractor id {extractor_id!r}")
