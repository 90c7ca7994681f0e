"""The dual-branch segmentation network and its single-head baselines.

Forward runs the shared extractor exactly once per call, then (for multitask
models) both projections, both heads, and both upsamplers. Cross-talk feeds
one branch's coarse score maps into the other branch's head, either via a
second pass on the same image (default) or via buffers saved from the
previous step (the stale-buffer reading). Partner maps are always detached,
so no gradient flows through buffered or provisional scores.
"""

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ValidationError
from ..losses import UncertaintyParams
from .config import ModelConfig
from .extractor import build_extractor
from .heads import BranchHead, ScoreUpsampler
from .projection import FeatureProjection


@dataclass
class CrossTalkState:
    """Buffered coarse score maps exchanged between branches (stale mode).

    Buffers are gradient-detached; an absent buffer stands for a zero map.
    """

    element_scores: torch.Tensor | None = None
    defect_scores: torch.Tensor | None = None


@dataclass
class ModelOutput:
    """Full-resolution logits plus the coarse per-branch score maps.

    Only the fields for the model's tasks are populated; batched inputs yield
    batched tensors, unbatched inputs per-image tensors.
    """

    element_logits: torch.Tensor | None = None
    defect_logits: torch.Tensor | None = None
    merged_logits: torch.Tensor | None = None
    element_scores: torch.Tensor | None = None
    defect_scores: torch.Tensor | None = None
    merged_scores: torch.Tensor | None = None

    def logits(self, task: str) -> torch.Tensor:
        value = getattr(self, f"{task}_logits")
        if value is None:
            raise ValidationError(f"model produced no {task} output")
        return value


class MultiTaskSegmenter(nn.Module):
    """One comparison model: shared extractor plus one or two branches."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        config = config.normalized()
        self.config = config
        dims = config.dims
        c = dims.channels
        self.extractor = build_extractor(config.extractor, dims)
        if config.kind == "mtl":
            partner_e = dims.num_defect_classes if config.crosstalk else 0
            partner_d = dims.num_element_classes if config.crosstalk else 0
            self.element_projection = FeatureProjection(config.projection, c)
            self.defect_projection = FeatureProjection(config.projection, c)
            self.element_head = BranchHead(c, dims.num_element_classes, partner_e)
            self.defect_head = BranchHead(c, dims.num_defect_classes, partner_d)
            self.element_upsampler = ScoreUpsampler(dims.num_element_classes)
            self.defect_upsampler = ScoreUpsampler(dims.num_defect_classes)
            if config.loss == "uncertainty":
                self.uncertainty = UncertaintyParams()
        elif config.kind == "single_element":
            self.element_head = BranchHead(c, dims.num_element_classes)
            self.element_upsampler = ScoreUpsampler(dims.num_element_classes)
        elif config.kind == "single_defect":
            self.defect_head = BranchHead(c, dims.num_defect_classes)
            self.defect_upsampler = ScoreUpsampler(dims.num_defect_classes)
        else:  # merged
            self.merged_head = BranchHead(c, dims.num_merged_classes)
            self.merged_upsampler = ScoreUpsampler(dims.num_merged_classes)

    @property
    def tasks(self) -> tuple[str, ...]:
        return self.config.tasks

    def _check_images(self, images: torch.Tensor) -> torch.Tensor:
        if images.dim() == 3:
            images = images.unsqueeze(0)
        size = self.config.dims.image_size
        if images.dim() != 4 or images.shape[1] != 3 or images.shape[2:] != (size, size):
            raise ValidationError(
                f"expected images shaped (B, 3, {size}, {size}), got {tuple(images.shape)}"
            )
        return images

    def _stale_partner(
        self, buffer: torch.Tensor | None, batch: int, channels: int, like: torch.Tensor
    ) -> torch.Tensor:
        # A missing buffer, or one saved for a different batch size, acts as
        # the first step: a zero map.
        if buffer is None or buffer.shape[0] != batch:
            h = w = self.config.dims.feature_size
            return like.new_zeros((batch, channels, h, w))
        return buffer.detach()

    def forward(self, images: torch.Tensor, state: CrossTalkState | None = None) -> ModelOutput:
        squeeze = images.dim() == 3
        images = self._check_images(images)
        config = self.config
        dims = config.dims
        stale = config.kind == "mtl" and config.crosstalk and config.crosstalk_mode == "stale_buffer"
        if stale and state is None:
            raise ValidationError("stale_buffer cross-talk requires a CrossTalkState")
        if not stale and state is not None:
            raise ValidationError(f"{config.kind}/{config.crosstalk_mode} forward takes no state")

        features = self.extractor(images)
        batch = features.shape[0]
        out = ModelOutput()

        if config.kind == "mtl":
            f_e = self.element_projection(features)
            f_d = self.defect_projection(features)
            if not config.crosstalk:
                scores_e = self.element_head(f_e)
                scores_d = self.defect_head(f_d)
            elif stale:
                partner_d = self._stale_partner(
                    state.defect_scores, batch, dims.num_defect_classes, features
                )
                partner_e = self._stale_partner(
                    state.element_scores, batch, dims.num_element_classes, features
                )
                scores_e = self.element_head(f_e, partner_d)
                scores_d = self.defect_head(f_d, partner_e)
                state.element_scores = scores_e.detach()
                state.defect_scores = scores_d.detach()
            else:  # within_image_two_pass
                h = w = dims.feature_size
                zeros_d = features.new_zeros((batch, dims.num_defect_classes, h, w))
                zeros_e = features.new_zeros((batch, dims.num_element_classes, h, w))
                first_e = self.element_head(f_e, zeros_d)
                first_d = self.defect_head(f_d, zeros_e)
                scores_e = self.element_head(f_e, first_d.detach())
                scores_d = self.defect_head(f_d, first_e.detach())
            out.element_scores = scores_e
            out.defect_scores = scores_d
            out.element_logits = self.element_upsampler(scores_e)
            out.defect_logits = self.defect_upsampler(scores_d)
        elif config.kind == "single_element":
            out.element_scores = self.element_head(features)
            out.element_logits = self.element_upsampler(out.element_scores)
        elif config.kind == "single_defect":
            out.defect_scores = self.defect_head(features)
            out.defect_logits = self.defect_upsampler(out.defect_scores)
        else:
            out.merged_scores = self.merged_head(features)
            out.merged_logits = self.merged_upsampler(out.merged_scores)

        if squeeze:
            for name in (
                "element_logits", "defect_logits", "merged_logits",
                "element_scores", "defect_scores", "merged_scores",
            ):
                value = getattr(out, name)
                if value is not None:
                    setattr(out, name, value.squeeze(0))
        return out


def build_model(config: ModelConfig, seed: int | None = None) -> MultiTaskSegmenter:
    """Assemble a model; with a seed, initialization is reproducible and
    isolated from the global RNG stream."""
    config.validate()
    if seed is None:
        return MultiTaskSegmenter(config)
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        return MultiTaskSegmenter(config)
