"""Per-task cross-entropy and the two multitask loss combinations.

The uncertainty combination is computed in the log-variance parameterization
s = log(sigma^2):

    L_tot = 0.5 * exp(-s_e) * L_e + 0.5 * exp(-s_d) * L_d + 0.5 * (s_e + s_d)

which is algebraically identical to weighting each task loss by
1 / (2 sigma^2) and adding log(sigma_e * sigma_d), but stays defined for all
real s and avoids the sigma -> 0 singularity.
"""

import torch
from torch import nn

from .errors import ValidationError


def cross_entropy(logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Per-pixel softmax negative log-likelihood, averaged over pixels and batch.

    ``logits`` is (K, H, W) or (B, K, H, W); ``target`` holds class indices of
    matching spatial shape. The mean reduction keeps magnitudes comparable
    across image sizes.
    """
    if logits.dim() == 3:
        logits = logits.unsqueeze(0)
        target = target.unsqueeze(0)
    if logits.dim() != 4 or target.dim() != 3:
        raise ValidationError(
            f"expected (B, K, H, W) logits with (B, H, W) targets, got {tuple(logits.shape)} / {tuple(target.shape)}"
        )
    if logits.shape[0] != target.shape[0] or logits.shape[2:] != target.shape[1:]:
        raise ValidationError(
            f"logit/target shapes disagree: {tuple(logits.shape)} vs {tuple(target.shape)}"
        )
    if not torch.isfinite(logits).all():
        raise ValidationError("logits contain non-finite values")
    num_classes = logits.shape[1]
    if target.numel() and (target.min() < 0 or target.max() >= num_classes):
        raise ValidationError(f"target class index out of range [0, {num_classes})")
    log_probs = torch.log_softmax(logits, dim=1)
    nll = -log_probs.gather(1, target.long().unsqueeze(1)).squeeze(1)
    return nll.mean()


def additive_loss(loss_element: torch.Tensor, loss_defect: torch.Tensor) -> torch.Tensor:
    """Equal-weight combination of the two task losses."""
    return loss_element + loss_defect


class UncertaintyParams(nn.Module):
    """Learnable per-task log-variances s = log(sigma^2), initialized at 0 (sigma = 1).

    Kept in float64 so the stable form tracks the literal sigma weighting to
    machine precision; autograd promotes the combined loss accordingly.
    """

    def __init__(self):
        super().__init__()
        self.s_element = nn.Parameter(torch.zeros((), dtype=torch.float64))
        self.s_defect = nn.Parameter(torch.zeros((), dtype=torch.float64))

    @property
    def sigma_element(self) -> float:
        return float(torch.exp(0.5 * self.s_element))

    @property
    def sigma_defect(self) -> float:
        return float(torch.exp(0.5 * self.s_defect))


def uncertainty_loss(
    loss_element: torch.Tensor,
    loss_defect: torch.Tensor,
    params: UncertaintyParams,
) -> torch.Tensor:
    """Weight each task loss by its learned homoscedastic noise level."""
    s_e, s_d = params.s_element, params.s_defect
    return (
        0.5 * torch.exp(-s_e) * loss_element
        + 0.5 * torch.exp(-s_d) * loss_defect
        + 0.5 * (s_e + s_d)
    )
