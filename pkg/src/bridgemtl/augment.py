"""Deterministic training-time augmentation for image + label-map triples.

One shared affine warp (rotation, scale * zoom, horizontal flip) is applied to
the image (bilinear) and both label maps (nearest-neighbor); pixels introduced
at the border are background / no-corrosion. Photometric ops (smoothed
intensity noise, HSV jitter) touch the image only. Every op is skipped
outright when its parameters are the identity, so an identity configuration
reproduces the input byte for byte.
"""

import hashlib
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ValidationError
from .samples import Sample

# Amplitude of the smoothed intensity noise, in 8-bit levels. The kernel size
# is configurable (paper-style 5x5 by default); kernel 1 disables the op.
NOISE_STD = 6.0


@dataclass(frozen=True)
class AugmentationConfig:
    scale_range: tuple[float, float] = (0.75, 1.25)
    zoom_range: tuple[float, float] = (0.75, 1.25)
    rotation_deg: float = 10.0
    hflip_prob: float = 0.5
    noise_kernel: int = 5
    hsv_jitter: tuple[float, float, float] = (0.015, 0.4, 0.3)
    seed: int = 0

    def __post_init__(self):
        for name, (lo, hi) in (("scale_range", self.scale_range), ("zoom_range", self.zoom_range)):
            if not (0 < lo <= hi):
                raise ValidationError(f"{name} must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        if self.rotation_deg < 0:
            raise ValidationError("rotation_deg must be >= 0")
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise ValidationError("hflip_prob must be in [0, 1]")
        if self.noise_kernel < 1 or self.noise_kernel % 2 == 0:
            raise ValidationError("noise_kernel must be an odd integer >= 1")
        if len(self.hsv_jitter) != 3 or any(d < 0 for d in self.hsv_jitter):
            raise ValidationError("hsv_jitter must be three nonnegative deltas")

    @classmethod
    def identity(cls, seed: int = 0) -> "AugmentationConfig":
        """A configuration under which augment() is the identity."""
        return cls(
            scale_range=(1.0, 1.0),
            zoom_range=(1.0, 1.0),
            rotation_deg=0.0,
            hflip_prob=0.0,
            noise_kernel=1,
            hsv_jitter=(0.0, 0.0, 0.0),
            seed=seed,
        )


def derive_sample_seed(global_seed: int, sample_id: str, epoch: int = 0) -> int:
    """Stable per-sample seed; identical across processes and platforms."""
    digest = hashlib.sha256(f"{global_seed}:{sample_id}:{epoch}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _noise_scale(kernel: int) -> float:
    # Smoothing shrinks the noise variance by sum(w^2); compensate so the
    # delivered std is NOISE_STD regardless of kernel size.
    k1 = cv2.getGaussianKernel(kernel, -1)
    k2 = k1 @ k1.T
    return NOISE_STD / float(np.sqrt((k2**2).sum()))


def augment(sample: Sample, cfg: AugmentationConfig, rng: np.random.Generator) -> Sample:
    """Apply one random augmentation draw; deterministic for a given rng state."""
    h, w = sample.image.shape[:2]
    image = sample.image
    element = sample.element_map
    defect = sample.defect_map

    angle = float(rng.uniform(-cfg.rotation_deg, cfg.rotation_deg))
    scale = float(rng.uniform(*cfg.scale_range))
    zoom = float(rng.uniform(*cfg.zoom_range))
    flip = bool(rng.random() < cfg.hflip_prob)
    factor = scale * zoom

    if angle != 0.0 or factor != 1.0:
        center = ((w - 1) / 2.0, (h - 1) / 2.0)
        matrix = cv2.getRotationMatrix2D(center, angle, factor)
        image = cv2.warpAffine(
            image, matrix, (w, h), flags=cv2.INTER_LINEAR,
            borderMode=cv2.BORDER_CONSTANT, borderValue=(0, 0, 0),
        )
        element = cv2.warpAffine(
            element, matrix, (w, h), flags=cv2.INTER_NEAREST,
            borderMode=cv2.BORDER_CONSTANT, borderValue=0,
        )
        defect = cv2.warpAffine(
            defect, matrix, (w, h), flags=cv2.INTER_NEAREST,
            borderMode=cv2.BORDER_CONSTANT, borderValue=0,
        )
    if flip:
        image = np.fliplr(image)
        element = np.fliplr(element)
        defect = np.fliplr(defect)

    if cfg.noise_kernel > 1:
        field = rng.standard_normal((h, w)).astype(np.float32)
        smoothed = cv2.GaussianBlur(field, (cfg.noise_kernel, cfg.noise_kernel), 0)
        noise = smoothed * _noise_scale(cfg.noise_kernel)
        image = np.clip(image.astype(np.float32) + noise[..., None], 0, 255).astype(np.uint8)

    if any(d > 0 for d in cfg.hsv_jitter):
        dh, ds, dv = cfg.hsv_jitter
        hsv = cv2.cvtColor(image.astype(np.float32) / 255.0, cv2.COLOR_RGB2HSV)
        hsv[..., 0] = (hsv[..., 0] + rng.uniform(-dh, dh) * 360.0) % 360.0
        hsv[..., 1] = np.clip(hsv[..., 1] * (1.0 + rng.uniform(-ds, ds)), 0.0, 1.0)
        hsv[..., 2] = np.clip(hsv[..., 2] * (1.0 + rng.uniform(-dv, dv)), 0.0, 1.0)
        rgb = cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB)
        image = np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)

    return Sample(
        id=sample.id,
        image=np.ascontiguousarray(image),
        element_map=np.ascontiguousarray(element),
        defect_map=np.ascontiguousarray(defect),
    )
