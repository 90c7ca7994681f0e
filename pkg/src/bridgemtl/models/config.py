"""Model configuration and the named experiment variants.

A configuration is one comparison row: a single-task baseline, the merged
product-taxonomy baseline, or a dual-branch multitask model described by its
projection mode, cross-talk flag, and loss combination.
"""

from dataclasses import dataclass, field, replace

from ..errors import ValidationError

KINDS = ("single_element", "single_defect", "merged", "mtl")
PROJECTIONS = ("scalar", "vector", "matrix")
LOSSES = ("additive", "uncertainty")
CROSSTALK_MODES = ("within_image_two_pass", "stale_buffer")
DEFAULT_CROSSTALK_MODE = "within_image_two_pass"

EXTRACTOR_REFERENCE = "reference_tiny"
EXTRACTOR_HRNET = "hrnet_w32_external"


@dataclass(frozen=True)
class Dims:
    """Tensor dimensions; the extractor reduces spatial size by 4."""

    image_size: int = 480
    channels: int = 480
    num_element_classes: int = 7
    num_defect_classes: int = 2

    def __post_init__(self):
        if self.image_size < 4 or self.image_size % 4 != 0:
            raise ValidationError(f"image_size must be a positive multiple of 4, got {self.image_size}")
        if self.channels < 4:
            raise ValidationError(f"channels must be >= 4, got {self.channels}")

    @property
    def feature_size(self) -> int:
        return self.image_size // 4

    @property
    def num_merged_classes(self) -> int:
        return self.num_element_classes * self.num_defect_classes


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    projection: str | None = None
    crosstalk: bool = False
    crosstalk_mode: str | None = None
    loss: str | None = None
    dims: Dims = field(default_factory=Dims)
    extractor: str = EXTRACTOR_REFERENCE

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "mtl":
            if self.projection not in PROJECTIONS:
                raise ValidationError(
                    f"mtl models need a projection mode from {PROJECTIONS}, got {self.projection!r}"
                )
            if self.loss not in LOSSES:
                raise ValidationError(
                    f"mtl models need a loss from {LOSSES}, got {self.loss!r}"
                )
            if self.crosstalk_mode is not None and self.crosstalk_mode not in CROSSTALK_MODES:
                raise ValidationError(
                    f"unknown crosstalk_mode {self.crosstalk_mode!r}, expected one of {CROSSTALK_MODES}"
                )
            if not self.crosstalk and self.crosstalk_mode is not None:
                raise ValidationError("crosstalk_mode is set but crosstalk is off")
        else:
            for name, value in (
                ("projection", self.projection),
                ("loss", self.loss),
                ("crosstalk_mode", self.crosstalk_mode),
            ):
                if value is not None:
                    raise ValidationError(f"{name} is only meaningful for mtl models")
            if self.crosstalk:
                raise ValidationError("crosstalk is only meaningful for mtl models")

    def normalized(self) -> "ModelConfig":
        """Validated copy with the default cross-talk mode filled in."""
        self.validate()
        if self.kind == "mtl" and self.crosstalk and self.crosstalk_mode is None:
            return replace(self, crosstalk_mode=DEFAULT_CROSSTALK_MODE)
        return self

    @property
    def tasks(self) -> tuple[str, ...]:
        if self.kind == "mtl":
            return ("element", "defect")
        if self.kind == "merged":
            return ("merged",)
        return (self.kind.removeprefix("single_"),)


# Projection / cross-talk / loss per lettered multitask variant.
MTL_VARIANTS: dict[str, tuple[str, bool, str]] = {
    "MTL-A": ("scalar", False, "additive"),
    "MTL-B": ("scalar", False, "uncertainty"),
    "MTL-C": ("scalar", True, "additive"),
    "MTL-D": ("scalar", True, "uncertainty"),
    "MTL-E": ("vector", False, "additive"),
    "MTL-F": ("vector", False, "uncertainty"),
    "MTL-G": ("vector", True, "additive"),
    "MTL-H": ("vector", True, "uncertainty"),
    "MTL-I": ("matrix", False, "additive"),
    "MTL-J": ("matrix", False, "uncertainty"),
    "MTL-K": ("matrix", True, "additive"),
    "MTL-L": ("matrix", True, "uncertainty"),
}

BASELINE_VARIANTS = ("single-element", "single-defect", "merged")


def variant_names() -> list[str]:
    """All 14 comparison configurations, baselines first."""
    return [*BASELINE_VARIANTS, *MTL_VARIANTS]


def variant_config(
    name: str,
    dims: Dims | None = None,
    extractor: str = EXTRACTOR_REFERENCE,
    crosstalk_mode: str | None = None,
) -> ModelConfig:
    """The ModelConfig for a named variant ("single-element", "MTL-A", ...)."""
    dims = dims if dims is not None else Dims()
    if name in BASELINE_VARIANTS:
        kind = {"single-element": "single_element", "single-defect": "single_defect", "merged": "merged"}[name]
        return ModelConfig(kind=kind, dims=dims, extractor=extractor)
    if name in MTL_VARIANTS:
        projection, crosstalk, loss = MTL_VARIANTS[name]
        return ModelConfig(
            kind="mtl",
            projection=projection,
            crosstalk=crosstalk,
            crosstalk_mode=crosstalk_mode if crosstalk else None,
            loss=loss,
            dims=dims,
            extractor=extractor,
        ).normalized()
    raise ValidationError(f"unknown variant {name!r}; known: {variant_names()}")
