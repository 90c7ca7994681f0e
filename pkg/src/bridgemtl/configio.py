"""Flat key=value configuration shared by every CLI command.

Files hold one ``key = value`` per line ('#' starts a comment). The same keys
are overridable on the command line; CLI values take precedence, and every
run writes the resolved snapshot back out in the same format.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .augment import AugmentationConfig
from .errors import ValidationError
from .models import Dims, ModelConfig, variant_config
from .training import TrainConfig


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_pair(text: str) -> tuple[float, float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {text!r}")
    return (float(parts[0]), float(parts[1]), float(parts[2]))


@dataclass(frozen=True)
class FieldSpec:
    parse: Callable[[str], object]
    default: object
    help: str


SCHEMA: dict[str, FieldSpec] = {
    "data": FieldSpec(str, "", "dataset root or manifest.json path"),
    "output": FieldSpec(str, "", "output directory (default: $BRIDGEMTL_OUTPUT or ./bridgemtl_out)"),
    "seed": FieldSpec(int, 0, "global seed for init, shuffling, and augmentation"),
    # model
    "variant": FieldSpec(str, "MTL-I", "named variant (single-element, merged, MTL-A..L); empty uses kind/projection/..."),
    "kind": FieldSpec(str, "", "model kind when variant is empty"),
    "projection": FieldSpec(str, "", "scalar | vector | matrix (mtl only)"),
    "crosstalk": FieldSpec(_parse_bool, False, "enable cross-talk sharing (mtl only)"),
    "crosstalk_mode": FieldSpec(str, "", "within_image_two_pass | stale_buffer"),
    "loss": FieldSpec(str, "", "additive | uncertainty (mtl only)"),
    "extractor": FieldSpec(str, "reference_tiny", "feature extractor id"),
    "channels": FieldSpec(int, 480, "embedding channel count c"),
    "image_size": FieldSpec(int, 480, "input image size (square, multiple of 4)"),
    # training
    "lr_init": FieldSpec(float, 5e-4, "initial learning rate"),
    "lr_min": FieldSpec(float, 5e-6, "final learning rate"),
    "batch_size": FieldSpec(int, 8, "training batch size"),
    "total_steps": FieldSpec(int, 1000, "optimization steps"),
    "eval_every": FieldSpec(int, 0, "evaluate/checkpoint period in steps (0 = off)"),
    "optimizer": FieldSpec(str, "adam", "optimizer (adam)"),
    # augmentation
    "aug_scale": FieldSpec(_parse_pair, (0.75, 1.25), "random scale range"),
    "aug_zoom": FieldSpec(_parse_pair, (0.75, 1.25), "random zoom range"),
    "aug_rotation": FieldSpec(float, 10.0, "rotation bound in degrees"),
    "aug_hflip": FieldSpec(float, 0.5, "horizontal flip probability"),
    "aug_noise_kernel": FieldSpec(int, 5, "noise smoothing kernel (odd, 1 disables)"),
    "aug_hsv": FieldSpec(_parse_triple, (0.015, 0.4, 0.3), "hue/saturation/value jitter"),
    "aug_identity": FieldSpec(_parse_bool, False, "disable all augmentation"),
    # command-specific
    "variants": FieldSpec(str, "", "comma-separated grid variants (empty = all 14)"),
    "split": FieldSpec(str, "test", "dataset split for evaluation"),
    "checkpoint": FieldSpec(str, "", "checkpoint path"),
    "image": FieldSpec(str, "", "input image file or directory"),
    "element_mask": FieldSpec(str, "", "element prediction mask path (visualize)"),
    "defect_mask": FieldSpec(str, "", "defect prediction mask path (visualize)"),
    "visualize": FieldSpec(_parse_bool, False, "also write overlay + condition report"),
    "n_warmup": FieldSpec(int, 5, "benchmark warmup iterations"),
    "n_timed": FieldSpec(int, 20, "benchmark timed iterations"),
    "repeats": FieldSpec(int, 3, "benchmark repeats (median reported)"),
}


def parse_config_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    raw: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def _apply(resolved: dict, raw: dict[str, str], origin: str) -> None:
    for key, text in raw.items():
        spec = SCHEMA.get(key)
        if spec is None:
            raise ValidationError(f"{origin}: unknown config field {key!r}")
        try:
            resolved[key] = spec.parse(text)
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"{origin}: bad value for {key!r}: {exc}") from exc


def resolve_config(
    config_path: str | Path | None = None,
    sets: list[str] | None = None,
    flags: dict[str, object] | None = None,
) -> dict:
    """defaults < config file < --set pairs < dedicated CLI flags."""
    resolved = {key: spec.default for key, spec in SCHEMA.items()}
    if config_path:
        _apply(resolved, parse_config_file(config_path), str(config_path))
    for item in sets or []:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        _apply(resolved, {key.strip(): value.strip()}, "--set")
    for key, value in (flags or {}).items():
        if value is None:
            continue
        if key not in SCHEMA:
            raise ValidationError(f"unknown config field {key!r}")
        resolved[key] = value
    return resolved


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    return str(value)


def write_resolved(resolved: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key} = {_format_value(resolved[key])}" for key in SCHEMA]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# --- domain objects from a resolved mapping -----------------------------------


def dims_from(resolved: dict) -> Dims:
    return Dims(image_size=resolved["image_size"], channels=resolved["channels"])


def model_config_from(resolved: dict) -> ModelConfig:
    dims = dims_from(resolved)
    mode = resolved["crosstalk_mode"] or None
    if resolved["variant"]:
        return variant_config(resolved["variant"], dims, resolved["extractor"], mode)
    if not resolved["kind"]:
        raise ValidationError("set either 'variant' or 'kind'")
    return ModelConfig(
        kind=resolved["kind"],
        projection=resolved["projection"] or None,
        crosstalk=resolved["crosstalk"],
        crosstalk_mode=mode,
        loss=resolved["loss"] or None,
        dims=dims,
        extractor=resolved["extractor"],
    ).normalized()


def augmentation_from(resolved: dict) -> AugmentationConfig:
    if resolved["aug_identity"]:
        return AugmentationConfig.identity(seed=resolved["seed"])
    return AugmentationConfig(
        scale_range=tuple(resolved["aug_scale"]),
        zoom_range=tuple(resolved["aug_zoom"]),
        rotation_deg=resolved["aug_rotation"],
        hflip_prob=resolved["aug_hflip"],
        noise_kernel=resolved["aug_noise_kernel"],
        hsv_jitter=tuple(resolved["aug_hsv"]),
        seed=resolved["seed"],
    )


def train_config_from(resolved: dict) -> TrainConfig:
    return TrainConfig(
        total_steps=resolved["total_steps"],
        lr_init=resolved["lr_init"],
        lr_min=resolved["lr_min"],
        batch_size=resolved["batch_size"],
        seed=resolved["seed"],
        optimizer=resolved["optimizer"],
        eval_every=resolved["eval_every"],
        augmentation=augmentation_from(resolved),
    )
