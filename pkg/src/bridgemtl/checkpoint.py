"""Named-tensor checkpoint archives.

A checkpoint is a torch-saved record {format_version, model_config,
parameters: name -> tensor}; loading rebuilds the configuration and validates
every parameter name and shape before accepting the weights. Backbone
archives hold only the extractor's own named tensors, for pretrained-weight
transfer.
"""

from dataclasses import asdict
from pathlib import Path

import torch

from .errors import ValidationError
from .models import Dims, ModelConfig, MultiTaskSegmenter, build_model

FORMAT_VERSION = 1


def config_to_dict(config: ModelConfig) -> dict:
    return asdict(config)


def config_from_dict(record: dict) -> ModelConfig:
    try:
        dims = Dims(**record["dims"])
        return ModelConfig(**{**record, "dims": dims})
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model_config record: {exc}") from exc


def save_checkpoint(path: str | Path, model: MultiTaskSegmenter, extra: dict | None = None) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "model_config": config_to_dict(model.config),
        "parameters": {name: tensor.detach().cpu() for name, tensor in model.state_dict().items()},
    }
    if extra:
        payload["extra"] = extra
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def _read_archive(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ValidationError(f"unsupported checkpoint format_version {version!r}")
    return payload


def load_checkpoint(path: str | Path) -> MultiTaskSegmenter:
    """Rebuild the model from its archived config; reject shape mismatches."""
    payload = _read_archive(path)
    config = config_from_dict(payload["model_config"])
    model = build_model(config)
    expected = model.state_dict()
    parameters = payload["parameters"]
    _check_names("checkpoint", set(parameters), set(expected), allow_partial=False)
    _check_shapes("checkpoint", parameters, expected)
    model.load_state_dict(parameters)
    return model


def save_backbone(path: str | Path, model: MultiTaskSegmenter) -> None:
    """Archive only the shared extractor's tensors for later transfer."""
    payload = {
        "format_version": FORMAT_VERSION,
        "parameters": {
            name: tensor.detach().cpu()
            for name, tensor in model.extractor.state_dict().items()
        },
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_pretrained_backbone(
    path: str | Path, model: MultiTaskSegmenter, allow_partial: bool = False
) -> MultiTaskSegmenter:
    """Replace extractor parameters from an archive; branch parameters stay.

    Name mismatches reject the load unless ``allow_partial``; shape mismatches
    always reject, naming the offending tensors.
    """
    payload = _read_archive(path)
    parameters = payload["parameters"]
    expected = model.extractor.state_dict()
    _check_names("backbone archive", set(parameters), set(expected), allow_partial)
    common = {name: parameters[name] for name in parameters.keys() & expected.keys()}
    _check_shapes("backbone archive", common, expected)
    model.extractor.load_state_dict(common, strict=not allow_partial)
    return model


def _check_names(what: str, got: set, expected: set, allow_partial: bool) -> None:
    extra = sorted(got - expected)
    missing = sorted(expected - got)
    if (extra or missing) and not allow_partial:
        parts = []
        if extra:
            parts.append(f"unexpected names {extra}")
        if missing:
            parts.append(f"missing names {missing}")
        raise ValidationError(f"{what} does not match the model: " + "; ".join(parts))


def _check_shapes(what: str, got: dict, expected: dict) -> None:
    bad = [
        f"{name} (archive {tuple(got[name].shape)} vs model {tuple(expected[name].shape)})"
        for name in got
        if name in expected and tuple(got[name].shape) != tuple(expected[name].shape)
    ]
    if bad:
        raise ValidationError(f"{what} has mismatched shapes: " + ", ".join(bad))
