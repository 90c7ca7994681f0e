"""Command-line interface: dataset stats, training, evaluation, the variant
grid, inference, visualization, and benchmarking.

Exit codes: 0 success, 1 validation error (bad config/flags/inputs),
2 runtime failure.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from .benchmark import Pipeline, benchmark_inference
from .catalog import DEFAULT_CATALOG
from .checkpoint import load_checkpoint
from .configio import (
    dims_from,
    model_config_from,
    resolve_config,
    train_config_from,
    write_resolved,
)
from .errors import ValidationError
from .grid import GridSpec, grid_failed, run_grid
from .manifest import compute_split_stats, load_manifest
from .metrics import TaskReport
from .models import CrossTalkState, build_model, variant_config, variant_names
from .report import (
    TASK_TITLES,
    render_condition_report,
    render_split_stats,
    render_task_report_text,
    write_split_stats_records,
    write_task_reports,
)
from .samples import read_image, read_mask, resize_image
from .training import batch_tensors, evaluate, predict_maps, train
from .viz import (
    render_overlay,
    save_condition_figure,
    save_loss_figure,
    save_mask_png,
)

ENV_OUTPUT = "BRIDGEMTL_OUTPUT"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgemtl",
        description="Joint bridge-element parsing and corrosion segmentation toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument(
            "--set", action="append", default=[], dest="sets", metavar="KEY=VALUE",
            help="override one config field (repeatable)",
        )
        p.add_argument("--data", help="dataset root or manifest.json")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="global seed")
        return p

    add("stats", "print dataset split statistics")
    p = add("train", "train one model variant")
    p.add_argument("--variant", help="named variant (single-element, merged, MTL-A..L)")
    p = add("eval", "evaluate a checkpoint on a split")
    p.add_argument("--checkpoint", help="checkpoint path")
    p.add_argument("--split", help="train or test")
    p = add("grid", "train and compare the experiment grid")
    p.add_argument("--variants", help="comma-separated variant names (default: all 14)")
    p = add("infer", "run a checkpoint on an image or directory")
    p.add_argument("--checkpoint", help="checkpoint path")
    p.add_argument("--image", help="image file or directory")
    p.add_argument(
        "--visualize", action="store_const", const=True, default=None,
        help="also write overlays and condition reports",
    )
    p = add("visualize", "render overlay + condition report from saved masks")
    p.add_argument("--image", help="input image")
    p.add_argument("--element-mask", dest="element_mask", help="element mask PNG")
    p.add_argument("--defect-mask", dest="defect_mask", help="defect mask PNG")
    p = add("bench", "compare single-task vs multitask inference speed")
    p.add_argument("--variant", help="multitask variant to benchmark (default MTL-I)")
    return parser


def _output_dir(resolved: dict) -> Path:
    out = resolved["output"] or os.environ.get(ENV_OUTPUT) or "bridgemtl_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _manifest(resolved: dict):
    if not resolved["data"]:
        raise ValidationError("no dataset given: set --data or the 'data' config field")
    return load_manifest(resolved["data"])


def _print_reports(element: TaskReport | None, defect: TaskReport | None) -> None:
    for task, report in (("element", element), ("defect", defect)):
        if report is not None:
            print(render_task_report_text(report, f"{TASK_TITLES[task]} Task"))


def cmd_stats(resolved: dict, out: Path) -> int:
    manifest = _manifest(resolved)
    stats = compute_split_stats(manifest)
    text = render_split_stats(stats)
    print(text, end="")
    (out / "stats.txt").write_text(text, encoding="utf-8")
    write_split_stats_records(stats, out / "stats.csv", out / "stats.json")
    return 0


def cmd_train(resolved: dict, out: Path) -> int:
    manifest = _manifest(resolved)
    config = model_config_from(resolved)
    train_cfg = train_config_from(resolved)
    model = build_model(config, seed=resolved["seed"])
    model, history = train(model, manifest, train_cfg, run_dir=out)
    save_loss_figure(history, out / "loss_curves.png")
    if manifest.split_entries("test"):
        element, defect = evaluate(model, manifest, "test")
        write_task_reports(element, defect, out, stem="report")
        _print_reports(element, defect)
    print(f"trained {resolved['variant'] or config.kind}: artifacts in {out}")
    return 0


def cmd_eval(resolved: dict, out: Path) -> int:
    if not resolved["checkpoint"]:
        raise ValidationError("eval needs --checkpoint")
    model = load_checkpoint(resolved["checkpoint"])
    manifest = _manifest(resolved)
    element, defect = evaluate(model, manifest, resolved["split"])
    write_task_reports(element, defect, out, stem=f"report_{resolved['split']}")
    _print_reports(element, defect)
    return 0


def cmd_grid(resolved: dict, out: Path) -> int:
    manifest = _manifest(resolved)
    names = (
        [v.strip() for v in resolved["variants"].split(",") if v.strip()]
        if resolved["variants"]
        else variant_names()
    )
    spec = GridSpec(
        train=train_config_from(resolved),
        output_dir=out,
        variants=names,
        dims=dims_from(resolved),
        extractor=resolved["extractor"],
        crosstalk_mode=resolved["crosstalk_mode"] or None,
    )
    results = run_grid(spec, manifest)
    print((out / "comparison.txt").read_text(encoding="utf-8"), end="")
    if grid_failed(results):
        failed = [r.name for r in results if r.error is not None]
        raise RuntimeError(f"grid finished with failures: {', '.join(failed)}")
    return 0


def _iter_images(path: Path):
    if path.is_dir():
        files = sorted(
            p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not files:
            raise ValidationError(f"no images found in {path}")
        yield from files
    elif path.is_file():
        yield path
    else:
        raise ValidationError(f"image path does not exist: {path}")


def cmd_infer(resolved: dict, out: Path) -> int:
    if not resolved["checkpoint"]:
        raise ValidationError("infer needs --checkpoint")
    if not resolved["image"]:
        raise ValidationError("infer needs --image (file or directory)")
    model = load_checkpoint(resolved["checkpoint"])
    model.eval()
    size = model.config.dims.image_size
    cfg = model.config
    stale = cfg.kind == "mtl" and cfg.crosstalk and cfg.crosstalk_mode == "stale_buffer"
    state = CrossTalkState() if stale else None
    for image_path in _iter_images(Path(resolved["image"])):
        image = resize_image(read_image(image_path), size)
        tensor = torch.from_numpy(image.astype(np.float32) / 255.0).permute(2, 0, 1).unsqueeze(0)
        with torch.no_grad():
            preds = predict_maps(model, tensor, state)
        stem = image_path.stem
        element_pred = preds.get("element")
        defect_pred = preds.get("defect")
        if element_pred is not None:
            save_mask_png(element_pred[0], out / f"{stem}_element.png")
        if defect_pred is not None:
            save_mask_png(defect_pred[0], out / f"{stem}_defect.png")
        if resolved["visualize"]:
            _write_visuals(
                image,
                element_pred[0] if element_pred is not None else np.zeros((size, size), np.uint8),
                defect_pred[0] if defect_pred is not None else np.zeros((size, size), np.uint8),
                out,
                stem,
            )
        print(f"{image_path.name}: wrote predictions to {out}")
    return 0


def _write_visuals(image, element_pred, defect_pred, out: Path, stem: str) -> None:
    render_overlay(image, element_pred, defect_pred, out / f"{stem}_overlay.png")
    text, records = render_condition_report(element_pred, defect_pred)
    (out / f"{stem}_condition.txt").write_text(text, encoding="utf-8")
    (out / f"{stem}_condition.json").write_text(
        json.dumps([asdict(r) for r in records], indent=2), encoding="utf-8"
    )
    save_condition_figure(records, out / f"{stem}_condition.png")
    print(text, end="")


def cmd_visualize(resolved: dict, out: Path) -> int:
    for key in ("image", "element_mask", "defect_mask"):
        if not resolved[key]:
            raise ValidationError(f"visualize needs --{key.replace('_', '-')}")
    image = read_image(resolved["image"])
    element = read_mask(resolved["element_mask"], DEFAULT_CATALOG.num_element)
    defect = read_mask(resolved["defect_mask"], DEFAULT_CATALOG.num_defect)
    stem = Path(resolved["image"]).stem
    _write_visuals(image, element, defect, out, stem)
    return 0


def cmd_bench(resolved: dict, out: Path) -> int:
    manifest = _manifest(resolved)
    entries = manifest.split_entries("test") or manifest.split_entries("train")
    if not entries:
        raise ValidationError("dataset has no entries to benchmark on")
    dims = dims_from(resolved)
    mtl_name = resolved["variant"] or "MTL-I"
    mtl_config = variant_config(
        mtl_name, dims, resolved["extractor"], resolved["crosstalk_mode"] or None
    )
    if mtl_config.kind != "mtl":
        raise ValidationError(f"bench compares against a multitask variant, got {mtl_name!r}")
    seed = resolved["seed"]
    single_e = build_model(variant_config("single-element", dims, resolved["extractor"]), seed=seed)
    single_d = build_model(variant_config("single-defect", dims, resolved["extractor"]), seed=seed)
    mtl = build_model(mtl_config, seed=seed)
    from .samples import load_sample

    images = []
    for entry in entries[:4]:
        sample = load_sample(entry, dims.image_size)
        tensor, _, _ = batch_tensors([sample])
        images.append(tensor)
    results = benchmark_inference(
        [Pipeline("single", [single_e, single_d]), Pipeline(mtl_name, [mtl])],
        images,
        n_warmup=resolved["n_warmup"],
        n_timed=resolved["n_timed"],
        repeats=resolved["repeats"],
    )
    lines = [
        f"{'Pipeline':16s} {'FPS':>8s} {'extractor calls/image':>22s}   hardware",
        "-" * 70,
    ]
    for r in results:
        lines.append(
            f"{r.pipeline:16s} {r.inference_fps:>8.2f} {r.extractor_calls_per_image:>22d}   {r.hardware}"
        )
    text = "\n".join(lines) + "\n"
    print(text, end="")
    (out / "benchmark.txt").write_text(text, encoding="utf-8")
    (out / "benchmark.json").write_text(
        json.dumps([asdict(r) for r in results], indent=2), encoding="utf-8"
    )
    return 0


_COMMANDS = {
    "stats": cmd_stats,
    "train": cmd_train,
    "eval": cmd_eval,
    "grid": cmd_grid,
    "infer": cmd_infer,
    "visualize": cmd_visualize,
    "bench": cmd_bench,
}

_FLAG_KEYS = (
    ("data", "data"),
    ("out", "output"),
    ("seed", "seed"),
    ("variant", "variant"),
    ("checkpoint", "checkpoint"),
    ("split", "split"),
    ("variants", "variants"),
    ("image", "image"),
    ("element_mask", "element_mask"),
    ("defect_mask", "defect_mask"),
    ("visualize", "visualize"),
)


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        flags = {
            key: getattr(args, attr)
            for attr, key in _FLAG_KEYS
            if hasattr(args, attr) and getattr(args, attr) is not None
        }
        resolved = resolve_config(args.config, args.sets, flags)
        out = _output_dir(resolved)
        write_resolved(resolved, out / "resolved_config.txt")
        return _COMMANDS[args.command](resolved, out)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
