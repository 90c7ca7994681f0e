"""Batch-1 inference timing with extractor-call instrumentation.

A pipeline is the set of models run per image: one multitask model, or the
two single-task models back to back. Timing uses a monotonic clock after
warmup and reports the median FPS over repeats; extractor invocations are
counted by a forward hook, independently of the pipeline definition.
"""

import platform
import statistics
import time
from dataclasses import dataclass, field

import torch

from .errors import ValidationError
from .models import CrossTalkState, MultiTaskSegmenter


@dataclass
class Pipeline:
    name: str
    models: list[MultiTaskSegmenter]


@dataclass
class BenchmarkResult:
    pipeline: str
    inference_fps: float
    extractor_calls_per_image: int
    elapsed_seconds: float
    n_timed: int
    hardware: str
    training_minutes: float | None = None


def hardware_descriptor() -> str:
    cpu = platform.processor() or platform.machine()
    return f"{cpu} ({torch.get_num_threads()} torch threads)"


def _states_for(models: list[MultiTaskSegmenter]) -> list[CrossTalkState | None]:
    states = []
    for model in models:
        cfg = model.config
        stale = cfg.kind == "mtl" and cfg.crosstalk and cfg.crosstalk_mode == "stale_buffer"
        states.append(CrossTalkState() if stale else None)
    return states


def benchmark_inference(
    pipelines: list[Pipeline],
    images: list[torch.Tensor],
    n_warmup: int = 5,
    n_timed: int = 20,
    repeats: int = 3,
) -> list[BenchmarkResult]:
    if n_timed < 1:
        raise ValidationError("n_timed must be >= 1")
    if not images:
        raise ValidationError("benchmark needs at least one image")
    hardware = hardware_descriptor()
    results = []
    for pipeline in pipelines:
        for model in pipeline.models:
            model.eval()
        states = _states_for(pipeline.models)
        calls = [0]
        hooks = [
            model.extractor.register_forward_hook(
                lambda *_args: calls.__setitem__(0, calls[0] + 1)
            )
            for model in pipeline.models
        ]

        def run_pass(index: int) -> None:
            image = images[index % len(images)]
            with torch.no_grad():
                for model, state in zip(pipeline.models, states):
                    model(image, state)

        try:
            for i in range(n_warmup):
                run_pass(i)
            elapsed_runs = []
            calls_per_image = None
            for _ in range(repeats):
                calls[0] = 0
                start = time.perf_counter()
                for i in range(n_timed):
                    run_pass(i)
                elapsed_runs.append(time.perf_counter() - start)
                if calls[0] % n_timed != 0:
                    raise RuntimeError("extractor call count not an integer per image")
                calls_per_image = calls[0] // n_timed
        finally:
            for hook in hooks:
                hook.remove()
        elapsed = statistics.median(elapsed_runs)
        results.append(
            BenchmarkResult(
                pipeline=pipeline.name,
                inference_fps=n_timed / elapsed,
                extractor_calls_per_image=calls_per_image,
                elapsed_seconds=elapsed,
                n_timed=n_timed,
                hardware=hardware,
            )
        )
    return results
