"""Throughput/latency micro-benchmark of the post-backbone pipeline step.

Drives a boundary-strategy stepper frame by frame over a deterministic
in-memory stream (the deployment pattern), timing each step with the
monotonic clock. Warmup frames are excluded from every statistic. An
optional untimed pass measures net allocation growth, which must stay flat
after warmup.
"""

from __future__ import annotations

import time
import tracemalloc
from dataclasses import dataclass

import numpy as np

from ._backend import backend_name, get_backend
from .errors import InvalidConfig

STRATEGIES = ("single", "a2", "sbl")

# default drift/reset parameters for benchmark streams (see _make_stream scale)
_TAU = 0.5
_WARMUP_FRAMES_DBL = 5
_DELTA = 20
_K = 64
_BLOCK = 600  # frames per synthetic action block


@dataclass(frozen=True)
class BenchReport:
    frames_processed: int
    wall_time_s: float
    throughput_fps: float
    latency_p50_us: float
    latency_p99_us: float
    feature_dim: int
    num_classes: int
    strategy: str
    backend: str
    warmup_frames: int
    resets: int
    alloc_bytes_after_warmup: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "frames_processed": self.frames_processed,
            "wall_time_s": self.wall_time_s,
            "throughput_fps": self.throughput_fps,
            "latency_p50_us": self.latency_p50_us,
            "latency_p99_us": self.latency_p99_us,
            "feature_dim": self.feature_dim,
            "num_classes": self.num_classes,
            "strategy": self.strategy,
            "backend": self.backend,
            "warmup_frames": self.warmup_frames,
            "resets": self.resets,
            "alloc_bytes_after_warmup": self.alloc_bytes_after_warmup,
        }


def _make_stream(feature_dim: int, num_classes: int, num_frames: int,
                 seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Blocky synthetic stream: +-1 centroids per block, so drift resets fire
    roughly every _BLOCK frames at the default threshold."""
    rng = np.random.default_rng(seed)
    centroids = rng.choice([-1.0, 1.0], size=(2, feature_dim))
    features = (0.1 * rng.standard_normal((num_frames, feature_dim))).astype(np.float32)
    logits = (0.3 * rng.standard_normal((num_frames, num_classes))).astype(np.float32)
    for start in range(0, num_frames, _BLOCK):
        block = (start // _BLOCK) % 2
        stop = min(start + _BLOCK, num_frames)
        features[start:stop] += centroids[block].astype(np.float32)
        logits[start:stop, block % num_classes] += 3.0
    return features, logits


def _make_stepper(kernels, strategy: str, feature_dim: int, num_classes: int):
    if strategy == "single":
        return kernels.SingleStepper(feature_dim, num_classes, _TAU, 0, 0,
                                     _WARMUP_FRAMES_DBL)
    if strategy == "a2":
        return kernels.TwoFoldStepper(feature_dim, num_classes, _TAU, 0, 0,
                                      _WARMUP_FRAMES_DBL, _DELTA)
    if strategy == "sbl":
        return kernels.SblStepper(feature_dim, num_classes, _K)
    raise InvalidConfig(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def measure_alloc_growth(strategy: str, feature_dim: int, num_classes: int,
                         num_frames: int, warmup_frames: int,
                         backend: str | None = None) -> int:
    """Net traced-memory growth (bytes) over the post-warmup step loop."""
    kernels = get_backend(backend)
    features, logits = _make_stream(feature_dim, num_classes, num_frames)
    stepper = _make_stepper(kernels, strategy, feature_dim, num_classes)
    stepper.bind(features, logits)
    for t in range(warmup_frames):
        stepper.step(t)
    tracemalloc.start()
    before, _ = tracemalloc.get_traced_memory()
    for t in range(warmup_frames, num_frames):
        stepper.step(t)
    after, _ = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    return after - before


def bench_pipeline(strategy: str = "a2", feature_dim: int = 1024,
                   num_classes: int = 8, num_frames: int = 50_000,
                   warmup_frames: int = 2_000, backend: str | None = None,
                   seed: int = 0, track_allocations: bool = False) -> BenchReport:
    """Benchmark one strategy's per-frame step loop."""
    if feature_dim < 1 or num_classes < 2:
        raise InvalidConfig("feature_dim must be >= 1 and num_classes >= 2")
    if warmup_frames < 0:
        raise InvalidConfig("warmup_frames must be >= 0")
    if num_frames < warmup_frames + 1000:
        raise InvalidConfig("num_frames must be >= warmup_frames + 1000")
    kernels = get_backend(backend)
    features, logits = _make_stream(feature_dim, num_classes, num_frames, seed)
    stepper = _make_stepper(kernels, strategy, feature_dim, num_classes)
    stepper.bind(features, logits)

    resets = 0
    for t in range(warmup_frames):
        resets += 1 if stepper.step(t) else 0

    measured = num_frames - warmup_frames
    samples = np.empty(measured)
    clock = time.perf_counter_ns
    start_wall = clock()
    for i, t in enumerate(range(warmup_frames, num_frames)):
        t0 = clock()
        hit = stepper.step(t)
        samples[i] = clock() - t0
        if hit:
            resets += 1
    wall_s = (clock() - start_wall) / 1e9

    alloc = None
    if track_allocations:
        alloc = measure_alloc_growth(strategy, feature_dim, num_classes,
                                     num_frames, warmup_frames, backend)
    return BenchReport(
        frames_processed=measured,
        wall_time_s=wall_s,
        throughput_fps=measured / wall_s,
        latency_p50_us=float(np.percentile(samples, 50)) / 1e3,
        latency_p99_us=float(np.percentile(samples, 99)) / 1e3,
        feature_dim=feature_dim,
        num_classes=num_classes,
        strategy=strategy,
        backend=kernels.BACKEND_NAME,
        warmup_frames=warmup_frames,
        resets=resets,
        alloc_bytes_after_warmup=alloc,
    )


def compare_backends(strategy: str = "a2", feature_dim: int = 1024,
                     num_classes: int = 8, num_frames: int = 20_000,
                     warmup_frames: int = 2_000) -> dict:
    """Benchmark the compiled and pure backends on identical work."""
    out: dict = {"active_backend": backend_name(), "reports": {}}
    for name in ("compiled", "pure"):
        try:
            report = bench_pipeline(strategy, feature_dim, num_classes,
                                    num_frames, warmup_frames, backend=name)
        except ImportError:
            continue
        out["reports"][name] = report.to_json_dict()
    reports = out["reports"]
    if "compiled" in reports and "pure" in reports:
        out["speedup_p50"] = (reports["pure"]["latency_p50_us"]
                              / reports["compiled"]["latency_p50_us"])
        out["speedup_throughput"] = (reports["compiled"]["throughput_fps"]
                                     / reports["pure"]["throughput_fps"])
    return out
