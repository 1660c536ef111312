"""Benchmark protocol runners and metrics.

Three inference regimes over the same per-frame streams:

* offline:   boundary supervision + clip sampling inside each segment.
* streaming: every frame of a segment, aggregator flushed at segment ends
             (boundary supervision used only for the flush).
* online:    one continuous pass with no boundary supervision; a boundary
             strategy (sbl / dbl / a2 / external list) schedules resets, and
             the running prediction is read at each labeled segment's last
             frame.

Accuracy is Top-1 per (train_domain, test_domain) pair; report means are
unweighted over pairs, seen = diagonal, unseen = off-diagonal. UNKNOWN
segments flow through the pipeline but are never evaluated.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._backend import KERNELS, METRIC_CODES, REFERENCE_CODES
from .aggregate import SamplerSpec, sample_indices
from .boundary import DblConfig
from .errors import AnnotationMissing, InvalidConfig
from .records import StreamDataset


class Mode(Enum):
    OFFLINE = "offline"
    STREAMING = "streaming"
    ONLINE = "online"


class Trimming(Enum):
    TRIMMED = "trimmed"
    UNTRIMMED = "untrimmed"


@dataclass(frozen=True)
class SblStrategy:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise InvalidConfig("k must be >= 1")


@dataclass(frozen=True)
class DblStrategy:
    config: DblConfig


@dataclass(frozen=True)
class A2Strategy:
    config: DblConfig
    delta: int = 20

    def __post_init__(self):
        if self.delta < 1:
            raise InvalidConfig("delta must be >= 1")


@dataclass(frozen=True)
class ExternalStrategy:
    """Reset schedule supplied from outside (e.g. an oracle or another detector).

    boundaries: frame list, or a {video_id: frame list} mapping. A reset is
    applied before the listed frame is pushed.
    """

    boundaries: Mapping[str, Sequence[int]] | Sequence[int]

    def for_video(self, video_id: str) -> np.ndarray:
        if isinstance(self.boundaries, Mapping):
            frames = self.boundaries.get(video_id, ())
        else:
            frames = self.boundaries
        return np.unique(np.asarray(list(frames), dtype=np.int64))


BoundaryStrategy = SblStrategy | DblStrategy | A2Strategy | ExternalStrategy


@dataclass(frozen=True)
class ProtocolSpec:
    mode: Mode
    trimming: Trimming = Trimming.TRIMMED
    strategy: BoundaryStrategy | None = None
    sampler: SamplerSpec | None = None
    softmax_inputs: bool = False  # aggregate softmax scores instead of raw logits

    def __post_init__(self):
        if self.mode is Mode.OFFLINE:
            if self.trimming is not Trimming.TRIMMED:
                raise InvalidConfig("offline mode requires trimmed evaluation")
            if self.sampler is None:
                raise InvalidConfig("offline mode requires a sampler")
            if self.strategy is not None:
                raise InvalidConfig("offline mode takes no boundary strategy")
        elif self.mode is Mode.STREAMING:
            if self.strategy is not None:
                raise InvalidConfig(
                    "streaming mode resets on ground-truth boundaries; no strategy")
        else:
            if self.strategy is None:
                raise InvalidConfig("online mode requires a boundary strategy")
            if self.sampler is not None:
                raise InvalidConfig("online mode takes no sampler")


class EvalReport:
    """Accuracy accounting, mergeable across videos and domain pairs."""

    def __init__(self):
        self.pair_counts: dict[tuple[str, str], list[int]] = {}  # [correct, total]
        self.per_class_counts: dict[int, list[int]] = {}  # [evaluated, correct]
        self.boundary_events: dict[str, list[tuple[int, int]]] = {}

    def record(self, pair: tuple[str, str], label: int, correct: bool) -> None:
        counts = self.pair_counts.setdefault(pair, [0, 0])
        counts[0] += int(correct)
        counts[1] += 1
        cls = self.per_class_counts.setdefault(label, [0, 0])
        cls[0] += 1
        cls[1] += int(correct)

    def merge(self, other: "EvalReport") -> "EvalReport":
        for pair, (c, t) in other.pair_counts.items():
            counts = self.pair_counts.setdefault(pair, [0, 0])
            counts[0] += c
            counts[1] += t
        for label, (e, c) in other.per_class_counts.items():
            cls = self.per_class_counts.setdefault(label, [0, 0])
            cls[0] += e
            cls[1] += c
        self.boundary_events.update(other.boundary_events)
        return self

    @property
    def num_evaluated_segments(self) -> int:
        return sum(t for _, t in self.pair_counts.values())

    @property
    def per_pair_accuracy(self) -> dict[tuple[str, str], float]:
        return {pair: c / t for pair, (c, t) in self.pair_counts.items() if t > 0}

    @property
    def mean_seen(self) -> float | None:
        seen = [a for (tr, te), a in self.per_pair_accuracy.items() if tr == te]
        return sum(seen) / len(seen) if seen else None

    @property
    def mean_unseen(self) -> float | None:
        unseen = [a for (tr, te), a in self.per_pair_accuracy.items() if tr != te]
        return sum(unseen) / len(unseen) if unseen else None

    @property
    def mean_accuracy(self) -> float | None:
        accs = list(self.per_pair_accuracy.values())
        return sum(accs) / len(accs) if accs else None

    def to_json_dict(self) -> dict:
        return {
            "per_pair_accuracy": {f"{tr}->{te}": acc for (tr, te), acc
                                  in sorted(self.per_pair_accuracy.items())},
            "pair_counts": {f"{tr}->{te}": list(ct) for (tr, te), ct
                            in sorted(self.pair_counts.items())},
            "mean_seen": self.mean_seen,
            "mean_unseen": self.mean_unseen,
            "mean_accuracy": self.mean_accuracy,
            "num_evaluated_segments": self.num_evaluated_segments,
            "per_class_counts": [[label, e, c] for label, (e, c)
                                 in sorted(self.per_class_counts.items())],
            "boundary_events": {vid: [list(ev) for ev in events] for vid, events
                                in sorted(self.boundary_events.items())},
        }

    def to_text(self) -> str:
        lines = [f"{'pair':<12} {'accuracy':>9} {'correct':>8} {'total':>6}"]
        for (tr, te), (c, t) in sorted(self.pair_counts.items()):
            acc = c / t if t else float("nan")
            lines.append(f"{tr + '->' + te:<12} {acc:>9.4f} {c:>8d} {t:>6d}")
        if self.mean_seen is not None:
            lines.append(f"{'mean seen':<12} {self.mean_seen:>9.4f}")
        if self.mean_unseen is not None:
            lines.append(f"{'mean unseen':<12} {self.mean_unseen:>9.4f}")
        lines.append(f"segments evaluated: {self.num_evaluated_segments}")
        return "\n".join(lines)


def aggregate_domains(per_pair: Mapping[tuple[str, str], float]
                      ) -> tuple[float | None, float | None]:
    """Unweighted means of per-pair accuracies: (seen diagonal, unseen rest)."""
    seen = [a for (tr, te), a in per_pair.items() if tr == te]
    unseen = [a for (tr, te), a in per_pair.items() if tr != te]
    return (sum(seen) / len(seen) if seen else None,
            sum(unseen) / len(unseen) if unseen else None)


def _pair(dataset: StreamDataset, train_domain: str | None) -> tuple[str, str]:
    test = dataset.manifest.domain_id
    return (train_domain if train_domain is not None else test, test)


def _used_logits(dataset: StreamDataset, spec: ProtocolSpec) -> np.ndarray:
    if not spec.softmax_inputs:
        return dataset.logits
    z = dataset.logits.astype(np.float64)
    z -= z.max(axis=1, keepdims=True)
    ez = np.exp(z)
    return (ez / ez.sum(axis=1, keepdims=True)).astype(np.float32)


def _require_labeled(dataset: StreamDataset):
    segments = dataset.labeled_segments()
    if not segments:
        raise AnnotationMissing(
            f"dataset {dataset.manifest.video_id} has no labeled segments")
    return segments


def _offline_predictions(dataset: StreamDataset, spec: ProtocolSpec) -> list[int | None]:
    segments = _require_labeled(dataset)
    logits = _used_logits(dataset, spec)
    preds = []
    for seg in segments:
        clips = sample_indices(spec.sampler, seg.num_frames)
        rows = np.asarray([seg.start_frame + i for clip in clips for i in clip])
        preds.append(int(np.argmax(logits[rows].sum(axis=0, dtype=np.float64))))
    return preds


def _streaming_predictions(dataset: StreamDataset, spec: ProtocolSpec) -> list[int | None]:
    segments = _require_labeled(dataset)
    logits = _used_logits(dataset, spec)
    preds = []
    for seg in segments:
        window = logits[seg.start_frame:seg.stop_frame + 1]
        preds.append(int(np.argmax(window.sum(axis=0, dtype=np.float64))))
    return preds


def _combine_weighted(sum_a: np.ndarray, n_a: int, sum_b: np.ndarray,
                      n_b: int) -> np.ndarray | None:
    """Frame-count-weighted combination of two aggregator means."""
    if n_a == 0 and n_b == 0:
        return None
    out = np.zeros(sum_a.shape[0])
    if n_a > 0:
        out += n_a * (sum_a / n_a)
    if n_b > 0:
        out += n_b * (sum_b / n_b)
    return out


def _online_predictions(dataset: StreamDataset, spec: ProtocolSpec
                        ) -> tuple[list[int | None], list[tuple[int, int]]]:
    segments = _require_labeled(dataset)
    logits = _used_logits(dataset, spec)
    features = dataset.features
    stops = np.unique(np.asarray([s.stop_frame for s in segments], dtype=np.int64))
    strategy = spec.strategy

    if isinstance(strategy, A2Strategy):
        cfg = strategy.config
        sums_a, sums_b, n_a, n_b, ev_frames, ev_aggs = KERNELS.run_a2(
            features, logits, cfg.threshold, METRIC_CODES[cfg.metric],
            REFERENCE_CODES[cfg.reference], cfg.warmup, strategy.delta, stops)
        at_stop: list[int | None] = []
        for i in range(len(stops)):
            out = _combine_weighted(sums_a[i], int(n_a[i]), sums_b[i], int(n_b[i]))
            at_stop.append(None if out is None else int(np.argmax(out)))
        events = [(int(f), int(a)) for f, a in zip(ev_frames, ev_aggs)]
    else:
        if isinstance(strategy, SblStrategy):
            sums, counts, ev_frames = KERNELS.run_sbl(features, logits,
                                                      strategy.k, stops)
        elif isinstance(strategy, DblStrategy):
            cfg = strategy.config
            sums, counts, ev_frames = KERNELS.run_dbl(
                features, logits, cfg.threshold, METRIC_CODES[cfg.metric],
                REFERENCE_CODES[cfg.reference], cfg.warmup, stops)
        elif isinstance(strategy, ExternalStrategy):
            resets = strategy.for_video(dataset.manifest.video_id)
            sums, counts = KERNELS.run_plain(logits, resets, stops)
            ev_frames = resets
        else:
            raise InvalidConfig(f"unsupported strategy {strategy!r}")
        at_stop = [int(np.argmax(sums[i])) if counts[i] > 0 else None
                   for i in range(len(stops))]
        events = [(int(f), 0) for f in ev_frames]

    slot = {int(f): i for i, f in enumerate(stops)}
    preds = [at_stop[slot[seg.stop_frame]] for seg in segments]
    return preds, events


def segment_predictions(dataset: StreamDataset, spec: ProtocolSpec
                        ) -> tuple[list[int | None], list[tuple[int, int]]]:
    """Per-labeled-segment predictions (in segment order) plus boundary events.

    None means the aggregator was empty at the evaluation point; runners score
    it as incorrect.
    """
    if spec.mode is Mode.OFFLINE:
        return _offline_predictions(dataset, spec), []
    if spec.mode is Mode.STREAMING:
        return _streaming_predictions(dataset, spec), []
    return _online_predictions(dataset, spec)


def _report_from(dataset: StreamDataset, spec: ProtocolSpec,
                 train_domain: str | None) -> EvalReport:
    preds, events = segment_predictions(dataset, spec)
    report = EvalReport()
    pair = _pair(dataset, train_domain)
    for seg, pred in zip(dataset.labeled_segments(), preds):
        report.record(pair, seg.label, pred == seg.label)
    if spec.mode is Mode.ONLINE:
        report.boundary_events[dataset.manifest.video_id] = events
    return report


def run_offline(dataset: StreamDataset, spec: ProtocolSpec,
                train_domain: str | None = None) -> EvalReport:
    """Per segment: sample clips inside [start, stop], average, argmax, score."""
    if spec.mode is not Mode.OFFLINE:
        raise InvalidConfig("run_offline needs an OFFLINE spec")
    return _report_from(dataset, spec, train_domain)


def run_streaming(dataset: StreamDataset, spec: ProtocolSpec,
                  train_domain: str | None = None) -> EvalReport:
    """Per segment: push every frame into a fresh aggregator, predict at the end."""
    if spec.mode is not Mode.STREAMING:
        raise InvalidConfig("run_streaming needs a STREAMING spec")
    return _report_from(dataset, spec, train_domain)


def run_online(dataset: StreamDataset, spec: ProtocolSpec,
               train_domain: str | None = None) -> EvalReport:
    """One continuous pass; read the running prediction at each segment end.

    UNKNOWN frames flow through aggregation (and may trigger resets) but never
    generate evaluations. An empty aggregator at an evaluation point scores as
    incorrect.
    """
    if spec.mode is not Mode.ONLINE:
        raise InvalidConfig("run_online needs an ONLINE spec")
    return _report_from(dataset, spec, train_domain)


def run_protocol(dataset: StreamDataset, spec: ProtocolSpec,
                 train_domain: str | None = None) -> EvalReport:
    if spec.mode is Mode.OFFLINE:
        return run_offline(dataset, spec, train_domain)
    if spec.mode is Mode.STREAMING:
        return run_streaming(dataset, spec, train_domain)
    return run_online(dataset, spec, train_domain)


def evaluate_datasets(items: Iterable[tuple[StreamDataset, str | None]],
                      spec: ProtocolSpec, jobs: int = 1) -> EvalReport:
    """Run one protocol over many videos and merge; merge order is input order."""
    items = list(items)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(lambda it: run_protocol(it[0], spec, it[1]), items))
    else:
        reports = [run_protocol(ds, spec, td) for ds, td in items]
    merged = EvalReport()
    for rep in reports:
        merged.merge(rep)
    return merged


def accuracy_vs_percentage(dataset: StreamDataset,
                           fractions: Sequence[float],
                           spec: ProtocolSpec | None = None
                           ) -> list[tuple[float, float]]:
    """Streaming accuracy when predicting after only a prefix of each segment.

    For fraction p the prediction is read after frame start + ceil(p*len) - 1;
    p = 1.0 reproduces run_streaming exactly.
    """
    for p in fractions:
        if not 0.0 < p <= 1.0:
            raise InvalidConfig(f"fractions must be in (0, 1], got {p}")
    if spec is None:
        spec = ProtocolSpec(mode=Mode.STREAMING)
    segments = _require_labeled(dataset)
    logits = _used_logits(dataset, spec)
    curve = []
    for p in fractions:
        correct = 0
        for seg in segments:
            length = seg.num_frames
            upto = seg.start_frame + min(max(math.ceil(p * length), 1), length) - 1
            window = logits[seg.start_frame:upto + 1]
            pred = int(np.argmax(window.sum(axis=0, dtype=np.float64)))
            correct += int(pred == seg.label)
        curve.append((float(p), correct / len(segments)))
    return curve


def sweep(items: Sequence[tuple[StreamDataset, str | None]], spec: ProtocolSpec,
          param: str, values: Sequence, jobs: int = 1
          ) -> list[tuple[float, EvalReport]]:
    """One merged report per grid value of k / tau / delta, in input order."""
    results = []
    for value in values:
        results.append((value, evaluate_datasets(items, _with_param(spec, param, value),
                                                 jobs=jobs)))
    return results


def _with_param(spec: ProtocolSpec, param: str, value) -> ProtocolSpec:
    strategy = spec.strategy
    if param == "k":
        if not isinstance(strategy, SblStrategy):
            raise InvalidConfig("sweeping k requires an sbl strategy")
        return replace(spec, strategy=SblStrategy(k=int(value)))
    if param == "tau":
        if isinstance(strategy, DblStrategy):
            return replace(spec, strategy=DblStrategy(
                replace(strategy.config, threshold=float(value))))
        if isinstance(strategy, A2Strategy):
            return replace(spec, strategy=A2Strategy(
                replace(strategy.config, threshold=float(value)), strategy.delta))
        raise InvalidConfig("sweeping tau requires a dbl or a2 strategy")
    if param == "delta":
        if not isinstance(strategy, A2Strategy):
            raise InvalidConfig("sweeping delta requires an a2 strategy")
        return replace(spec, strategy=A2Strategy(strategy.config, int(value)))
    raise InvalidConfig(f"unknown sweep parameter {param!r}")
