"""Running logit aggregation with reset semantics, plus offline clip samplers.

The aggregator accumulates per-frame logits (sum) and features (incremental
mean) between resets; its output is the mean logit vector over everything
pushed since the last reset.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, NoPrediction
from .records import FrameRecord


class AggregatorState:
    """Mutable accumulator: logit sum, running feature mean, frame count.

    Single-writer; n == 0 iff both vectors are all-zero. float64 accumulators
    keep hours-long streams numerically stable.
    """

    __slots__ = ("logit_sum", "feature_mean", "n")

    def __init__(self, feature_dim: int, num_classes: int):
        self.logit_sum = np.zeros(num_classes, dtype=np.float64)
        self.feature_mean = np.zeros(feature_dim, dtype=np.float64)
        self.n = 0

    @property
    def feature_dim(self) -> int:
        return self.feature_mean.shape[0]

    @property
    def num_classes(self) -> int:
        return self.logit_sum.shape[0]

    def push_vec(self, feature: np.ndarray, logits: np.ndarray) -> None:
        if feature.shape != self.feature_mean.shape:
            raise DimensionMismatch(
                f"feature dim {feature.shape[0]} != aggregator dim {self.feature_dim}")
        if logits.shape != self.logit_sum.shape:
            raise DimensionMismatch(
                f"logit dim {logits.shape[0]} != aggregator classes {self.num_classes}")
        self.n += 1
        self.logit_sum += logits
        # incremental mean: mean += (x - mean)/n, stable for long streams
        self.feature_mean += (feature - self.feature_mean) / self.n

    def push(self, record: FrameRecord) -> "AggregatorState":
        self.push_vec(record.feature, record.logits)
        return self

    def output(self) -> np.ndarray:
        """Mean logits since the last reset. Raises NoPrediction when empty."""
        if self.n == 0:
            raise NoPrediction("aggregator is empty")
        return self.logit_sum / self.n

    def reset(self) -> "AggregatorState":
        self.logit_sum[:] = 0.0
        self.feature_mean[:] = 0.0
        self.n = 0
        return self

    def copy(self) -> "AggregatorState":
        dup = AggregatorState(self.feature_dim, self.num_classes)
        dup.logit_sum[:] = self.logit_sum
        dup.feature_mean[:] = self.feature_mean
        dup.n = self.n
        return dup


def agg_push(state: AggregatorState, record: FrameRecord) -> AggregatorState:
    return state.push(record)


def agg_output(state: AggregatorState) -> np.ndarray:
    return state.output()


def agg_reset(state: AggregatorState) -> AggregatorState:
    return state.reset()


class SamplerKind(Enum):
    UNIFORM = "uniform"
    DENSE = "dense"


@dataclass(frozen=True)
class SamplerSpec:
    """Offline clip sampler: which frame indices feed the prediction.

    frames_per_clip=None means "the whole segment" (dense full-window); when
    given it must be >= 1.
    """

    kind: SamplerKind
    frames_per_clip: int | None
    num_clips: int = 1

    def __post_init__(self):
        if self.frames_per_clip is not None and self.frames_per_clip < 1:
            raise ValueError("frames_per_clip must be >= 1")
        if self.num_clips < 1:
            raise ValueError("num_clips must be >= 1")


def _round_half_up(numer: int, denom: int) -> int:
    # floor(numer/denom + 1/2) in exact integer arithmetic
    return (2 * numer + denom) // (2 * denom)


def sample_indices(spec: SamplerSpec, num_frames: int) -> list[list[int]]:
    """Frame-index lists, one per clip, all indices within [0, num_frames).

    UNIFORM: every clip is frames_per_clip equidistant indices spanning the
    whole range, endpoints included (index_j = round(j*(N-1)/(T-1)), half-up).
    DENSE: num_clips contiguous windows whose start frames are equidistant
    over the valid range; windows clamp to the last frame when N < T.
    """
    if num_frames < 1:
        raise ValueError("num_frames must be >= 1")
    t = spec.frames_per_clip if spec.frames_per_clip is not None else num_frames
    if spec.kind is SamplerKind.UNIFORM:
        if t == 1:
            clip = [0]
        else:
            clip = [min(_round_half_up(j * (num_frames - 1), t - 1), num_frames - 1)
                    for j in range(t)]
        return [list(clip) for _ in range(spec.num_clips)]
    # DENSE
    last_start = max(0, num_frames - t)
    if spec.num_clips == 1:
        starts = [0]
    else:
        starts = [_round_half_up(i * last_start, spec.num_clips - 1)
                  for i in range(spec.num_clips)]
    return [[min(s + j, num_frames - 1) for j in range(t)] for s in starts]
