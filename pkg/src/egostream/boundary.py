"""Boundary localization without ground truth.

Two strategies drive aggregator resets on a continuous stream:

* SBL (static): declare a boundary every k frames, unconditionally.
* DBL (dynamic): declare a boundary when the incoming feature drifts further
  than a threshold from a reference (the running mean of the current segment's
  features, or the previous frame), i.e. frames of one action are treated as
  the normal regime and a distance spike as the start of the next one.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch
from .records import FrameRecord


class Metric(Enum):
    MSE = "mse"
    COSINE_DISTANCE = "cosine"


class Reference(Enum):
    SEGMENT_MEAN = "segment_mean"
    PREVIOUS_FRAME = "previous_frame"


@dataclass(frozen=True)
class SblConfig:
    """Static boundary localization: force a reset every k frames."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class DblConfig:
    """Dynamic boundary localization parameters.

    threshold: distance above which a frame is declared anomalous.
    warmup: frames after a reset during which no anomaly can fire (the 1-frame
    reference right after a reset is too unstable to compare against).
    """

    threshold: float
    metric: Metric = Metric.MSE
    reference: Reference = Reference.SEGMENT_MEAN
    warmup: int = 5

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")


def dbl_distance(feature: np.ndarray, reference: np.ndarray, metric: Metric) -> float:
    """Distance between a frame feature and the reference vector."""
    if feature.shape != reference.shape:
        raise DimensionMismatch(
            f"feature dim {feature.shape} != reference dim {reference.shape}")
    # accumulate in float64 regardless of input dtype
    f64 = feature.astype(np.float64, copy=False)
    r64 = reference.astype(np.float64, copy=False)
    if metric is Metric.MSE:
        diff = f64 - r64
        return float(np.mean(diff * diff))
    norm_f = float(np.linalg.norm(f64))
    norm_r = float(np.linalg.norm(r64))
    if norm_f == 0.0 or norm_r == 0.0:
        return 1.0
    return 1.0 - float(np.dot(f64, r64)) / (norm_f * norm_r)


class DblState:
    """Drift detector state for one stream.

    The reference tracks the current segment: a running feature mean
    (SEGMENT_MEAN) or simply the last frame (PREVIOUS_FRAME). When disarmed,
    step() never reports an anomaly. On anomaly the triggering frame seeds the
    new segment's reference (it belongs to the new action, not the old one).
    """

    __slots__ = ("config", "reference_feature", "ref_count", "frames_since_reset",
                 "armed")

    def __init__(self, config: DblConfig, feature_dim: int | None = None,
                 armed: bool = True):
        self.config = config
        self.reference_feature: np.ndarray | None = None
        self.ref_count = 0
        self.frames_since_reset = 0
        self.armed = armed
        if feature_dim is not None:
            self.reference_feature = None  # seeded by the first frame

    def seed(self, feature: np.ndarray, count: int = 1) -> None:
        """Install a reference directly (used when re-arming in the two-fold setup)."""
        self.reference_feature = np.asarray(feature, dtype=np.float64).copy()
        self.ref_count = count
        self.frames_since_reset = 0

    def disarm(self) -> None:
        self.armed = False

    def arm(self) -> None:
        self.armed = True

    def step_vec(self, feature: np.ndarray) -> bool:
        """Advance one frame; True when this frame starts a new segment."""
        cfg = self.config
        if (self.armed and self.reference_feature is not None
                and self.frames_since_reset >= cfg.warmup
                and dbl_distance(feature, self.reference_feature, cfg.metric)
                > cfg.threshold):
            self.seed(feature)
            return True
        if self.reference_feature is None:
            self.seed(feature)
        elif cfg.reference is Reference.SEGMENT_MEAN:
            self.ref_count += 1
            self.reference_feature += (feature - self.reference_feature) / self.ref_count
        else:
            self.reference_feature[:] = feature
        self.frames_since_reset += 1
        return False


def dbl_step(state: DblState, record: FrameRecord) -> tuple[DblState, bool]:
    """Step the detector with one record; returns (state, anomaly)."""
    if state.reference_feature is not None and \
            record.feature.shape != state.reference_feature.shape:
        raise DimensionMismatch(
            f"record dim {record.feature.shape[0]} != reference dim "
            f"{state.reference_feature.shape[0]}")
    anomaly = state.step_vec(record.feature)
    return state, anomaly


def sbl_step(counter: int, k: int) -> tuple[int, bool]:
    """Advance the static reset counter; reset fires every k-th frame."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counter = (counter + 1) % k
    return counter, counter == 0
