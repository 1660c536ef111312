"""Two-fold aggregator: two aggregators with alternating, delayed drift arming.

Both aggregators push every frame. Only one drift detector is armed at a
time; when it fires, its aggregator resets and starts encoding the next
action while the other aggregator keeps the previous action's context. The
other detector arms delta frames later (seeded from its own aggregator's
running feature mean), which guarantees the two never reset together. The
combined output weighs each aggregator's mean by its frame count:

    output = n1 * mean1 + n2 * mean2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregate import AggregatorState
from .boundary import DblConfig, DblState
from .errors import NoPrediction
from .records import FrameRecord


@dataclass(frozen=True)
class BoundaryEvent:
    """One aggregator reset: at which frame, and which aggregator flushed."""

    frame_index: int
    agg_index: int


def combined_output(agg_a: AggregatorState, agg_b: AggregatorState) -> np.ndarray:
    """Frame-count-weighted sum of the two aggregator outputs.

    A term with n == 0 contributes a zero vector; raises NoPrediction only
    when both are empty.
    """
    if agg_a.n == 0 and agg_b.n == 0:
        raise NoPrediction("both aggregators are empty")
    out = np.zeros(agg_a.num_classes, dtype=np.float64)
    if agg_a.n > 0:
        out += agg_a.n * agg_a.output()
    if agg_b.n > 0:
        out += agg_b.n * agg_b.output()
    return out


class TwoFoldState:
    """State machine coordinating two aggregators and their drift detectors.

    armed_index names the detector that is armed, or the one that will arm
    when the hand-off countdown expires; the countdown is present iff neither
    detector is armed. During that window no anomaly can fire at all.
    """

    def __init__(self, feature_dim: int, num_classes: int, dbl_config: DblConfig,
                 delta: int):
        if delta < 1:
            raise ValueError("delta must be >= 1")
        self.aggs = (AggregatorState(feature_dim, num_classes),
                     AggregatorState(feature_dim, num_classes))
        self.dbls = (DblState(dbl_config, feature_dim, armed=True),
                     DblState(dbl_config, feature_dim, armed=False))
        self.armed_index = 0
        self.pending_arm_countdown: int | None = None
        self.delta = delta

    def step_vec(self, feature: np.ndarray, logits: np.ndarray,
                 frame_index: int) -> list[BoundaryEvent]:
        events: list[BoundaryEvent] = []
        if self.pending_arm_countdown is not None:
            self.pending_arm_countdown -= 1
            if self.pending_arm_countdown == 0:
                self.pending_arm_countdown = None
                detector = self.dbls[self.armed_index]
                agg = self.aggs[self.armed_index]
                if agg.n > 0:
                    detector.seed(agg.feature_mean, agg.n)
                detector.arm()
        if self.pending_arm_countdown is None:
            idx = self.armed_index
            if self.dbls[idx].armed and self.dbls[idx].step_vec(feature):
                events.append(BoundaryEvent(frame_index, idx))
                self.aggs[idx].reset()
                self.dbls[idx].disarm()
                self.armed_index = 1 - idx
                self.pending_arm_countdown = self.delta
        self.aggs[0].push_vec(feature, logits)
        self.aggs[1].push_vec(feature, logits)
        return events

    def step(self, record: FrameRecord) -> tuple["TwoFoldState", list[BoundaryEvent]]:
        events = self.step_vec(record.feature, record.logits, record.frame_index)
        return self, events

    def output(self) -> np.ndarray:
        return combined_output(self.aggs[0], self.aggs[1])

    def predict(self) -> int:
        """Argmax of the combined output, ties broken toward the lowest index."""
        return int(np.argmax(self.output()))


def a2_step(state: TwoFoldState, record: FrameRecord) -> tuple[TwoFoldState, list[BoundaryEvent]]:
    return state.step(record)


def a2_output(state: TwoFoldState) -> np.ndarray:
    return state.output()
