"""Pure-Python/numpy kernel backend.

Drives the step-level state machines (aggregate, boundary, twofold) over
whole arrays. The compiled backend in _kernels.pyx implements the same
interface; _backend picks one at import time. Metric/reference arguments are
small ints so both backends share a signature:

    metric:    0 = mean squared error, 1 = cosine distance
    reference: 0 = segment mean,       1 = previous frame
"""

from __future__ import annotations

import numpy as np

from .aggregate import AggregatorState
from .boundary import DblConfig, DblState, Metric, Reference
from .twofold import TwoFoldState

BACKEND_NAME = "pure"

_METRICS = {0: Metric.MSE, 1: Metric.COSINE_DISTANCE}
_REFERENCES = {0: Reference.SEGMENT_MEAN, 1: Reference.PREVIOUS_FRAME}


def _dbl_config(tau: float, metric: int, reference: int, warmup: int) -> DblConfig:
    return DblConfig(threshold=tau, metric=_METRICS[metric],
                     reference=_REFERENCES[reference], warmup=warmup)


class SingleStepper:
    """One aggregator plus an always-armed drift detector."""

    def __init__(self, feature_dim: int, num_classes: int, tau: float,
                 metric: int, reference: int, warmup: int):
        self.agg = AggregatorState(feature_dim, num_classes)
        self.dbl = DblState(_dbl_config(tau, metric, reference, warmup),
                            feature_dim, armed=True)
        self._features: np.ndarray | None = None
        self._logits: np.ndarray | None = None

    def bind(self, features: np.ndarray, logits: np.ndarray) -> None:
        self._features = features
        self._logits = logits

    def step(self, t: int) -> int:
        feature = self._features[t]
        reset = self.dbl.step_vec(feature)
        if reset:
            self.agg.reset()
        self.agg.push_vec(feature, self._logits[t])
        return int(reset)

    def read_sum(self, out: np.ndarray) -> int:
        out[:] = self.agg.logit_sum
        return self.agg.n


class TwoFoldStepper:
    """Two-fold aggregator; step returns 1 + index of the aggregator that reset."""

    def __init__(self, feature_dim: int, num_classes: int, tau: float,
                 metric: int, reference: int, warmup: int, delta: int):
        self.state = TwoFoldState(feature_dim, num_classes,
                                  _dbl_config(tau, metric, reference, warmup), delta)
        self._features: np.ndarray | None = None
        self._logits: np.ndarray | None = None

    def bind(self, features: np.ndarray, logits: np.ndarray) -> None:
        self._features = features
        self._logits = logits

    def step(self, t: int) -> int:
        events = self.state.step_vec(self._features[t], self._logits[t], t)
        return 1 + events[0].agg_index if events else 0

    def read_sums(self, out_a: np.ndarray, out_b: np.ndarray) -> tuple[int, int]:
        out_a[:] = self.state.aggs[0].logit_sum
        out_b[:] = self.state.aggs[1].logit_sum
        return self.state.aggs[0].n, self.state.aggs[1].n


class SblStepper:
    """Aggregator with a fixed reset period; the reset lands after the frame.

    The reset is applied at the start of the next step so that a read after
    step(t) sees the state the frame-t evaluation should see.
    """

    def __init__(self, feature_dim: int, num_classes: int, k: int):
        self.agg = AggregatorState(feature_dim, num_classes)
        self.k = k
        self._pending_reset = False
        self._features: np.ndarray | None = None
        self._logits: np.ndarray | None = None

    def bind(self, features: np.ndarray, logits: np.ndarray) -> None:
        self._features = features
        self._logits = logits

    def step(self, t: int) -> int:
        if self._pending_reset:
            self.agg.reset()
            self._pending_reset = False
        self.agg.push_vec(self._features[t], self._logits[t])
        fired = (t + 1) % self.k == 0
        self._pending_reset = fired
        return int(fired)

    def read_sum(self, out: np.ndarray) -> int:
        out[:] = self.agg.logit_sum
        return self.agg.n


def run_plain(logits: np.ndarray, resets: np.ndarray,
              evals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate with externally scheduled resets (applied before the frame)."""
    num_frames, num_classes = logits.shape
    sums = np.zeros((len(evals), num_classes))
    counts = np.zeros(len(evals), dtype=np.int64)
    acc = np.zeros(num_classes)
    n = 0
    r_ptr = e_ptr = 0
    for t in range(num_frames):
        if r_ptr < len(resets) and resets[r_ptr] == t:
            acc[:] = 0.0
            n = 0
            r_ptr += 1
        acc += logits[t]
        n += 1
        if e_ptr < len(evals) and evals[e_ptr] == t:
            sums[e_ptr] = acc
            counts[e_ptr] = n
            e_ptr += 1
    return sums, counts


def run_sbl(features: np.ndarray, logits: np.ndarray, k: int,
            evals: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    num_frames, num_classes = logits.shape
    stepper = SblStepper(features.shape[1], num_classes, k)
    stepper.bind(features, logits)
    sums = np.zeros((len(evals), num_classes))
    counts = np.zeros(len(evals), dtype=np.int64)
    reset_frames = []
    e_ptr = 0
    for t in range(num_frames):
        if stepper.step(t):
            reset_frames.append(t)
        if e_ptr < len(evals) and evals[e_ptr] == t:
            counts[e_ptr] = stepper.read_sum(sums[e_ptr])
            e_ptr += 1
    return sums, counts, np.asarray(reset_frames, dtype=np.int64)


def run_dbl(features: np.ndarray, logits: np.ndarray, tau: float, metric: int,
            reference: int, warmup: int,
            evals: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    num_frames, num_classes = logits.shape
    stepper = SingleStepper(features.shape[1], num_classes, tau, metric,
                            reference, warmup)
    stepper.bind(features, logits)
    sums = np.zeros((len(evals), num_classes))
    counts = np.zeros(len(evals), dtype=np.int64)
    event_frames = []
    e_ptr = 0
    for t in range(num_frames):
        if stepper.step(t):
            event_frames.append(t)
        if e_ptr < len(evals) and evals[e_ptr] == t:
            counts[e_ptr] = stepper.read_sum(sums[e_ptr])
            e_ptr += 1
    return sums, counts, np.asarray(event_frames, dtype=np.int64)


def run_a2(features: np.ndarray, logits: np.ndarray, tau: float, metric: int,
           reference: int, warmup: int, delta: int, evals: np.ndarray
           ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray,
                      np.ndarray, np.ndarray]:
    num_frames, num_classes = logits.shape
    stepper = TwoFoldStepper(features.shape[1], num_classes, tau, metric,
                             reference, warmup, delta)
    stepper.bind(features, logits)
    n_eval = len(evals)
    sums_a = np.zeros((n_eval, num_classes))
    sums_b = np.zeros((n_eval, num_classes))
    counts_a = np.zeros(n_eval, dtype=np.int64)
    counts_b = np.zeros(n_eval, dtype=np.int64)
    event_frames = []
    event_aggs = []
    e_ptr = 0
    for t in range(num_frames):
        hit = stepper.step(t)
        if hit:
            event_frames.append(t)
            event_aggs.append(hit - 1)
        if e_ptr < len(evals) and evals[e_ptr] == t:
            counts_a[e_ptr], counts_b[e_ptr] = stepper.read_sums(sums_a[e_ptr],
                                                                 sums_b[e_ptr])
            e_ptr += 1
    return (sums_a, sums_b, counts_a, counts_b,
            np.asarray(event_frames, dtype=np.int64),
            np.asarray(event_aggs, dtype=np.uint8))
