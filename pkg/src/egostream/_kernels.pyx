# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend: per-frame step loops as C code.

Mirrors _pykernels operation-for-operation (same update order, float64
accumulators over float32 inputs) so the two backends stay interchangeable.
Metric ints: 0 = MSE, 1 = cosine distance. Reference ints: 0 = segment mean,
1 = previous frame.
"""

import numpy as np

from libc.math cimport sqrt

BACKEND_NAME = "compiled"


cdef inline double _distance(const float[:, ::1] feats, Py_ssize_t t,
                             const double[::1] ref, Py_ssize_t dim,
                             int metric) noexcept nogil:
    cdef double acc = 0.0, dot = 0.0, nf = 0.0, nr = 0.0, d
    cdef Py_ssize_t j
    if metric == 0:
        for j in range(dim):
            d = <double>feats[t, j] - ref[j]
            acc += d * d
        return acc / dim
    for j in range(dim):
        dot += <double>feats[t, j] * ref[j]
        nf += <double>feats[t, j] * <double>feats[t, j]
        nr += ref[j] * ref[j]
    if nf == 0.0 or nr == 0.0:
        return 1.0
    return 1.0 - dot / (sqrt(nf) * sqrt(nr))


cdef class SingleStepper:
    """Aggregator plus always-armed drift detector, one frame per step call."""

    cdef float[:, ::1] feats
    cdef float[:, ::1] logits
    cdef double[::1] ref
    cdef double[::1] agg_sum
    cdef double[::1] agg_fmean
    cdef long agg_n, ref_count, since_reset, warmup
    cdef bint seeded
    cdef double tau
    cdef int metric, refkind
    cdef Py_ssize_t dim, n_cls

    def __init__(self, Py_ssize_t feature_dim, Py_ssize_t num_classes, double tau,
                 int metric, int reference, long warmup):
        self.dim = feature_dim
        self.n_cls = num_classes
        self.tau = tau
        self.metric = metric
        self.refkind = reference
        self.warmup = warmup
        self.ref = np.zeros(feature_dim)
        self.agg_sum = np.zeros(num_classes)
        self.agg_fmean = np.zeros(feature_dim)
        self.agg_n = 0
        self.ref_count = 0
        self.since_reset = 0
        self.seeded = False

    def bind(self, float[:, ::1] features, float[:, ::1] logits):
        self.feats = features
        self.logits = logits

    cdef int step_c(self, Py_ssize_t t) noexcept nogil:
        cdef Py_ssize_t j
        cdef int reset = 0
        if self.seeded and self.since_reset >= self.warmup and \
                _distance(self.feats, t, self.ref, self.dim, self.metric) > self.tau:
            reset = 1
            for j in range(self.dim):
                self.ref[j] = <double>self.feats[t, j]
            self.ref_count = 1
            self.since_reset = 0
            self.agg_n = 0
            for j in range(self.n_cls):
                self.agg_sum[j] = 0.0
            for j in range(self.dim):
                self.agg_fmean[j] = 0.0
        else:
            if not self.seeded:
                for j in range(self.dim):
                    self.ref[j] = <double>self.feats[t, j]
                self.ref_count = 1
                self.seeded = True
            elif self.refkind == 0:
                self.ref_count += 1
                for j in range(self.dim):
                    self.ref[j] += (<double>self.feats[t, j] - self.ref[j]) / self.ref_count
            else:
                for j in range(self.dim):
                    self.ref[j] = <double>self.feats[t, j]
            self.since_reset += 1
        self.agg_n += 1
        for j in range(self.n_cls):
            self.agg_sum[j] += <double>self.logits[t, j]
        for j in range(self.dim):
            self.agg_fmean[j] += (<double>self.feats[t, j] - self.agg_fmean[j]) / self.agg_n
        return reset

    def step(self, Py_ssize_t t):
        return self.step_c(t)

    def read_sum(self, double[::1] out):
        cdef Py_ssize_t j
        for j in range(self.n_cls):
            out[j] = self.agg_sum[j]
        return self.agg_n


cdef class TwoFoldStepper:
    """Two aggregators with alternating drift arming and delayed hand-off."""

    cdef float[:, ::1] feats
    cdef float[:, ::1] logits
    cdef double[:, ::1] ref        # (2, D)
    cdef double[:, ::1] agg_fmean  # (2, D)
    cdef double[:, ::1] agg_sum    # (2, C)
    cdef long[::1] agg_n, ref_count, since_reset
    cdef bint armed0, armed1, seeded0, seeded1
    cdef long countdown, delta, warmup
    cdef int armed_index
    cdef double tau
    cdef int metric, refkind
    cdef Py_ssize_t dim, n_cls

    def __init__(self, Py_ssize_t feature_dim, Py_ssize_t num_classes, double tau,
                 int metric, int reference, long warmup, long delta):
        if delta < 1:
            raise ValueError("delta must be >= 1")
        self.dim = feature_dim
        self.n_cls = num_classes
        self.tau = tau
        self.metric = metric
        self.refkind = reference
        self.warmup = warmup
        self.delta = delta
        self.ref = np.zeros((2, feature_dim))
        self.agg_fmean = np.zeros((2, feature_dim))
        self.agg_sum = np.zeros((2, num_classes))
        self.agg_n = np.zeros(2, dtype=np.int64)
        self.ref_count = np.zeros(2, dtype=np.int64)
        self.since_reset = np.zeros(2, dtype=np.int64)
        self.armed0 = True
        self.armed1 = False
        self.seeded0 = False
        self.seeded1 = False
        self.countdown = -1
        self.armed_index = 0

    def bind(self, float[:, ::1] features, float[:, ::1] logits):
        self.feats = features
        self.logits = logits

    cdef int step_c(self, Py_ssize_t t) noexcept nogil:
        cdef Py_ssize_t j
        cdef int event = 0
        cdef int ai
        cdef bint armed, seeded
        # expire the hand-off countdown: re-arm, seeding from own aggregator mean
        if self.countdown >= 0:
            self.countdown -= 1
            if self.countdown == 0:
                self.countdown = -1
                ai = self.armed_index
                if self.agg_n[ai] > 0:
                    for j in range(self.dim):
                        self.ref[ai, j] = self.agg_fmean[ai, j]
                    self.ref_count[ai] = self.agg_n[ai]
                    self.since_reset[ai] = 0
                    if ai == 0:
                        self.seeded0 = True
                    else:
                        self.seeded1 = True
                if ai == 0:
                    self.armed0 = True
                else:
                    self.armed1 = True
        if self.countdown < 0:
            ai = self.armed_index
            armed = self.armed0 if ai == 0 else self.armed1
            seeded = self.seeded0 if ai == 0 else self.seeded1
            if armed:
                if seeded and self.since_reset[ai] >= self.warmup and \
                        _distance(self.feats, t, self.ref[ai], self.dim,
                                  self.metric) > self.tau:
                    # detector fires: its aggregator flushes and starts the new
                    # action from this frame; the other arms delta frames later
                    event = 1 + ai
                    for j in range(self.dim):
                        self.ref[ai, j] = <double>self.feats[t, j]
                    self.ref_count[ai] = 1
                    self.since_reset[ai] = 0
                    self.agg_n[ai] = 0
                    for j in range(self.n_cls):
                        self.agg_sum[ai, j] = 0.0
                    for j in range(self.dim):
                        self.agg_fmean[ai, j] = 0.0
                    if ai == 0:
                        self.armed0 = False
                    else:
                        self.armed1 = False
                    self.armed_index = 1 - ai
                    self.countdown = self.delta
                else:
                    if not seeded:
                        for j in range(self.dim):
                            self.ref[ai, j] = <double>self.feats[t, j]
                        self.ref_count[ai] = 1
                        if ai == 0:
                            self.seeded0 = True
                        else:
                            self.seeded1 = True
                    elif self.refkind == 0:
                        self.ref_count[ai] += 1
                        for j in range(self.dim):
                            self.ref[ai, j] += (<double>self.feats[t, j] -
                                                self.ref[ai, j]) / self.ref_count[ai]
                    else:
                        for j in range(self.dim):
                            self.ref[ai, j] = <double>self.feats[t, j]
                    self.since_reset[ai] += 1
        # both aggregators push every frame
        for ai in range(2):
            self.agg_n[ai] += 1
            for j in range(self.n_cls):
                self.agg_sum[ai, j] += <double>self.logits[t, j]
            for j in range(self.dim):
                self.agg_fmean[ai, j] += (<double>self.feats[t, j] -
                                          self.agg_fmean[ai, j]) / self.agg_n[ai]
        return event

    def step(self, Py_ssize_t t):
        return self.step_c(t)

    def read_sums(self, double[::1] out_a, double[::1] out_b):
        cdef Py_ssize_t j
        for j in range(self.n_cls):
            out_a[j] = self.agg_sum[0, j]
            out_b[j] = self.agg_sum[1, j]
        return self.agg_n[0], self.agg_n[1]


cdef class SblStepper:
    """Aggregator with a fixed reset period; reset applies after the frame."""

    cdef float[:, ::1] feats
    cdef float[:, ::1] logits
    cdef double[::1] agg_sum
    cdef double[::1] agg_fmean
    cdef long agg_n, k
    cdef bint pending
    cdef Py_ssize_t dim, n_cls

    def __init__(self, Py_ssize_t feature_dim, Py_ssize_t num_classes, long k):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.dim = feature_dim
        self.n_cls = num_classes
        self.k = k
        self.agg_sum = np.zeros(num_classes)
        self.agg_fmean = np.zeros(feature_dim)
        self.agg_n = 0
        self.pending = False

    def bind(self, float[:, ::1] features, float[:, ::1] logits):
        self.feats = features
        self.logits = logits

    cdef int step_c(self, Py_ssize_t t) noexcept nogil:
        cdef Py_ssize_t j
        cdef int fired = 0
        if self.pending:
            self.agg_n = 0
            for j in range(self.n_cls):
                self.agg_sum[j] = 0.0
            for j in range(self.dim):
                self.agg_fmean[j] = 0.0
            self.pending = False
        self.agg_n += 1
        for j in range(self.n_cls):
            self.agg_sum[j] += <double>self.logits[t, j]
        for j in range(self.dim):
            self.agg_fmean[j] += (<double>self.feats[t, j] - self.agg_fmean[j]) / self.agg_n
        if (t + 1) % self.k == 0:
            fired = 1
            self.pending = True
        return fired

    def step(self, Py_ssize_t t):
        return self.step_c(t)

    def read_sum(self, double[::1] out):
        cdef Py_ssize_t j
        for j in range(self.n_cls):
            out[j] = self.agg_sum[j]
        return self.agg_n


def run_plain(float[:, ::1] logits, long[::1] resets, long[::1] evals):
    """Aggregate with externally scheduled resets (applied before the frame)."""
    cdef Py_ssize_t num_frames = logits.shape[0]
    cdef Py_ssize_t n_cls = logits.shape[1]
    cdef Py_ssize_t n_evals = evals.shape[0]
    cdef Py_ssize_t n_resets = resets.shape[0]
    sums_arr = np.zeros((n_evals, n_cls))
    counts_arr = np.zeros(n_evals, dtype=np.int64)
    acc_arr = np.zeros(n_cls)
    cdef double[:, ::1] sums = sums_arr
    cdef long[::1] counts = counts_arr
    cdef double[::1] acc = acc_arr
    cdef long n = 0
    cdef Py_ssize_t t, j, r_ptr = 0, e_ptr = 0
    with nogil:
        for t in range(num_frames):
            if r_ptr < n_resets and resets[r_ptr] == t:
                n = 0
                for j in range(n_cls):
                    acc[j] = 0.0
                r_ptr += 1
            n += 1
            for j in range(n_cls):
                acc[j] += <double>logits[t, j]
            if e_ptr < n_evals and evals[e_ptr] == t:
                for j in range(n_cls):
                    sums[e_ptr, j] = acc[j]
                counts[e_ptr] = n
                e_ptr += 1
    return sums_arr, counts_arr


def run_sbl(float[:, ::1] features, float[:, ::1] logits, long k, long[::1] evals):
    cdef Py_ssize_t num_frames = logits.shape[0]
    cdef Py_ssize_t n_evals = evals.shape[0]
    cdef SblStepper stepper = SblStepper(features.shape[1], logits.shape[1], k)
    stepper.bind(features, logits)
    sums_arr = np.zeros((n_evals, logits.shape[1]))
    counts_arr = np.zeros(n_evals, dtype=np.int64)
    events_arr = np.empty(num_frames, dtype=np.int64)
    cdef double[:, ::1] sums = sums_arr
    cdef long[::1] counts = counts_arr
    cdef long[::1] events = events_arr
    cdef Py_ssize_t t, j, e_ptr = 0, n_events = 0
    cdef Py_ssize_t n_cls = logits.shape[1]
    with nogil:
        for t in range(num_frames):
            if stepper.step_c(t):
                events[n_events] = t
                n_events += 1
            if e_ptr < n_evals and evals[e_ptr] == t:
                for j in range(n_cls):
                    sums[e_ptr, j] = stepper.agg_sum[j]
                counts[e_ptr] = stepper.agg_n
                e_ptr += 1
    return sums_arr, counts_arr, events_arr[:n_events].copy()


def run_dbl(float[:, ::1] features, float[:, ::1] logits, double tau, int metric,
            int reference, long warmup, long[::1] evals):
    cdef Py_ssize_t num_frames = logits.shape[0]
    cdef Py_ssize_t n_cls = logits.shape[1]
    cdef Py_ssize_t n_evals = evals.shape[0]
    cdef SingleStepper stepper = SingleStepper(features.shape[1], n_cls, tau,
                                               metric, reference, warmup)
    stepper.bind(features, logits)
    sums_arr = np.zeros((n_evals, n_cls))
    counts_arr = np.zeros(n_evals, dtype=np.int64)
    events_arr = np.empty(num_frames, dtype=np.int64)
    cdef double[:, ::1] sums = sums_arr
    cdef long[::1] counts = counts_arr
    cdef long[::1] events = events_arr
    cdef Py_ssize_t t, j, e_ptr = 0, n_events = 0
    with nogil:
        for t in range(num_frames):
            if stepper.step_c(t):
                events[n_events] = t
                n_events += 1
            if e_ptr < n_evals and evals[e_ptr] == t:
                for j in range(n_cls):
                    sums[e_ptr, j] = stepper.agg_sum[j]
                counts[e_ptr] = stepper.agg_n
                e_ptr += 1
    return sums_arr, counts_arr, events_arr[:n_events].copy()


def run_a2(float[:, ::1] features, float[:, ::1] logits, double tau, int metric,
           int reference, long warmup, long delta, long[::1] evals):
    cdef Py_ssize_t num_frames = logits.shape[0]
    cdef Py_ssize_t n_cls = logits.shape[1]
    cdef Py_ssize_t n_evals = evals.shape[0]
    cdef TwoFoldStepper stepper = TwoFoldStepper(features.shape[1], n_cls, tau,
                                                 metric, reference, warmup, delta)
    stepper.bind(features, logits)
    sums_a_arr = np.zeros((n_evals, n_cls))
    sums_b_arr = np.zeros((n_evals, n_cls))
    counts_a_arr = np.zeros(n_evals, dtype=np.int64)
    counts_b_arr = np.zeros(n_evals, dtype=np.int64)
    event_frames_arr = np.empty(num_frames, dtype=np.int64)
    event_aggs_arr = np.empty(num_frames, dtype=np.uint8)
    cdef double[:, ::1] sums_a = sums_a_arr
    cdef double[:, ::1] sums_b = sums_b_arr
    cdef long[::1] counts_a = counts_a_arr
    cdef long[::1] counts_b = counts_b_arr
    cdef long[::1] event_frames = event_frames_arr
    cdef unsigned char[::1] event_aggs = event_aggs_arr
    cdef Py_ssize_t t, j, e_ptr = 0, n_events = 0
    cdef int hit
    with nogil:
        for t in range(num_frames):
            hit = stepper.step_c(t)
            if hit:
                event_frames[n_events] = t
                event_aggs[n_events] = <unsigned char>(hit - 1)
                n_events += 1
            if e_ptr < n_evals and evals[e_ptr] == t:
                for j in range(n_cls):
                    sums_a[e_ptr, j] = stepper.agg_sum[0, j]
                    sums_b[e_ptr, j] = stepper.agg_sum[1, j]
                counts_a[e_ptr] = stepper.agg_n[0]
                counts_b[e_ptr] = stepper.agg_n[1]
                e_ptr += 1
    return (sums_a_arr, sums_b_arr, counts_a_arr, counts_b_arr,
            event_frames_arr[:n_events].copy(), event_aggs_arr[:n_events].copy())
