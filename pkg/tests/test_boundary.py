import numpy as np
import pytest

from egostream import (DblConfig, DblState, DimensionMismatch, Metric,
                       Reference, SblConfig, dbl_distance, dbl_step, sbl_step)
from egostream.records import FrameRecord
from egostream.synth import SynthConfig, generate, oracle_boundaries


class TestDistance:
    def test_identity_is_zero(self):
        v = np.array([1.0, 2.0, 3.0])
        assert dbl_distance(v, v, Metric.MSE) == 0.0

    def test_mse_value(self):
        assert dbl_distance(np.array([2.0, 0.0]), np.zeros(2), Metric.MSE) == 2.0

    def test_mse_matches_scalar_loop_oracle(self, rng):
        f = rng.standard_normal(256)
        r = rng.standard_normal(256)
        oracle = 0.0
        for a, b in zip(f, r):
            oracle += (a - b) ** 2
        oracle /= 256
        assert dbl_distance(f, r, Metric.MSE) == pytest.approx(oracle, rel=1e-6)

    def test_cosine_matches_scalar_loop_oracle(self, rng):
        f = rng.standard_normal(256)
        r = rng.standard_normal(256)
        dot = nf = nr = 0.0
        for a, b in zip(f, r):
            dot += a * b
            nf += a * a
            nr += b * b
        oracle = 1.0 - dot / (nf ** 0.5 * nr ** 0.5)
        assert dbl_distance(f, r, Metric.COSINE_DISTANCE) == pytest.approx(oracle, rel=1e-6)

    def test_cosine_extremes(self):
        e0 = np.array([1.0, 0.0])
        e1 = np.array([0.0, 1.0])
        assert dbl_distance(e0, e1, Metric.COSINE_DISTANCE) == pytest.approx(1.0)
        assert dbl_distance(e0, 3.0 * e0, Metric.COSINE_DISTANCE) == pytest.approx(0.0)
        assert dbl_distance(e0, np.zeros(2), Metric.COSINE_DISTANCE) == 1.0
        assert dbl_distance(np.zeros(2), e0, Metric.COSINE_DISTANCE) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            dbl_distance(np.zeros(3), np.zeros(4), Metric.MSE)


def drive(features, config, armed=True):
    """Step a detector over rows; returns the flagged frame indices."""
    state = DblState(config, features.shape[1], armed=armed)
    flagged = []
    for t in range(features.shape[0]):
        record = FrameRecord(t, features[t], np.zeros(1, dtype=np.float32))
        state, anomaly = dbl_step(state, record)
        if anomaly:
            flagged.append(t)
    return flagged


class TestDblStep:
    def test_zero_noise_fires_at_segment_starts(self):
        config = SynthConfig.random(5, 16, seed=7, within_action_noise=0.0)
        ds = generate(config, 6)
        tau = 0.5 * config.min_centroid_mse_gap()
        flagged = drive(ds.features, DblConfig(threshold=tau, warmup=0))
        assert flagged == oracle_boundaries(ds)

    def test_constant_stream_never_fires(self):
        features = np.ones((200, 8), dtype=np.float32)
        assert drive(features, DblConfig(threshold=1e-9, warmup=0)) == []

    def test_disarmed_never_fires(self):
        features = np.zeros((50, 4), dtype=np.float32)
        features[25:] = 100.0
        assert drive(features, DblConfig(threshold=0.1, warmup=0), armed=False) == []

    def test_warmup_suppresses_anomalies(self):
        # alternate wildly every frame: with warmup w the first fire happens
        # once w frames have accumulated since the last reset
        features = np.zeros((20, 4), dtype=np.float32)
        features[1::2] = 10.0
        flagged = drive(features, DblConfig(threshold=0.5, warmup=3))
        assert flagged[0] == 3
        for a, b in zip(flagged, flagged[1:]):
            assert b - a >= 3

    def test_anomaly_reseeds_reference_with_trigger_frame(self):
        config = DblConfig(threshold=0.5, warmup=0)
        state = DblState(config, 2)
        state.step_vec(np.array([0.0, 0.0], dtype=np.float32))
        assert state.step_vec(np.array([5.0, 5.0], dtype=np.float32))
        assert np.allclose(state.reference_feature, [5.0, 5.0])
        assert state.frames_since_reset == 0
        # the frame right after the jump is close to the new reference
        assert not state.step_vec(np.array([5.0, 5.1], dtype=np.float32))

    def test_previous_frame_reference_tracks_last_frame(self):
        config = DblConfig(threshold=0.5, reference=Reference.PREVIOUS_FRAME, warmup=0)
        state = DblState(config, 1)
        drift = np.linspace(0.0, 50.0, 200, dtype=np.float32).reshape(-1, 1)
        fired = [t for t in range(200) if state.step_vec(drift[t])]
        assert fired == []  # slow drift never jumps between consecutive frames
        mean_state = DblState(DblConfig(threshold=0.5, warmup=0), 1)
        fired_mean = [t for t in range(200) if mean_state.step_vec(drift[t])]
        assert fired_mean  # the same drift does escape a segment-mean reference

    def test_scale_relation_mse(self, rng):
        # distances scale by s^2, so (features, tau) and (s*features, s^2*tau)
        # make identical decisions; s = 2 keeps the scaling exact in floats
        features = rng.standard_normal((300, 8)).astype(np.float32)
        features[150:] += 4.0
        s = 2.0
        tau = 0.8
        base = drive(features, DblConfig(threshold=tau, warmup=0))
        scaled = drive(s * features, DblConfig(threshold=s * s * tau, warmup=0))
        assert base == scaled
        assert base  # the jump at 150 actually fires

    def test_threshold_monotonicity_frozen_references(self, rng):
        # replay against a frozen reference trajectory: the flagged set at a
        # higher threshold is a subset of the flagged set at a lower one
        features = rng.standard_normal((400, 6)).astype(np.float32)
        features[100:200] += 2.0
        features[300:] -= 2.0
        state = DblState(DblConfig(threshold=0.5, warmup=0), 6)
        distances = []
        for t in range(features.shape[0]):
            if state.reference_feature is None:
                distances.append(0.0)
            else:
                distances.append(dbl_distance(features[t], state.reference_feature,
                                              Metric.MSE))
            state.step_vec(features[t])
        distances = np.asarray(distances)
        for tau_low, tau_high in [(0.2, 0.5), (0.5, 1.5), (0.2, 1.5)]:
            flagged_low = set(np.nonzero(distances > tau_low)[0])
            flagged_high = set(np.nonzero(distances > tau_high)[0])
            assert flagged_high <= flagged_low


class TestSblStep:
    def test_period_sixteen(self):
        counter = 0
        fired = []
        for t in range(64):
            counter, reset = sbl_step(counter, 16)
            if reset:
                fired.append(t)
        assert fired == [15, 31, 47, 63]

    def test_every_frame_with_k_one(self):
        counter = 0
        for t in range(5):
            counter, reset = sbl_step(counter, 1)
            assert reset

    @pytest.mark.parametrize("k", [1, 3, 16, 100, 9999])
    def test_reset_count_oracle(self, k):
        counter = 0
        resets = 0
        for _ in range(10_000):
            counter, reset = sbl_step(counter, k)
            resets += int(reset)
        assert resets == 10_000 // k

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SblConfig(0)
        with pytest.raises(ValueError):
            sbl_step(0, 0)
