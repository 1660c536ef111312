"""Acceptance suite: one test per release criterion, tolerances pinned here.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line per
criterion.
"""

import time
from contextlib import contextmanager

import numpy as np

from egostream import (A2Strategy, AggregatorState, DblConfig, DblStrategy,
                       ExternalStrategy, FrameRecord, Mode, ProtocolSpec,
                       SamplerKind, SamplerSpec, Trimming,
                       accuracy_vs_percentage, backend_name, generate,
                       open_stream, oracle_boundaries, run_online,
                       run_streaming, segment_predictions, write_stream)
from egostream._backend import KERNELS
from egostream.bench import bench_pipeline, measure_alloc_growth
from egostream.synth import SynthConfig, with_seed
from egostream.twofold import combined_output

from conftest import make_manifest


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


STREAMING = ProtocolSpec(mode=Mode.STREAMING)


def online(strategy):
    return ProtocolSpec(mode=Mode.ONLINE, trimming=Trimming.UNTRIMMED,
                        strategy=strategy)


def test_eq1_identity_suite():
    """1000 random push/reset schedules: combined output == sum of logit sums
    within 1e-6 relative error, in under 5 seconds."""
    with criterion("eq1-identity"):
        rng = np.random.default_rng(99)
        start = time.perf_counter()
        checked = 0
        for _ in range(1000):
            a1, a2 = AggregatorState(4, 6), AggregatorState(4, 6)
            for op in rng.integers(0, 5, size=rng.integers(5, 60)):
                feature = rng.standard_normal(4).astype(np.float32)
                logits = (10.0 * rng.standard_normal(6)).astype(np.float32)
                if op == 0:
                    a1.push_vec(feature, logits)
                elif op == 1:
                    a2.push_vec(feature, logits)
                elif op in (2, 3):
                    a1.push_vec(feature, logits)
                    a2.push_vec(feature, logits)
                else:
                    (a1 if rng.random() < 0.5 else a2).reset()
            if a1.n + a2.n == 0:
                continue
            expected = a1.logit_sum + a2.logit_sum
            assert np.allclose(combined_output(a1, a2), expected,
                               rtol=1e-6, atol=1e-9)
            checked += 1
        elapsed = time.perf_counter() - start
        assert checked >= 900
        assert elapsed < 5.0, f"identity suite took {elapsed:.2f}s"


def _clean_videos(count=100, segments=12):
    videos = []
    for seed in range(count):
        config = SynthConfig.random(5, 16, seed=1000 + seed,
                                    within_action_noise=0.0, min_frames=20,
                                    max_frames=50,
                                    unknown_gap_probability=0.4 * (seed % 2))
        videos.append(generate(config, segments, video_id=f"v{seed}"))
    return videos


def test_protocol_equivalence_on_clean_streams():
    """Offline (dense full-window), streaming, and online with true boundaries
    agree segment-by-segment on 100 zero-noise videos; accuracy exactly 1.0."""
    with criterion("protocol-equivalence"):
        offline_spec = ProtocolSpec(
            mode=Mode.OFFLINE,
            sampler=SamplerSpec(SamplerKind.DENSE, frames_per_clip=None))
        for ds in _clean_videos(100):
            labels = [s.label for s in ds.labeled_segments()]
            off, _ = segment_predictions(ds, offline_spec)
            stream, _ = segment_predictions(ds, STREAMING)
            on, _ = segment_predictions(
                ds, online(ExternalStrategy(oracle_boundaries(ds))))
            assert off == stream == on
            assert off == labels  # accuracy exactly 1.0


def test_dbl_boundary_oracle():
    """Zero noise: recall 1.0 / zero false positives for any threshold below
    the smallest centroid gap. With noise sized so the expected within-segment
    distance is below tau/2: recall >= 0.95 within +-3 frames, 500 boundaries."""
    with criterion("dbl-oracle"):
        # exact part, thresholds spanning the valid open interval
        for seed in range(5):
            config = SynthConfig.random(6, 32, seed=2000 + seed,
                                        within_action_noise=0.0,
                                        min_frames=40, max_frames=80)
            ds = generate(config, 40)
            gap = config.min_centroid_mse_gap()
            truth = oracle_boundaries(ds)
            for frac in (0.05, 0.5, 0.95):
                _, _, events = KERNELS.run_dbl(
                    ds.features, ds.logits, frac * gap, 0, 0, 0,
                    np.empty(0, dtype=np.int64))
                assert list(events) == truth  # recall 1.0, no false positives

        # noisy part: 500+ boundaries, +-3 frame tolerance
        matched = total = 0
        for seed in range(10):
            config = SynthConfig.random(6, 32, seed=3000 + seed,
                                        within_action_noise=0.0,
                                        min_frames=40, max_frames=80)
            gap = config.min_centroid_mse_gap()
            tau = 0.5 * gap
            sigma = float(np.sqrt(tau / 4.0))  # expected distance ~ tau/4 < tau/2
            noisy_cfg = SynthConfig(
                num_classes=6, feature_dim=32,
                class_centroids=config.class_centroids,
                within_action_noise=sigma, min_frames=40, max_frames=80,
                seed=config.seed)
            ds = generate(noisy_cfg, 53)
            truth = oracle_boundaries(ds)
            _, _, events = KERNELS.run_dbl(ds.features, ds.logits, tau, 0, 0, 5,
                                           np.empty(0, dtype=np.int64))
            events = np.asarray(events)
            total += len(truth)
            for b in truth:
                if len(events) and np.abs(events - b).min() <= 3:
                    matched += 1
        assert total >= 500
        recall = matched / total
        assert recall >= 0.95, f"recall {recall:.4f} over {total} boundaries"


def test_asynchrony_invariant():
    """Over 1e5 frames with frequent anomalies, consecutive cross-aggregator
    events stay >= delta frames apart for every delta in the sweep grid."""
    with criterion("asynchrony"):
        rng = np.random.default_rng(77)
        num_frames, dim = 100_000, 16
        features = rng.standard_normal((num_frames, dim)).astype(np.float32)
        block = 150
        shifts = rng.choice([-2.0, 2.0], size=(num_frames // block + 1, dim))
        for i in range(0, num_frames, block):
            features[i:i + block] += shifts[i // block].astype(np.float32)
        logits = rng.standard_normal((num_frames, 4)).astype(np.float32)
        for delta in (1, 5, 10, 20, 30, 40, 50):
            _, _, _, _, frames, aggs = KERNELS.run_a2(
                features, logits, 0.5, 0, 0, 0, delta,
                np.empty(0, dtype=np.int64))
            assert len(frames) > 100
            for i in range(1, len(frames)):
                assert aggs[i] != aggs[i - 1]
                assert frames[i] - frames[i - 1] >= delta


def test_directional_two_fold_advantage():
    """On overlap-heavy streams the two-fold aggregator matches or beats the
    single-aggregator detector on >= 9 of 10 seeds; streaming upper-bounds both."""
    with criterion("a2-directional"):
        wins = 0
        for seed in range(10):
            config = SynthConfig.random(5, 16, seed=4000 + seed,
                                        within_action_noise=0.05,
                                        min_frames=40, max_frames=80,
                                        overlap_fraction=0.5, overlap_length=20)
            ds = generate(config, 80)
            tau = 0.25 * config.min_centroid_mse_gap()
            dbl = DblConfig(threshold=tau, warmup=5)
            single = run_online(ds, online(DblStrategy(dbl))).mean_accuracy
            twofold = run_online(ds, online(A2Strategy(dbl, delta=20))).mean_accuracy
            upper = run_streaming(ds, STREAMING).mean_accuracy
            assert single <= upper + 1e-9
            assert twofold <= upper + 1e-9
            wins += int(twofold >= single)
        assert wins >= 9, f"two-fold won only {wins}/10 seeds"


def test_accuracy_vs_percentage_curve():
    """The p=1.0 point equals run_streaming exactly; on noisy streams accuracy
    at p=1.0 is within 0.02 of accuracy at p=0.1 over >= 500 segments."""
    with criterion("accuracy-vs-percentage"):
        ds = generate(SynthConfig.random(5, 16, seed=5000,
                                         within_action_noise=0.3,
                                         min_frames=20, max_frames=50), 60)
        curve = dict(accuracy_vs_percentage(ds, [1.0]))
        rep = run_streaming(ds, STREAMING)
        assert curve[1.0] == rep.per_pair_accuracy[("D1", "D1")]

        config = SynthConfig.random(5, 16, seed=5001, within_action_noise=0.0,
                                    min_frames=20, max_frames=50)
        ds = generate(with_seed(config, 5002), 520)
        rng = np.random.default_rng(5)
        from egostream import StreamDataset
        logits = (0.25 * ds.logits
                  + 1.2 * rng.standard_normal(ds.logits.shape)).astype(np.float32)
        noisy = StreamDataset(ds.manifest, ds.features, logits, ds.segments)
        assert len(noisy.labeled_segments()) >= 500
        points = dict(accuracy_vs_percentage(noisy, [0.1, 1.0]))
        assert points[1.0] >= points[0.1] - 0.02


def test_wire_format_roundtrip_fixpoint(tmp_path):
    """serialize -> parse -> serialize is a byte fixpoint for 100 random
    streams, including empty and single-frame streams."""
    with criterion("wire-roundtrip"):
        rng = np.random.default_rng(11)
        for case in range(100):
            num_frames = [0, 1][case] if case < 2 else int(rng.integers(0, 120))
            dim = int(rng.integers(1, 12))
            classes = int(rng.integers(2, 9))
            manifest = make_manifest(num_frames, dim, classes)
            records = [
                FrameRecord(i, rng.standard_normal(dim).astype(np.float32),
                            rng.standard_normal(classes).astype(np.float32))
                for i in range(num_frames)
            ]
            first = tmp_path / f"{case}-a.egws"
            second = tmp_path / f"{case}-b.egws"
            write_stream(records, manifest, first)
            write_stream(open_stream(first, manifest), manifest, second)
            assert first.read_bytes() == second.read_bytes()


def test_benchmark_sanity():
    """The pipeline step at D=1024, C=8 sustains >= 300x the 30 fps real-time
    budget, with no allocation growth after warmup."""
    with criterion("benchmark-sanity"):
        report = bench_pipeline("a2", feature_dim=1024, num_classes=8,
                                num_frames=20_000, warmup_frames=2_000)
        budget = 300 * 30.0
        assert report.throughput_fps >= budget, (
            f"{report.throughput_fps:.0f} fps < {budget:.0f} fps "
            f"({backend_name()} backend)")
        growth = measure_alloc_growth("a2", feature_dim=1024, num_classes=8,
                                      num_frames=10_000, warmup_frames=1_000)
        assert growth < 65_536, f"allocation grew by {growth} bytes"
