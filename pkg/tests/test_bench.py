import pytest

from egostream import InvalidConfig, backend_name
from egostream.bench import (bench_pipeline, compare_backends,
                             measure_alloc_growth)


class TestBenchPipeline:
    def test_report_fields_consistent(self):
        report = bench_pipeline("single", feature_dim=64, num_classes=4,
                                num_frames=4000, warmup_frames=500)
        assert report.frames_processed == 3500
        assert report.throughput_fps == pytest.approx(
            report.frames_processed / report.wall_time_s)
        assert report.latency_p50_us <= report.latency_p99_us
        assert report.backend == backend_name()
        assert report.strategy == "single"

    def test_deterministic_work(self):
        a = bench_pipeline("a2", feature_dim=32, num_classes=4,
                           num_frames=3000, warmup_frames=1000)
        b = bench_pipeline("a2", feature_dim=32, num_classes=4,
                           num_frames=3000, warmup_frames=1000)
        assert a.frames_processed == b.frames_processed
        assert a.resets == b.resets  # identical input -> identical resets

    def test_a2_cost_at_most_2p2x_single(self):
        # both aggregators push each step, so the two-fold loop costs at most
        # about twice the single one
        single = bench_pipeline("single", feature_dim=256, num_classes=8,
                                num_frames=12_000, warmup_frames=2_000)
        twofold = bench_pipeline("a2", feature_dim=256, num_classes=8,
                                 num_frames=12_000, warmup_frames=2_000)
        assert twofold.latency_p50_us <= 2.2 * single.latency_p50_us

    def test_no_allocation_growth_after_warmup(self):
        growth = measure_alloc_growth("a2", feature_dim=128, num_classes=8,
                                      num_frames=20_000, warmup_frames=1_000)
        assert growth < 65_536

    def test_invalid_configs(self):
        with pytest.raises(InvalidConfig):
            bench_pipeline("a2", num_frames=1500, warmup_frames=1000)
        with pytest.raises(InvalidConfig):
            bench_pipeline("nope", num_frames=5000, warmup_frames=100)
        with pytest.raises(InvalidConfig):
            bench_pipeline("a2", feature_dim=0, num_frames=5000, warmup_frames=100)

    def test_strategies_all_run(self):
        for strategy in ("single", "a2", "sbl"):
            report = bench_pipeline(strategy, feature_dim=16, num_classes=4,
                                    num_frames=2000, warmup_frames=200)
            assert report.frames_processed == 1800


class TestCompareBackends:
    def test_both_backends_reported(self):
        result = compare_backends(strategy="single", feature_dim=64,
                                  num_classes=4, num_frames=3000,
                                  warmup_frames=500)
        assert "pure" in result["reports"]
        if "compiled" in result["reports"]:
            assert result["speedup_throughput"] > 1.0
            assert result["speedup_p50"] > 1.0
