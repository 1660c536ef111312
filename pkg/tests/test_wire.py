import json
import struct
import tracemalloc

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from egostream import (FormatMismatch, FrameRecord, MalformedAnnotation,
                       MalformedManifest, NonFiniteValue, TruncatedStream,
                       load_annotations, load_manifest, open_stream,
                       read_stream_header, write_annotations, write_manifest,
                       write_stream)
from egostream.records import UNKNOWN, LabelSegment
from egostream.synth import SynthConfig, generate
from egostream.wire import _HEADER, MAGIC, VERSION

from conftest import make_manifest, random_records


class TestManifest:
    def test_minimal_roundtrip(self, tmp_path):
        manifest = make_manifest(7, feature_dim=1024, num_classes=8)
        path = tmp_path / "m.json"
        write_manifest(manifest, path)
        loaded = load_manifest(path)
        assert loaded == manifest
        assert loaded.feature_dim == 1024 and loaded.num_classes == 8

    def test_single_class_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        doc = {"video_id": "v", "domain_id": "D1", "fps": 30.0, "num_frames": 1,
               "feature_dim": 4, "num_classes": 1, "class_names": ["only"]}
        path.write_text(json.dumps(doc))
        with pytest.raises(MalformedManifest):
            load_manifest(path)

    def test_missing_and_unknown_keys(self, tmp_path):
        path = tmp_path / "m.json"
        doc = {"video_id": "v", "domain_id": "D1", "fps": 30.0, "num_frames": 1,
               "feature_dim": 4, "num_classes": 2, "class_names": ["a", "b"]}
        incomplete = {k: v for k, v in doc.items() if k != "fps"}
        path.write_text(json.dumps(incomplete))
        with pytest.raises(MalformedManifest, match="fps"):
            load_manifest(path)
        path.write_text(json.dumps(doc | {"extra": 1}))
        with pytest.raises(MalformedManifest, match="extra"):
            load_manifest(path)

    def test_zero_feature_dim_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        doc = {"video_id": "v", "domain_id": "D1", "fps": 30.0, "num_frames": 1,
               "feature_dim": 0, "num_classes": 2, "class_names": ["a", "b"]}
        path.write_text(json.dumps(doc))
        with pytest.raises(MalformedManifest):
            load_manifest(path)

    def test_three_domain_fixture(self, tmp_path):
        # fixture set generated by the synth module, one manifest per domain
        config = SynthConfig.random(4, 8, seed=0)
        for i, domain in enumerate(["D1", "D2", "D3"]):
            ds = generate(config, 3, video_id=f"v{i}", domain_id=domain)
            write_manifest(ds.manifest, tmp_path / f"v{i}.json")
        manifests = [load_manifest(tmp_path / f"v{i}.json") for i in range(3)]
        assert sorted(m.domain_id for m in manifests) == ["D1", "D2", "D3"]
        assert len({m.video_id for m in manifests}) == 3


class TestStreamFormat:
    def test_ten_record_roundtrip(self, tmp_path, rng):
        manifest = make_manifest(10, feature_dim=4, num_classes=3)
        records = random_records(rng, 10, 4, 3)
        path = tmp_path / "s.egws"
        write_stream(records, manifest, path)
        loaded = list(open_stream(path, manifest))
        assert len(loaded) == 10
        for orig, got in zip(records, loaded):
            assert got.frame_index == orig.frame_index
            assert got.feature.shape == (4,) and got.logits.shape == (3,)
            assert np.array_equal(got.feature, orig.feature)
            assert np.array_equal(got.logits, orig.logits)

    def test_empty_stream_is_header_only(self, tmp_path):
        manifest = make_manifest(0)
        path = tmp_path / "s.egws"
        write_stream([], manifest, path)
        assert path.stat().st_size == _HEADER.size
        assert list(open_stream(path, manifest)) == []

    def test_one_record_identity(self, tmp_path):
        manifest = make_manifest(1, feature_dim=2, num_classes=2)
        rec = FrameRecord(0, np.array([1.5, -2.25], dtype=np.float32),
                          np.array([0.125, 3.0], dtype=np.float32))
        path = tmp_path / "s.egws"
        write_stream([rec], manifest, path)
        (got,) = open_stream(path, manifest)
        assert got.feature.tolist() == [1.5, -2.25]
        assert got.logits.tolist() == [0.125, 3.0]

    def test_truncated_mid_record(self, tmp_path, rng):
        manifest = make_manifest(5)
        path = tmp_path / "s.egws"
        write_stream(random_records(rng, 5), manifest, path)
        data = path.read_bytes()
        path.write_bytes(data[:len(data) - 7])
        with pytest.raises(TruncatedStream):
            list(open_stream(path, manifest))

    def test_missing_whole_records(self, tmp_path, rng):
        manifest = make_manifest(5)
        path = tmp_path / "s.egws"
        write_stream(random_records(rng, 5), manifest, path)
        record_size = 8 + 4 * (4 + 3)
        path.write_bytes(path.read_bytes()[:_HEADER.size + 2 * record_size])
        with pytest.raises(TruncatedStream):
            list(open_stream(path, manifest))

    def test_corrupt_magic(self, tmp_path, rng):
        manifest = make_manifest(2)
        path = tmp_path / "s.egws"
        write_stream(random_records(rng, 2), manifest, path)
        data = bytearray(path.read_bytes())
        data[:4] = b"NOPE"
        path.write_bytes(bytes(data))
        with pytest.raises(FormatMismatch):
            read_stream_header(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "s.egws"
        path.write_bytes(_HEADER.pack(MAGIC, VERSION + 1, 4, 3, 0))
        with pytest.raises(FormatMismatch):
            read_stream_header(path)

    def test_header_manifest_disagreement(self, tmp_path, rng):
        manifest = make_manifest(3, feature_dim=4)
        path = tmp_path / "s.egws"
        write_stream(random_records(rng, 3), manifest, path)
        other = make_manifest(3, feature_dim=5)
        with pytest.raises(FormatMismatch):
            open_stream(path, other)

    def test_frame_index_gap(self, tmp_path):
        manifest = make_manifest(2, feature_dim=1, num_classes=2)
        path = tmp_path / "s.egws"
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, 1, 2, 2))
            fh.write(struct.pack("<Q", 0) + struct.pack("<3f", 0, 0, 0))
            fh.write(struct.pack("<Q", 2) + struct.pack("<3f", 0, 0, 0))
        with pytest.raises(FormatMismatch, match="frame_index"):
            list(open_stream(path, manifest))

    def test_non_finite_value(self, tmp_path):
        manifest = make_manifest(1, feature_dim=1, num_classes=2)
        path = tmp_path / "s.egws"
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, 1, 2, 1))
            fh.write(struct.pack("<Q", 0) + struct.pack("<3f", float("nan"), 0, 0))
        with pytest.raises(NonFiniteValue):
            list(open_stream(path, manifest))

    def test_trailing_data(self, tmp_path, rng):
        manifest = make_manifest(2)
        path = tmp_path / "s.egws"
        write_stream(random_records(rng, 2), manifest, path)
        with open(path, "ab") as fh:
            fh.write(b"x")
        with pytest.raises(FormatMismatch, match="trailing"):
            list(open_stream(path, manifest))

    def test_large_roundtrip_byte_fixpoint(self, tmp_path, rng):
        # serialize -> parse -> serialize is the identity on bytes
        n = 100_000
        manifest = make_manifest(n, feature_dim=4, num_classes=3)
        records = [FrameRecord(i, f, l) for i, (f, l) in enumerate(zip(
            rng.standard_normal((n, 4)).astype(np.float32),
            rng.standard_normal((n, 3)).astype(np.float32)))]
        first = tmp_path / "a.egws"
        second = tmp_path / "b.egws"
        write_stream(records, manifest, first)
        write_stream(open_stream(first, manifest), manifest, second)
        assert first.read_bytes() == second.read_bytes()

    @settings(max_examples=30, deadline=None)
    @given(data=st.data(), num_frames=st.integers(0, 25),
           dim=st.integers(1, 6), classes=st.integers(2, 5))
    def test_roundtrip_property(self, tmp_path_factory, data, num_frames, dim, classes):
        finite32 = st.floats(allow_nan=False, allow_infinity=False, width=32)
        features = data.draw(arrays(np.float32, (num_frames, dim), elements=finite32))
        logits = data.draw(arrays(np.float32, (num_frames, classes), elements=finite32))
        manifest = make_manifest(num_frames, dim, classes)
        records = [FrameRecord(i, features[i], logits[i]) for i in range(num_frames)]
        path = tmp_path_factory.mktemp("wire") / "s.egws"
        write_stream(records, manifest, path)
        loaded = list(open_stream(path, manifest))
        assert len(loaded) == num_frames
        for orig, got in zip(records, loaded):
            assert np.array_equal(orig.feature, got.feature)
            assert np.array_equal(orig.logits, got.logits)

    def test_constant_memory_iteration(self, tmp_path, rng):
        # reading a ~18 MB stream must not hold more than a small bounded buffer
        n = 200_000
        manifest = make_manifest(n, feature_dim=16, num_classes=4)
        features = rng.standard_normal((n, 16)).astype(np.float32)
        logits = rng.standard_normal((n, 4)).astype(np.float32)
        path = tmp_path / "big.egws"
        write_stream((FrameRecord(i, features[i], logits[i]) for i in range(n)),
                     manifest, path)
        assert path.stat().st_size > 17_000_000
        tracemalloc.start()
        count = 0
        for rec in open_stream(path, manifest):
            count += 1
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        assert count == n
        assert peak < 4_000_000  # chunk buffer, not the whole file


class TestAnnotations:
    def _write(self, path, rows):
        lines = ["video_id,start_frame,stop_frame,label"]
        lines += [f"{v},{a},{b},{l}" for v, a, b, l in rows]
        path.write_text("\n".join(lines) + "\n")

    def test_overlapping_rows_retained(self, tmp_path):
        path = tmp_path / "a.csv"
        self._write(path, [("v", 0, 99, 2), ("v", 80, 150, 5)])
        segs = load_annotations(path)
        assert len(segs) == 2
        assert segs[0].overlaps(segs[1])

    def test_stop_before_start_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        self._write(path, [("v", 10, 5, 0)])
        with pytest.raises(MalformedAnnotation):
            load_annotations(path)

    def test_unknown_rows_flagged(self, tmp_path):
        path = tmp_path / "a.csv"
        self._write(path, [("v", 0, 49, UNKNOWN), ("v", 50, 99, 1)])
        segs = load_annotations(path)
        assert len(segs) == 2
        assert segs[0].is_unknown and not segs[1].is_unknown

    def test_unknown_overlapping_labeled_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        self._write(path, [("v", 0, 60, UNKNOWN), ("v", 50, 99, 1)])
        with pytest.raises(MalformedAnnotation):
            load_annotations(path)

    def test_label_out_of_range(self, tmp_path):
        path = tmp_path / "a.csv"
        self._write(path, [("v", 0, 10, 7)])
        assert len(load_annotations(path)) == 1  # no class count given
        with pytest.raises(MalformedAnnotation):
            load_annotations(path, num_classes=5)
        self._write(path, [("v", 0, 10, -2)])
        with pytest.raises(MalformedAnnotation):
            load_annotations(path)

    def test_sorted_and_stable(self, tmp_path):
        path = tmp_path / "a.csv"
        self._write(path, [("v", 50, 80, 1), ("v", 0, 20, 2), ("v", 50, 80, 3)])
        segs = load_annotations(path)
        assert [(s.start_frame, s.stop_frame) for s in segs] == [(0, 20), (50, 80), (50, 80)]
        # ties keep input order (stable sort)
        assert [s.label for s in segs] == [2, 1, 3]

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("video,start,stop,label\nv,0,1,0\n")
        with pytest.raises(MalformedAnnotation):
            load_annotations(path)

    def test_write_read_roundtrip(self, tmp_path):
        segs = [LabelSegment("v", 0, 10, 1), LabelSegment("v", 11, 30, UNKNOWN)]
        path = tmp_path / "a.csv"
        write_annotations(segs, path)
        assert load_annotations(path) == segs
