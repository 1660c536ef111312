"""Stream wire format plus manifest/annotation documents.

Stream file layout (little-endian):
    header: magic b"EGWS", u16 version=1, u32 feature_dim D, u32 num_classes C,
            u64 num_frames
    body:   num_frames records of (u64 frame_index, D x f32 feature, C x f32 logits)

Manifest: UTF-8 JSON with keys video_id, domain_id, fps, num_frames,
feature_dim, num_classes, class_names.

Annotations: UTF-8 CSV with header video_id,start_frame,stop_frame,label;
label -1 marks an UNKNOWN (background) segment.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (DimensionMismatch, FormatMismatch, IoError,
                     MalformedAnnotation, MalformedManifest, NonFiniteValue,
                     TruncatedStream)
from .records import (FrameRecord, LabelSegment, StreamDataset,
                      StreamManifest, check_segments)

MAGIC = b"EGWS"
VERSION = 1
_HEADER = struct.Struct("<4sHIIQ")

#: Records read per chunk; bounds open_stream memory regardless of file size.
CHUNK_RECORDS = 1024

_MANIFEST_KEYS = {"video_id", "domain_id", "fps", "num_frames", "feature_dim",
                  "num_classes", "class_names"}


def load_manifest(path: str | Path) -> StreamManifest:
    """Read and validate a manifest JSON document."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedManifest(f"{path}: manifest must be a JSON object")
    missing = _MANIFEST_KEYS - doc.keys()
    if missing:
        raise MalformedManifest(f"{path}: missing keys {sorted(missing)}")
    extra = doc.keys() - _MANIFEST_KEYS
    if extra:
        raise MalformedManifest(f"{path}: unknown keys {sorted(extra)}")
    try:
        manifest = StreamManifest(
            video_id=str(doc["video_id"]),
            domain_id=str(doc["domain_id"]),
            fps=float(doc["fps"]),
            num_frames=int(doc["num_frames"]),
            feature_dim=int(doc["feature_dim"]),
            num_classes=int(doc["num_classes"]),
            class_names=tuple(str(n) for n in doc["class_names"]),
        )
    except (TypeError, ValueError) as exc:
        raise MalformedManifest(f"{path}: {exc}") from exc
    return manifest.validate()


def write_manifest(manifest: StreamManifest, path: str | Path) -> None:
    manifest.validate()
    doc = {
        "video_id": manifest.video_id,
        "domain_id": manifest.domain_id,
        "fps": manifest.fps,
        "num_frames": manifest.num_frames,
        "feature_dim": manifest.feature_dim,
        "num_classes": manifest.num_classes,
        "class_names": list(manifest.class_names),
    }
    try:
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write manifest {path}: {exc}") from exc


def read_stream_header(path: str | Path) -> tuple[int, int, int]:
    """Return (feature_dim, num_classes, num_frames) from a stream file header."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read(_HEADER.size)
    except OSError as exc:
        raise IoError(f"cannot read stream {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise TruncatedStream(f"{path}: file shorter than header")
    magic, version, dim, classes, num_frames = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatMismatch(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatMismatch(f"{path}: unsupported version {version}")
    return dim, classes, num_frames


def read_stream(path: str | Path) -> tuple[int, int, int, Iterator[FrameRecord]]:
    """Header fields plus a record iterator, without a manifest cross-check."""
    dim, classes, num_frames = read_stream_header(path)
    return dim, classes, num_frames, _iter_records(Path(path), dim, classes, num_frames)


def open_stream(path: str | Path, manifest: StreamManifest) -> Iterator[FrameRecord]:
    """Yield the stream's records in frame order.

    Single forward pass; at most CHUNK_RECORDS records are held in memory at
    once, independent of file size.
    """
    dim, classes, num_frames = read_stream_header(path)
    if (dim, classes, num_frames) != (manifest.feature_dim, manifest.num_classes,
                                      manifest.num_frames):
        raise FormatMismatch(
            f"{path}: header (D={dim}, C={classes}, num_frames={num_frames}) does not "
            f"match manifest (D={manifest.feature_dim}, C={manifest.num_classes}, "
            f"num_frames={manifest.num_frames})"
        )
    return _iter_records(Path(path), dim, classes, num_frames)


def _iter_records(path: Path, dim: int, classes: int,
                  num_frames: int) -> Iterator[FrameRecord]:
    record_size = 8 + 4 * (dim + classes)
    dtype = np.dtype([("frame_index", "<u8"), ("feature", "<f4", (dim,)),
                      ("logits", "<f4", (classes,))])
    produced = 0
    with open(path, "rb") as fh:
        fh.seek(_HEADER.size)
        while produced < num_frames:
            want = min(CHUNK_RECORDS, num_frames - produced)
            raw = fh.read(want * record_size)
            if len(raw) % record_size:
                raise TruncatedStream(
                    f"{path}: stream ends mid-record near record {produced + len(raw) // record_size}"
                )
            if not raw:
                raise TruncatedStream(
                    f"{path}: expected {num_frames} records, file ends after {produced}"
                )
            chunk = np.frombuffer(raw, dtype=dtype)
            for row in chunk:
                idx = int(row["frame_index"])
                if idx != produced:
                    raise FormatMismatch(
                        f"{path}: record {produced} carries frame_index {idx} "
                        f"(indices must be 0-based and gap-free)"
                    )
                feature = np.array(row["feature"], dtype=np.float32)
                logits = np.array(row["logits"], dtype=np.float32)
                if not np.isfinite(feature).all() or not np.isfinite(logits).all():
                    raise NonFiniteValue(f"{path}: non-finite value at frame {idx}")
                produced += 1
                yield FrameRecord(idx, feature, logits)
        if fh.read(1):
            raise FormatMismatch(f"{path}: trailing data after {num_frames} records")


def write_stream(records: Iterable[FrameRecord], manifest: StreamManifest,
                 path: str | Path) -> None:
    """Serialize records to the wire format. open_stream inverts it exactly."""
    manifest.validate()
    dim, classes = manifest.feature_dim, manifest.num_classes
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, dim, classes, manifest.num_frames))
            count = 0
            for rec in records:
                if rec.feature.shape != (dim,) or rec.logits.shape != (classes,):
                    raise DimensionMismatch(
                        f"record {rec.frame_index}: feature {rec.feature.shape} / "
                        f"logits {rec.logits.shape}, expected ({dim},) / ({classes},)"
                    )
                feature = np.ascontiguousarray(rec.feature, dtype="<f4")
                logits = np.ascontiguousarray(rec.logits, dtype="<f4")
                if not np.isfinite(feature).all() or not np.isfinite(logits).all():
                    raise NonFiniteValue(f"record {rec.frame_index} has non-finite values")
                fh.write(struct.pack("<Q", rec.frame_index))
                fh.write(feature.tobytes())
                fh.write(logits.tobytes())
                count += 1
            if count != manifest.num_frames:
                raise DimensionMismatch(
                    f"wrote {count} records, manifest declares {manifest.num_frames}"
                )
    except OSError as exc:
        raise IoError(f"cannot write stream {path}: {exc}") from exc


def write_dataset(dataset: StreamDataset, out_dir: str | Path) -> dict[str, Path]:
    """Write <video_id>.egws / .json / .csv into out_dir; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vid = dataset.manifest.video_id
    paths = {
        "stream": out / f"{vid}.egws",
        "manifest": out / f"{vid}.json",
        "annotations": out / f"{vid}.csv",
    }
    write_stream(dataset.records, dataset.manifest, paths["stream"])
    write_manifest(dataset.manifest, paths["manifest"])
    write_annotations(dataset.segments, paths["annotations"])
    return paths


def load_annotations(path: str | Path, num_classes: int | None = None) -> list[LabelSegment]:
    """Read an annotation CSV; output sorted by (start_frame, stop_frame), stable."""
    segments = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            expected = ["video_id", "start_frame", "stop_frame", "label"]
            if reader.fieldnames != expected:
                raise MalformedAnnotation(
                    f"{path}: header {reader.fieldnames} != {expected}"
                )
            for lineno, row in enumerate(reader, start=2):
                try:
                    seg = LabelSegment(
                        video_id=row["video_id"],
                        start_frame=int(row["start_frame"]),
                        stop_frame=int(row["stop_frame"]),
                        label=int(row["label"]),
                    )
                except (TypeError, ValueError) as exc:
                    raise MalformedAnnotation(f"{path}:{lineno}: {exc}") from exc
                segments.append(seg.validate())
    except OSError as exc:
        raise IoError(f"cannot read annotations {path}: {exc}") from exc
    check_segments(segments, num_classes=num_classes)
    return sorted(segments, key=lambda s: (s.start_frame, s.stop_frame))


def write_annotations(segments: Iterable[LabelSegment], path: str | Path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["video_id", "start_frame", "stop_frame", "label"])
            for seg in segments:
                writer.writerow([seg.video_id, seg.start_frame, seg.stop_frame, seg.label])
    except OSError as exc:
        raise IoError(f"cannot write annotations {path}: {exc}") from exc


def load_dataset(manifest_path: str | Path, stream_path: str | Path | None = None,
                 annotations_path: str | Path | None = None) -> StreamDataset:
    """Load a dataset from its manifest; siblings default to <stem>.egws / .csv."""
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    stream_path = Path(stream_path) if stream_path else manifest_path.with_suffix(".egws")
    annotations_path = (Path(annotations_path) if annotations_path
                        else manifest_path.with_suffix(".csv"))
    features = np.zeros((manifest.num_frames, manifest.feature_dim), dtype=np.float32)
    logits = np.zeros((manifest.num_frames, manifest.num_classes), dtype=np.float32)
    for rec in open_stream(stream_path, manifest):
        features[rec.frame_index] = rec.feature
        logits[rec.frame_index] = rec.logits
    if annotations_path.exists():
        segments = [s for s in load_annotations(annotations_path, manifest.num_classes)
                    if s.video_id == manifest.video_id]
    else:
        segments = []
    return StreamDataset(manifest, features, logits, segments)
