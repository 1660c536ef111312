"""Core stream data types: per-frame records, manifests, label segments, datasets.

A stream is a dense sequence of per-frame records. Each record carries the
feature embedding and the pre-softmax class scores produced by some backbone
for the temporal window ending at that frame; one record per frame, indices
0..num_frames-1 with no gaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MalformedAnnotation, NonFiniteValue

#: Annotation label value marking a background ("unknown") interval.
UNKNOWN = -1


@dataclass(frozen=True)
class FrameRecord:
    """One time step of a stream: feature vector + logit vector at a frame."""

    frame_index: int
    feature: np.ndarray  # shape (D,)
    logits: np.ndarray   # shape (C,)

    def validate(self) -> "FrameRecord":
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")
        if self.feature.ndim != 1 or self.logits.ndim != 1:
            raise DimensionMismatch("feature and logits must be 1-D vectors")
        if not np.isfinite(self.feature).all() or not np.isfinite(self.logits).all():
            raise NonFiniteValue(f"non-finite value in record {self.frame_index}")
        return self


@dataclass(frozen=True)
class StreamManifest:
    """Sidecar document describing one stream file."""

    video_id: str
    domain_id: str
    fps: float
    num_frames: int
    feature_dim: int
    num_classes: int
    class_names: tuple[str, ...]

    def validate(self) -> "StreamManifest":
        from .errors import MalformedManifest

        if self.feature_dim < 1:
            raise MalformedManifest(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.num_classes < 2:
            raise MalformedManifest(f"num_classes must be >= 2, got {self.num_classes}")
        if self.num_frames < 0:
            raise MalformedManifest(f"num_frames must be >= 0, got {self.num_frames}")
        if self.fps <= 0:
            raise MalformedManifest(f"fps must be positive, got {self.fps}")
        if len(self.class_names) != self.num_classes:
            raise MalformedManifest(
                f"class_names has {len(self.class_names)} entries, expected {self.num_classes}"
            )
        return self


@dataclass(frozen=True, order=True)
class LabelSegment:
    """Annotated interval [start_frame, stop_frame], both inclusive.

    label is a class index in [0, C) or UNKNOWN (-1). Labeled segments of one
    video may overlap each other; UNKNOWN segments never overlap labeled ones.
    """

    video_id: str = field(compare=False)
    start_frame: int
    stop_frame: int
    label: int = field(compare=False)

    def validate(self) -> "LabelSegment":
        if self.start_frame < 0:
            raise MalformedAnnotation(f"start_frame must be >= 0, got {self.start_frame}")
        if self.stop_frame < self.start_frame:
            raise MalformedAnnotation(
                f"stop_frame {self.stop_frame} < start_frame {self.start_frame}"
            )
        if self.label < UNKNOWN:
            raise MalformedAnnotation(f"label out of range: {self.label}")
        return self

    @property
    def is_unknown(self) -> bool:
        return self.label == UNKNOWN

    @property
    def num_frames(self) -> int:
        return self.stop_frame - self.start_frame + 1

    def overlaps(self, other: "LabelSegment") -> bool:
        return self.start_frame <= other.stop_frame and other.start_frame <= self.stop_frame


def check_segments(segments: list[LabelSegment], num_frames: int | None = None,
                   num_classes: int | None = None) -> list[LabelSegment]:
    """Validate a per-video segment list: ranges, label domain, UNKNOWN overlap rule."""
    for seg in segments:
        seg.validate()
        if num_classes is not None and seg.label >= num_classes:
            raise MalformedAnnotation(
                f"label {seg.label} out of range for {num_classes} classes"
            )
        if num_frames is not None and seg.stop_frame >= num_frames:
            raise MalformedAnnotation(
                f"segment [{seg.start_frame},{seg.stop_frame}] exceeds stream "
                f"length {num_frames}"
            )
    unknowns = [s for s in segments if s.is_unknown]
    labeled = [s for s in segments if not s.is_unknown]
    for u in unknowns:
        for s in labeled:
            if u.overlaps(s):
                raise MalformedAnnotation(
                    f"UNKNOWN segment [{u.start_frame},{u.stop_frame}] overlaps "
                    f"labeled segment [{s.start_frame},{s.stop_frame}]"
                )
    return segments


class StreamDataset:
    """A fully loaded stream: manifest + per-frame arrays + sorted segments.

    Frame data is stored as two dense arrays (features (N, D) float32,
    logits (N, C) float32); `records` materializes FrameRecord views lazily.
    Immutable after construction by convention; safe to share across threads.
    """

    def __init__(self, manifest: StreamManifest, features: np.ndarray,
                 logits: np.ndarray, segments: list[LabelSegment]):
        manifest.validate()
        features = np.ascontiguousarray(features, dtype=np.float32)
        logits = np.ascontiguousarray(logits, dtype=np.float32)
        if features.shape != (manifest.num_frames, manifest.feature_dim):
            raise DimensionMismatch(
                f"features shape {features.shape} does not match manifest "
                f"({manifest.num_frames}, {manifest.feature_dim})"
            )
        if logits.shape != (manifest.num_frames, manifest.num_classes):
            raise DimensionMismatch(
                f"logits shape {logits.shape} does not match manifest "
                f"({manifest.num_frames}, {manifest.num_classes})"
            )
        if not np.isfinite(features).all() or not np.isfinite(logits).all():
            raise NonFiniteValue("dataset contains non-finite values")
        self.manifest = manifest
        self.features = features
        self.logits = logits
        self.segments = sorted(check_segments(list(segments), manifest.num_frames,
                                              manifest.num_classes))

    @classmethod
    def from_records(cls, manifest: StreamManifest, records: list[FrameRecord],
                     segments: list[LabelSegment]) -> "StreamDataset":
        if len(records) != manifest.num_frames:
            raise DimensionMismatch(
                f"{len(records)} records for manifest num_frames {manifest.num_frames}"
            )
        features = np.stack([r.feature for r in records]) if records else \
            np.zeros((0, manifest.feature_dim), dtype=np.float32)
        logits = np.stack([r.logits for r in records]) if records else \
            np.zeros((0, manifest.num_classes), dtype=np.float32)
        return cls(manifest, features, logits, segments)

    @property
    def num_frames(self) -> int:
        return self.manifest.num_frames

    @property
    def records(self) -> list[FrameRecord]:
        return [FrameRecord(i, self.features[i], self.logits[i])
                for i in range(self.num_frames)]

    def labeled_segments(self) -> list[LabelSegment]:
        return [s for s in self.segments if not s.is_unknown]
