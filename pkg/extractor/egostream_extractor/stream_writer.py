"""Writer for the egostream wire format and its sidecar documents.

Implements the published format directly (this package talks to the pipeline
only through files): little-endian header "EGWS", u16 version 1, u32 feature
dim, u32 class count, u64 frame count, then per frame a u64 index, the
float32 feature vector, and the float32 logit vector.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"EGWS"
VERSION = 1
_HEADER = struct.Struct("<4sHIIQ")
_ANNOTATION_HEADER = ["video_id", "start_frame", "stop_frame", "label"]


def write_stream(features: np.ndarray, logits: np.ndarray, path: str | Path) -> None:
    num_frames, dim = features.shape
    classes = logits.shape[1]
    features = np.ascontiguousarray(features, dtype="<f4")
    logits = np.ascontiguousarray(logits, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, classes, num_frames))
        for i in range(num_frames):
            fh.write(struct.pack("<Q", i))
            fh.write(features[i].tobytes())
            fh.write(logits[i].tobytes())


def write_manifest(path: str | Path, video_id: str, domain_id: str, fps: float,
                   num_frames: int, feature_dim: int, num_classes: int) -> None:
    doc = {
        "video_id": video_id,
        "domain_id": domain_id,
        "fps": fps,
        "num_frames": num_frames,
        "feature_dim": feature_dim,
        "num_classes": num_classes,
        "class_names": [f"class_{i:03d}" for i in range(num_classes)],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def copy_annotations(src: str | Path, dst: str | Path, num_frames: int) -> None:
    """Pass annotations through, checking the header and frame bounds early."""
    with open(src, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or rows[0] != _ANNOTATION_HEADER:
        raise ValueError(f"{src}: first row must be {','.join(_ANNOTATION_HEADER)}")
    for row in rows[1:]:
        if int(row[2]) >= num_frames:
            raise ValueError(
                f"{src}: stop_frame {row[2]} outside the {num_frames}-frame stream")
    with open(dst, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)
