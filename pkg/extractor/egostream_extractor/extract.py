"""Sliding-window extraction: video file -> stream + manifest (+ annotations)."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backbones import BackboneLoadError, make_backbone
from .stream_writer import copy_annotations, write_manifest, write_stream
from .video import DecodeError, load_frames

BATCH_WINDOWS = 8


@dataclass(frozen=True)
class ExtractorConfig:
    backbone: str = "tiny3d"
    window: int = 16          # frames per clip; the window slides with stride 1
    target_fps: float = 30.0
    num_classes: int = 8      # tiny3d head size; torchvision models fix their own
    weights_path: str | None = None
    domain_id: str = "D1"
    seed: int = 0

    def validate(self) -> "ExtractorConfig":
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.target_fps <= 0:
            raise ValueError("target fps must be positive")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        return self


def _windows(frames: np.ndarray, window: int) -> np.ndarray:
    """All stride-1 window positions; short videos pad by repeating the last frame."""
    n = len(frames)
    if n < window:
        pad = np.repeat(frames[-1:], window - n, axis=0)
        return np.stack([np.concatenate([frames, pad])])
    return np.stack([frames[t:t + window] for t in range(n - window + 1)])


def extract(video_path: str | Path, annotations_path: str | Path | None,
            config: ExtractorConfig, out_dir: str | Path,
            video_id: str | None = None) -> dict[str, Path]:
    """Run the backbone over every window position and emit the stream files.

    One record per (resampled) frame: positions before the first full window
    repeat the first computed output, so record t always describes the stream
    up to frame t and annotation frame numbers line up unchanged.
    """
    config.validate()
    video_path = Path(video_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vid = video_id or video_path.stem

    frames, _src_fps = load_frames(str(video_path), config.target_fps)
    backbone = make_backbone(config.backbone, config.num_classes,
                             config.weights_path, seed=config.seed)
    clips = _windows(frames, config.window)
    feats = np.empty((len(clips), backbone.feature_dim), dtype=np.float32)
    logits = np.empty((len(clips), backbone.num_classes), dtype=np.float32)
    for start in range(0, len(clips), BATCH_WINDOWS):
        stop = min(start + BATCH_WINDOWS, len(clips))
        feats[start:stop], logits[start:stop] = backbone.encode(clips[start:stop])

    num_frames = len(frames)
    pad = num_frames - len(clips)  # window - 1, or 0 for short videos
    if pad > 0:
        feats = np.concatenate([np.repeat(feats[:1], pad, axis=0), feats])
        logits = np.concatenate([np.repeat(logits[:1], pad, axis=0), logits])
    feats = feats[:num_frames]
    logits = logits[:num_frames]

    paths = {"stream": out / f"{vid}.egws", "manifest": out / f"{vid}.json"}
    write_stream(feats, logits, paths["stream"])
    write_manifest(paths["manifest"], vid, config.domain_id, config.target_fps,
                   num_frames, backbone.feature_dim, backbone.num_classes)
    if annotations_path is not None:
        paths["annotations"] = out / f"{vid}.csv"
        copy_annotations(annotations_path, paths["annotations"], num_frames)
    return paths


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Extract an egostream wire-format stream from a video")
    parser.add_argument("--video", required=True)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--window", type=int, default=16)
    parser.add_argument("--fps", type=float, default=30.0)
    parser.add_argument("--backbone", default="tiny3d")
    parser.add_argument("--classes", type=int, default=8,
                        help="tiny3d classifier size")
    parser.add_argument("--weights", default=None,
                        help="state-dict path for torchvision backbones")
    parser.add_argument("--annotations", default=None,
                        help="annotation CSV passed through to the output")
    parser.add_argument("--video-id", default=None)
    parser.add_argument("--domain-id", default="D1")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    config = ExtractorConfig(backbone=args.backbone, window=args.window,
                             target_fps=args.fps, num_classes=args.classes,
                             weights_path=args.weights, domain_id=args.domain_id,
                             seed=args.seed)
    try:
        paths = extract(args.video, args.annotations, config, args.out,
                        video_id=args.video_id)
    except (DecodeError, BackboneLoadError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
