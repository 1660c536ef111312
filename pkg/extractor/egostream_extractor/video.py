"""Video decoding and frame-rate resampling."""

from __future__ import annotations

import numpy as np


class DecodeError(Exception):
    """Video file could not be opened or produced no frames."""


def load_frames(path: str, target_fps: float) -> tuple[np.ndarray, float]:
    """Decode a video to RGB frames resampled to target_fps.

    Resampling picks source frame round(i * src_fps / target_fps) for each
    output index i, so slow-downs duplicate frames and speed-ups drop them.
    Returns (frames uint8 (N, H, W, 3), source_fps).
    """
    import cv2

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise DecodeError(f"cannot open video {path}")
    src_fps = cap.get(cv2.CAP_PROP_FPS) or target_fps
    if src_fps <= 0:
        src_fps = target_fps
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    cap.release()
    if not frames:
        raise DecodeError(f"no decodable frames in {path}")
    source = np.stack(frames)

    if abs(src_fps - target_fps) < 1e-9:
        return source, src_fps
    ratio = src_fps / target_fps
    indices = []
    i = 0
    while True:
        j = int(round(i * ratio))
        if j >= len(source):
            break
        indices.append(j)
        i += 1
    if not indices:
        indices = [0]
    return source[indices], src_fps
