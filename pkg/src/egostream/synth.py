"""Deterministic synthetic stream generator with exact ground truth.

Each action segment places features around a fixed unit-norm class centroid
and logits around a scaled one-hot target. Consecutive segments may overlap
(features and logit targets blend linearly across the overlap) or be
separated by an UNKNOWN gap of near-zero features. The generator records the
exact segment layout, so boundary and accuracy oracles are available for
free.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidConfig
from .records import UNKNOWN, LabelSegment, StreamDataset, StreamManifest

_MAX_CENTROID_TRIES = 10_000


def random_centroids(num_classes: int, feature_dim: int,
                     rng: np.random.Generator, max_cosine: float = 0.3) -> np.ndarray:
    """Random unit vectors with pairwise cosine similarity below max_cosine."""
    centroids = np.zeros((num_classes, feature_dim))
    for i in range(num_classes):
        for _ in range(_MAX_CENTROID_TRIES):
            v = rng.standard_normal(feature_dim)
            v /= np.linalg.norm(v)
            if i == 0 or np.max(np.abs(centroids[:i] @ v)) < max_cosine:
                centroids[i] = v
                break
        else:
            raise InvalidConfig(
                f"cannot place {num_classes} centroids with pairwise cosine "
                f"< {max_cosine} in {feature_dim} dimensions")
    return centroids


@dataclass(frozen=True)
class SynthConfig:
    num_classes: int
    feature_dim: int
    class_centroids: np.ndarray = field(repr=False)  # (C, D), unit rows
    within_action_noise: float = 0.05
    logit_sharpness: float = 5.0
    min_frames: int = 30
    max_frames: int = 90
    overlap_fraction: float = 0.0
    overlap_length: int = 10
    unknown_gap_probability: float = 0.0
    unknown_noise: float = 0.0
    seed: int = 0

    @classmethod
    def random(cls, num_classes: int, feature_dim: int, seed: int = 0,
               **kwargs) -> "SynthConfig":
        """Config with centroids drawn (deterministically) from the seed."""
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC3]))
        centroids = random_centroids(num_classes, feature_dim, rng)
        return cls(num_classes=num_classes, feature_dim=feature_dim,
                   class_centroids=centroids, seed=seed, **kwargs)

    def validate(self) -> "SynthConfig":
        c = self
        if c.num_classes < 2:
            raise InvalidConfig("num_classes must be >= 2")
        if c.feature_dim < 1:
            raise InvalidConfig("feature_dim must be >= 1")
        if c.class_centroids.shape != (c.num_classes, c.feature_dim):
            raise InvalidConfig(
                f"class_centroids shape {c.class_centroids.shape} != "
                f"({c.num_classes}, {c.feature_dim})")
        for i in range(c.num_classes):
            for j in range(i + 1, c.num_classes):
                if np.array_equal(c.class_centroids[i], c.class_centroids[j]):
                    raise InvalidConfig(f"centroids {i} and {j} are identical")
        if c.within_action_noise < 0 or c.unknown_noise < 0:
            raise InvalidConfig("noise levels must be >= 0")
        if c.logit_sharpness <= 0:
            raise InvalidConfig("logit_sharpness must be > 0")
        if c.min_frames < 1:
            raise InvalidConfig("min_frames must be >= 1")
        if c.max_frames < c.min_frames:
            raise InvalidConfig("max_frames must be >= min_frames")
        if not 0.0 <= c.overlap_fraction < 1.0:
            raise InvalidConfig("overlap_fraction must be in [0, 1)")
        if c.overlap_length < 1:
            raise InvalidConfig("overlap_length must be >= 1")
        if c.overlap_length >= c.min_frames:
            raise InvalidConfig("overlap_length must be < min_frames")
        if not 0.0 <= c.unknown_gap_probability <= 1.0:
            raise InvalidConfig("unknown_gap_probability must be in [0, 1]")
        return c

    def min_centroid_mse_gap(self) -> float:
        """Smallest pairwise mean-squared distance between class centroids."""
        gaps = [float(np.mean((self.class_centroids[i] - self.class_centroids[j]) ** 2))
                for i in range(self.num_classes)
                for j in range(i + 1, self.num_classes)]
        return min(gaps)


def generate(config: SynthConfig, total_segments: int, video_id: str = "synth",
             domain_id: str = "D1", fps: float = 30.0) -> StreamDataset:
    """Build a StreamDataset with known segment layout. Deterministic per seed."""
    config.validate()
    if total_segments < 1:
        raise InvalidConfig("total_segments must be >= 1")
    rng = np.random.default_rng(config.seed)
    c = config

    lengths = rng.integers(c.min_frames, c.max_frames + 1, size=total_segments)
    classes = np.empty(total_segments, dtype=np.int64)
    classes[0] = rng.integers(c.num_classes)
    for i in range(1, total_segments):
        # force a class change at every boundary so every boundary is detectable
        step = rng.integers(1, c.num_classes)
        classes[i] = (classes[i - 1] + step) % c.num_classes

    actions: list[tuple[int, int, int]] = [(0, int(lengths[0]) - 1, int(classes[0]))]
    gaps: list[tuple[int, int]] = []
    overlap_junctions: list[int] = []  # index i: junction between action i and i+1
    prev_overlapped = False
    for i in range(1, total_segments):
        prev_stop = actions[-1][1]
        length = int(lengths[i])
        # an overlap may only start once the previous overlap has fully ended
        can_overlap = (not prev_overlapped) or (int(lengths[i - 1]) >= 2 * c.overlap_length)
        wants_overlap = rng.random() < c.overlap_fraction
        if wants_overlap and can_overlap:
            start = prev_stop + 1 - c.overlap_length
            overlap_junctions.append(i - 1)
            prev_overlapped = True
        else:
            prev_overlapped = False
            start = prev_stop + 1
            if rng.random() < c.unknown_gap_probability:
                gap_len = int(rng.integers(c.min_frames, c.max_frames + 1))
                gaps.append((start, start + gap_len - 1))
                start += gap_len
        actions.append((start, start + length - 1, int(classes[i])))

    num_frames = actions[-1][1] + 1
    dim, n_cls = c.feature_dim, c.num_classes

    base = np.zeros((num_frames, dim))
    target = np.zeros((num_frames, n_cls))
    feat_sigma = np.full((num_frames, 1), c.within_action_noise)
    logit_sigma = np.full((num_frames, 1), 0.1)
    for start, stop, cls in actions:
        base[start:stop + 1] = c.class_centroids[cls]
        target[start:stop + 1] = 0.0
        target[start:stop + 1, cls] = 1.0
    for j in overlap_junctions:
        old_start, old_stop, old_cls = actions[j]
        new_start, new_stop, new_cls = actions[j + 1]
        length = old_stop - new_start + 1
        w = (np.arange(length) + 1.0) / (length + 1.0)  # strictly interior ramp
        rows = slice(new_start, old_stop + 1)
        base[rows] = np.outer(1.0 - w, c.class_centroids[old_cls]) + \
            np.outer(w, c.class_centroids[new_cls])
        target[rows] = 0.0
        target[rows, old_cls] = 1.0 - w
        target[rows, new_cls] = w
    for start, stop in gaps:
        base[start:stop + 1] = 0.0
        target[start:stop + 1] = 0.0
        feat_sigma[start:stop + 1] = c.unknown_noise
        logit_sigma[start:stop + 1] = 0.5

    features = base + feat_sigma * rng.standard_normal((num_frames, dim))
    logits = c.logit_sharpness * target + logit_sigma * rng.standard_normal((num_frames, n_cls))

    segments = [LabelSegment(video_id, start, stop, cls) for start, stop, cls in actions]
    segments += [LabelSegment(video_id, start, stop, UNKNOWN) for start, stop in gaps]
    manifest = StreamManifest(
        video_id=video_id,
        domain_id=domain_id,
        fps=fps,
        num_frames=num_frames,
        feature_dim=dim,
        num_classes=n_cls,
        class_names=tuple(f"class_{i:02d}" for i in range(n_cls)),
    )
    return StreamDataset(manifest, features.astype(np.float32),
                         logits.astype(np.float32), segments)


def oracle_boundaries(dataset: StreamDataset) -> list[int]:
    """Exact start frames of every segment (action or unknown) except the first."""
    starts = sorted(s.start_frame for s in dataset.segments)
    return starts[1:]


def with_seed(config: SynthConfig, seed: int) -> SynthConfig:
    """Same generator parameters, different random stream."""
    return replace(config, seed=seed)
