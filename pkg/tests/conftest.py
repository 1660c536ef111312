import numpy as np
import pytest

from egostream import FrameRecord, StreamManifest


def make_manifest(num_frames, feature_dim=4, num_classes=3, video_id="vid",
                  domain_id="D1", fps=30.0):
    return StreamManifest(
        video_id=video_id, domain_id=domain_id, fps=fps, num_frames=num_frames,
        feature_dim=feature_dim, num_classes=num_classes,
        class_names=tuple(f"class_{i:02d}" for i in range(num_classes)))


def random_records(rng, num_frames, feature_dim=4, num_classes=3):
    return [
        FrameRecord(i,
                    rng.standard_normal(feature_dim).astype(np.float32),
                    rng.standard_normal(num_classes).astype(np.float32))
        for i in range(num_frames)
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
