"""Video backbones producing (embedding, logits) per clip.

The default "tiny3d" backbone is a small 3D CNN with deterministically seeded
weights: it runs fast on CPU and needs no checkpoint download, which is all
the format adapter requires. torchvision video models (r3d_18, mc3_18,
r2plus1d_18) are supported by name; pass a local state-dict path to use
trained weights, otherwise they start from seeded random initialization.
"""

from __future__ import annotations

import numpy as np


class BackboneLoadError(Exception):
    """Unknown backbone name or unloadable weights."""


TINY3D_SIDE = 64
TORCHVISION_SIDE = 112
_TORCHVISION = ("r3d_18", "mc3_18", "r2plus1d_18")


def _normalize(clips: np.ndarray, side: int) -> "torch.Tensor":  # noqa: F821
    import cv2
    import torch

    batch, t = clips.shape[0], clips.shape[1]
    resized = np.empty((batch, t, side, side, 3), dtype=np.float32)
    for b in range(batch):
        for i in range(t):
            resized[b, i] = cv2.resize(clips[b, i], (side, side))
    resized /= 255.0
    resized = (resized - 0.45) / 0.225
    # (B, T, H, W, C) -> (B, C, T, H, W)
    return torch.from_numpy(resized).permute(0, 4, 1, 2, 3).contiguous()


class Tiny3d:
    """3-layer 3D CNN; embedding dim 64, seeded random weights."""

    def __init__(self, num_classes: int = 8, seed: int = 0):
        import torch
        from torch import nn

        torch.manual_seed(seed)
        self.body = nn.Sequential(
            nn.Conv3d(3, 16, (3, 5, 5), stride=(1, 2, 2), padding=(1, 2, 2)),
            nn.ReLU(),
            nn.Conv3d(16, 32, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv3d(32, 64, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.AdaptiveAvgPool3d(1),
            nn.Flatten(),
        ).eval()
        self.head = nn.Linear(64, num_classes).eval()
        self.feature_dim = 64
        self.num_classes = num_classes

    def encode(self, clips: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        import torch

        with torch.no_grad():
            x = _normalize(clips, TINY3D_SIDE)
            emb = self.body(x)
            logits = self.head(emb)
        return emb.numpy().astype(np.float32), logits.numpy().astype(np.float32)


class TorchvisionVideo:
    """torchvision video classifier split at the final fully connected layer."""

    def __init__(self, name: str, weights_path: str | None = None, seed: int = 0):
        import torch

        try:
            from torchvision.models import video as tv_video
        except ImportError as exc:
            raise BackboneLoadError(f"torchvision unavailable: {exc}") from exc
        torch.manual_seed(seed)
        try:
            model = getattr(tv_video, name)(weights=None)
        except AttributeError as exc:
            raise BackboneLoadError(f"unknown torchvision model {name!r}") from exc
        if weights_path:
            try:
                state = torch.load(weights_path, map_location="cpu",
                                   weights_only=True)
                model.load_state_dict(state)
            except Exception as exc:
                raise BackboneLoadError(
                    f"cannot load weights {weights_path}: {exc}") from exc
        self.model = model.eval()
        self.feature_dim = model.fc.in_features
        self.num_classes = model.fc.out_features

    def encode(self, clips: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        import torch

        with torch.no_grad():
            x = _normalize(clips, TORCHVISION_SIDE)
            m = self.model
            feats = m.avgpool(m.layer4(m.layer3(m.layer2(m.layer1(m.stem(x))))))
            feats = feats.flatten(1)
            logits = m.fc(feats)
        return feats.numpy().astype(np.float32), logits.numpy().astype(np.float32)


def make_backbone(name: str, num_classes: int = 8, weights_path: str | None = None,
                  seed: int = 0):
    if name == "tiny3d":
        if weights_path:
            raise BackboneLoadError("tiny3d takes no weights file")
        return Tiny3d(num_classes=num_classes, seed=seed)
    if name in _TORCHVISION:
        return TorchvisionVideo(name, weights_path, seed=seed)
    raise BackboneLoadError(
        f"unknown backbone {name!r}; expected tiny3d or one of {_TORCHVISION}")
