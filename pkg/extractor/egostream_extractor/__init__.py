"""Adapter that turns raw videos into egostream wire-format streams.

A temporal window of fixed length slides over the decoded (and fps-resampled)
frames with stride 1; each window position is pushed through a video backbone
and yields one record: the penultimate-layer embedding plus the classifier
logits. Leading positions without a full window repeat the first computed
record so frame indices stay dense and aligned with annotations.
"""

from .extract import ExtractorConfig, extract, main

__all__ = ["ExtractorConfig", "extract", "main"]
__version__ = "0.1.0"
