"""Streaming first-person action recognition pipeline and benchmark.

Per-frame feature/logit streams flow through a running aggregator whose
resets are driven either by ground truth (streaming), a fixed period (sbl),
a feature-drift detector (dbl), or the two-fold aggregator (a2). Protocol
runners score predictions at segment ends across domain pairs. Hot step
loops run on a compiled kernel when available (see egostream.backend_name).
"""

from ._backend import backend_name, get_backend
from .aggregate import (AggregatorState, SamplerKind, SamplerSpec, agg_output,
                        agg_push, agg_reset, sample_indices)
from .boundary import (DblConfig, DblState, Metric, Reference, SblConfig,
                       dbl_distance, dbl_step, sbl_step)
from .errors import (AnnotationMissing, DimensionMismatch, EgostreamError,
                     FormatMismatch, InvalidConfig, IoError,
                     MalformedAnnotation, MalformedManifest, NonFiniteValue,
                     NoPrediction, TruncatedStream)
from .protocols import (A2Strategy, DblStrategy, EvalReport, ExternalStrategy,
                        Mode, ProtocolSpec, SblStrategy, Trimming,
                        accuracy_vs_percentage, aggregate_domains,
                        evaluate_datasets, run_offline, run_online,
                        run_protocol, run_streaming, segment_predictions,
                        sweep)
from .records import (UNKNOWN, FrameRecord, LabelSegment, StreamDataset,
                      StreamManifest)
from .synth import SynthConfig, generate, oracle_boundaries, random_centroids
from .twofold import BoundaryEvent, TwoFoldState, a2_output, a2_step
from .wire import (load_annotations, load_dataset, load_manifest, open_stream,
                   read_stream, read_stream_header, write_annotations,
                   write_dataset, write_manifest, write_stream)

__version__ = "0.1.0"

__all__ = [
    "AggregatorState", "SamplerKind", "SamplerSpec", "agg_push", "agg_output",
    "agg_reset", "sample_indices",
    "DblConfig", "DblState", "SblConfig", "Metric", "Reference", "dbl_distance",
    "dbl_step", "sbl_step",
    "TwoFoldState", "BoundaryEvent", "a2_step", "a2_output",
    "Mode", "Trimming", "ProtocolSpec", "EvalReport", "SblStrategy",
    "DblStrategy", "A2Strategy", "ExternalStrategy", "run_offline",
    "run_streaming", "run_online", "run_protocol", "evaluate_datasets",
    "accuracy_vs_percentage", "sweep", "aggregate_domains",
    "segment_predictions",
    "SynthConfig", "generate", "oracle_boundaries", "random_centroids",
    "UNKNOWN", "FrameRecord", "StreamManifest", "LabelSegment", "StreamDataset",
    "load_manifest", "write_manifest", "open_stream", "read_stream",
    "read_stream_header", "write_stream", "load_annotations",
    "write_annotations", "load_dataset", "write_dataset",
    "backend_name", "get_backend",
    "EgostreamError", "IoError", "MalformedManifest", "FormatMismatch",
    "TruncatedStream", "NonFiniteValue", "MalformedAnnotation",
    "DimensionMismatch", "NoPrediction", "InvalidConfig", "AnnotationMissing",
]
