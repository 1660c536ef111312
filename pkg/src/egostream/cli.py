"""Command-line entry point.

Subcommands: synth, run, sweep, curve, bench, inspect. Configs are strict
JSON documents (a version field, unknown keys rejected) so that sweeps and
reports are reproducible byte-for-byte. All protocol logic lives in the
library modules; this file only parses, validates, dispatches, and writes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import backend_name
from .aggregate import SamplerKind, SamplerSpec
from .bench import STRATEGIES, bench_pipeline, compare_backends
from .boundary import DblConfig, Metric, Reference
from .errors import EgostreamError, InvalidConfig
from .protocols import (A2Strategy, DblStrategy, EvalReport, ExternalStrategy,
                        Mode, ProtocolSpec, SblStrategy, Trimming,
                        accuracy_vs_percentage, evaluate_datasets, sweep)
from .records import StreamDataset
from .synth import SynthConfig, generate, random_centroids
from .wire import load_dataset, read_stream, write_dataset

CONFIG_VERSION = 1


def _die(message: str) -> "NoReturn":  # noqa: F821
    raise InvalidConfig(message)


def _check_keys(doc: dict, required: set[str], optional: set[str], ctx: str) -> None:
    if not isinstance(doc, dict):
        _die(f"{ctx}: expected a JSON object")
    missing = required - doc.keys()
    if missing:
        _die(f"{ctx}: missing keys {sorted(missing)}")
    unknown = doc.keys() - required - optional
    if unknown:
        _die(f"{ctx}: unknown keys {sorted(unknown)}")


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        _die(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        _die(f"{path}: invalid JSON: {exc}")


def _check_version(doc: dict, ctx: str) -> None:
    if doc.get("version") != CONFIG_VERSION:
        _die(f"{ctx}: version must be {CONFIG_VERSION}")


def _dump_json(obj, path: str | Path | None = None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# -- config parsing ---------------------------------------------------------

_METRICS = {m.value: m for m in Metric}
_REFERENCES = {r.value: r for r in Reference}


def _parse_dbl_config(doc: dict, ctx: str) -> DblConfig:
    metric = doc.get("metric", "mse")
    reference = doc.get("reference", "segment_mean")
    if metric not in _METRICS:
        _die(f"{ctx}: metric must be one of {sorted(_METRICS)}")
    if reference not in _REFERENCES:
        _die(f"{ctx}: reference must be one of {sorted(_REFERENCES)}")
    try:
        return DblConfig(threshold=float(doc["tau"]), metric=_METRICS[metric],
                         reference=_REFERENCES[reference],
                         warmup=int(doc.get("warmup", 5)))
    except (ValueError, KeyError) as exc:
        _die(f"{ctx}: {exc}")


def parse_strategy(doc: dict, ctx: str = "strategy"):
    kind = doc.get("kind")
    if kind == "sbl":
        _check_keys(doc, {"kind", "k"}, set(), ctx)
        try:
            return SblStrategy(k=int(doc["k"]))
        except ValueError as exc:
            _die(f"{ctx}: {exc}")
    if kind == "dbl":
        _check_keys(doc, {"kind", "tau"}, {"metric", "reference", "warmup"}, ctx)
        return DblStrategy(_parse_dbl_config(doc, ctx))
    if kind == "a2":
        _check_keys(doc, {"kind", "tau"}, {"metric", "reference", "warmup", "delta"}, ctx)
        try:
            return A2Strategy(_parse_dbl_config(doc, ctx), delta=int(doc.get("delta", 20)))
        except ValueError as exc:
            _die(f"{ctx}: {exc}")
    if kind == "external":
        _check_keys(doc, {"kind", "boundaries"}, set(), ctx)
        return ExternalStrategy(doc["boundaries"])
    _die(f"{ctx}: kind must be one of ['a2', 'dbl', 'external', 'sbl']")


def parse_sampler(doc: dict, ctx: str = "sampler") -> SamplerSpec:
    _check_keys(doc, {"kind"}, {"frames_per_clip", "num_clips"}, ctx)
    kinds = {k.value: k for k in SamplerKind}
    if doc["kind"] not in kinds:
        _die(f"{ctx}: kind must be one of {sorted(kinds)}")
    fpc = doc.get("frames_per_clip")
    try:
        return SamplerSpec(kind=kinds[doc["kind"]],
                           frames_per_clip=None if fpc is None else int(fpc),
                           num_clips=int(doc.get("num_clips", 1)))
    except ValueError as exc:
        _die(f"{ctx}: {exc}")


def parse_protocol(doc: dict, ctx: str = "protocol") -> ProtocolSpec:
    _check_keys(doc, {"mode"}, {"trimming", "strategy", "sampler", "softmax_inputs"}, ctx)
    modes = {m.value: m for m in Mode}
    trims = {t.value: t for t in Trimming}
    if doc["mode"] not in modes:
        _die(f"{ctx}: mode must be one of {sorted(modes)}")
    trimming = doc.get("trimming", "trimmed")
    if trimming not in trims:
        _die(f"{ctx}: trimming must be one of {sorted(trims)}")
    strategy = None
    if "strategy" in doc:
        strategy = parse_strategy(doc["strategy"], f"{ctx}.strategy")
    sampler = None
    if "sampler" in doc:
        sampler = parse_sampler(doc["sampler"], f"{ctx}.sampler")
    return ProtocolSpec(mode=modes[doc["mode"]], trimming=trims[trimming],
                        strategy=strategy, sampler=sampler,
                        softmax_inputs=bool(doc.get("softmax_inputs", False)))


def parse_run_config(doc: dict) -> tuple[list[dict], ProtocolSpec, dict, int | None]:
    """Validate a run config document fully before any dataset is touched."""
    _check_keys(doc, {"version", "datasets", "protocol"}, {"output", "seed"}, "config")
    _check_version(doc, "config")
    if not isinstance(doc["datasets"], list) or not doc["datasets"]:
        _die("config: datasets must be a non-empty list")
    entries = []
    for i, entry in enumerate(doc["datasets"]):
        _check_keys(entry, {"manifest"}, {"stream", "annotations", "train_domain"},
                    f"config.datasets[{i}]")
        entries.append(entry)
    spec = parse_protocol(doc["protocol"], "config.protocol")
    output = doc.get("output", {})
    _check_keys(output, set(), {"report_json", "report_text", "report_csv"},
                "config.output")
    seed = doc.get("seed")
    return entries, spec, output, seed


def _load_datasets(entries: list[dict]) -> list[tuple[StreamDataset, str | None]]:
    items = []
    for entry in entries:
        dataset = load_dataset(entry["manifest"], entry.get("stream"),
                               entry.get("annotations"))
        items.append((dataset, entry.get("train_domain")))
    return items


# -- subcommands ------------------------------------------------------------

def cmd_synth(args) -> int:
    doc = _load_json(args.config)
    shared_keys = {"num_classes", "feature_dim"}
    optional = {"version", "within_action_noise", "logit_sharpness", "min_frames",
                "max_frames", "overlap_fraction", "overlap_length",
                "unknown_gap_probability", "unknown_noise", "fps",
                "centroid_seed", "videos"}
    _check_keys(doc, shared_keys | {"version", "videos"}, optional - {"version", "videos"},
                "synth config")
    _check_version(doc, "synth config")
    rng = np.random.default_rng(int(doc.get("centroid_seed", 0)))
    centroids = random_centroids(int(doc["num_classes"]), int(doc["feature_dim"]), rng)
    written = []
    for i, video in enumerate(doc["videos"]):
        _check_keys(video, {"video_id", "seed", "num_segments"}, {"domain_id"},
                    f"synth config.videos[{i}]")
        config = SynthConfig(
            num_classes=int(doc["num_classes"]),
            feature_dim=int(doc["feature_dim"]),
            class_centroids=centroids,
            within_action_noise=float(doc.get("within_action_noise", 0.05)),
            logit_sharpness=float(doc.get("logit_sharpness", 5.0)),
            min_frames=int(doc.get("min_frames", 30)),
            max_frames=int(doc.get("max_frames", 90)),
            overlap_fraction=float(doc.get("overlap_fraction", 0.0)),
            overlap_length=int(doc.get("overlap_length", 10)),
            unknown_gap_probability=float(doc.get("unknown_gap_probability", 0.0)),
            unknown_noise=float(doc.get("unknown_noise", 0.0)),
            seed=int(video["seed"]),
        )
        dataset = generate(config, int(video["num_segments"]),
                           video_id=str(video["video_id"]),
                           domain_id=str(video.get("domain_id", "D1")),
                           fps=float(doc.get("fps", 30.0)))
        paths = write_dataset(dataset, args.out)
        written.append({
            "video_id": dataset.manifest.video_id,
            "domain_id": dataset.manifest.domain_id,
            "num_frames": dataset.num_frames,
            "num_segments": len(dataset.segments),
            "stream": str(paths["stream"]),
            "manifest": str(paths["manifest"]),
            "annotations": str(paths["annotations"]),
        })
    if args.json:
        sys.stdout.write(_dump_json({"out_dir": args.out, "videos": written}))
    else:
        for v in written:
            print(f"wrote {v['video_id']}: {v['num_frames']} frames, "
                  f"{v['num_segments']} segments -> {v['stream']}")
    return 0


def _write_report(report: EvalReport, output: dict, as_json: bool,
                  extra: dict | None = None) -> None:
    doc = {"report": report.to_json_dict()}
    if extra:
        doc.update(extra)
    if output.get("report_json"):
        _dump_json(doc, output["report_json"])
    if output.get("report_text"):
        Path(output["report_text"]).write_text(report.to_text() + "\n", encoding="utf-8")
    if as_json:
        sys.stdout.write(_dump_json(doc))
    else:
        print(report.to_text())


def cmd_run(args) -> int:
    doc = _load_json(args.config)
    entries, spec, output, seed = parse_run_config(doc)
    if args.delta is not None:
        if not isinstance(spec.strategy, A2Strategy):
            _die("--delta requires an a2 strategy in the config")
        spec = replace(spec, strategy=A2Strategy(spec.strategy.config, args.delta))
    items = _load_datasets(entries)
    report = evaluate_datasets(items, spec, jobs=args.jobs)
    _write_report(report, output, args.json, extra={"config": doc, "seed": seed})
    return 0


def cmd_sweep(args) -> int:
    doc = _load_json(args.config)
    entries, spec, output, _ = parse_run_config(doc)
    try:
        values = [float(v) for v in args.values.split(",") if v]
    except ValueError:
        _die(f"--values must be a comma-separated number list, got {args.values!r}")
    if not values:
        _die("--values is empty")
    items = _load_datasets(entries)
    results = sweep(items, spec, args.param, values, jobs=args.jobs)
    rows = [{"param": args.param, "value": value, "report": rep.to_json_dict()}
            for value, rep in results]
    if output.get("report_json"):
        _dump_json(rows, output["report_json"])
    if output.get("report_csv"):
        _write_sweep_csv(rows, output["report_csv"])
    if args.json:
        sys.stdout.write(_dump_json(rows))
    else:
        for row in rows:
            rep = row["report"]
            print(f"{args.param}={row['value']:g} mean_seen={_fmt(rep['mean_seen'])} "
                  f"mean_unseen={_fmt(rep['mean_unseen'])} "
                  f"segments={rep['num_evaluated_segments']}")
    return 0


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def _write_sweep_csv(rows: list[dict], path: str) -> None:
    lines = ["param,value,mean_seen,mean_unseen,mean_accuracy,num_evaluated_segments"]
    for row in rows:
        rep = row["report"]
        lines.append(",".join([
            row["param"], f"{row['value']:g}",
            "" if rep["mean_seen"] is None else repr(rep["mean_seen"]),
            "" if rep["mean_unseen"] is None else repr(rep["mean_unseen"]),
            "" if rep["mean_accuracy"] is None else repr(rep["mean_accuracy"]),
            str(rep["num_evaluated_segments"]),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_curve(args) -> int:
    doc = _load_json(args.config)
    entries, spec, output, _ = parse_run_config(doc)
    try:
        fractions = [float(v) for v in args.fractions.split(",") if v]
    except ValueError:
        _die(f"--fractions must be a comma-separated list, got {args.fractions!r}")
    if not fractions:
        _die("--fractions is empty")
    items = _load_datasets(entries)
    per_video = []
    for dataset, _train in items:
        curve = accuracy_vs_percentage(dataset, fractions, spec if spec.mode
                                       is Mode.STREAMING else None)
        per_video.append({"video_id": dataset.manifest.video_id,
                          "curve": [[p, acc] for p, acc in curve]})
    mean_curve = [[fractions[i],
                   sum(v["curve"][i][1] for v in per_video) / len(per_video)]
                  for i in range(len(fractions))]
    doc_out = {"per_video": per_video, "mean_curve": mean_curve}
    if output.get("report_json"):
        _dump_json(doc_out, output["report_json"])
    if output.get("report_csv"):
        lines = ["video_id,fraction,accuracy"]
        for v in per_video:
            for p, acc in v["curve"]:
                lines.append(f"{v['video_id']},{p:g},{acc!r}")
        for p, acc in mean_curve:
            lines.append(f"__mean__,{p:g},{acc!r}")
        Path(output["report_csv"]).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.json:
        sys.stdout.write(_dump_json(doc_out))
    else:
        for p, acc in mean_curve:
            print(f"fraction={p:g} accuracy={acc:.4f}")
    return 0


def cmd_bench(args) -> int:
    if args.compare:
        result = compare_backends(strategy=args.strategy, feature_dim=args.dim,
                                  num_classes=args.classes, num_frames=args.frames,
                                  warmup_frames=args.warmup)
        sys.stdout.write(_dump_json(result))
        return 0
    report = bench_pipeline(strategy=args.strategy, feature_dim=args.dim,
                            num_classes=args.classes, num_frames=args.frames,
                            warmup_frames=args.warmup, backend=args.backend,
                            track_allocations=args.track_allocations)
    sys.stdout.write(_dump_json(report.to_json_dict()))
    return 0


def cmd_inspect(args) -> int:
    dim, classes, num_frames, records = read_stream(args.stream)
    lo = np.full(classes, np.inf)
    hi = np.full(classes, -np.inf)
    total = np.zeros(classes)
    count = 0
    for rec in records:
        np.minimum(lo, rec.logits, out=lo)
        np.maximum(hi, rec.logits, out=hi)
        total += rec.logits
        count += 1
    mean = (total / count) if count else np.zeros(classes)
    if args.json:
        sys.stdout.write(_dump_json({
            "feature_dim": dim, "num_classes": classes, "num_frames": num_frames,
            "logit_min": [float(v) for v in (lo if count else np.zeros(classes))],
            "logit_max": [float(v) for v in (hi if count else np.zeros(classes))],
            "logit_mean": [float(v) for v in mean],
        }))
    else:
        print(f"stream: {args.stream}")
        print(f"feature_dim={dim} num_classes={classes} num_frames={num_frames}")
        if count:
            print(f"{'class':>5} {'min':>10} {'max':>10} {'mean':>10}")
            for c in range(classes):
                print(f"{c:>5} {lo[c]:>10.4f} {hi[c]:>10.4f} {mean[c]:>10.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egostream",
        description="Streaming action-recognition pipeline and benchmark")
    parser.add_argument("--version", action="version",
                        version=f"egostream {__version__} ({backend_name()} backend)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic stream fixtures")
    p.add_argument("--config", required=True, help="synth config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run an evaluation protocol")
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--delta", type=int, default=None,
                   help="override the a2 hand-off delay from the config")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="videos evaluated in parallel (default: all cores)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep k / tau / delta over a grid")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, choices=["k", "tau", "delta"])
    p.add_argument("--values", required=True, help="comma-separated grid")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("curve", help="accuracy vs fraction of segment observed")
    p.add_argument("--config", required=True)
    p.add_argument("--fractions", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("bench", help="pipeline step throughput/latency")
    p.add_argument("--dim", type=int, default=1024)
    p.add_argument("--classes", type=int, default=8)
    p.add_argument("--frames", type=int, default=50_000)
    p.add_argument("--warmup", type=int, default=2_000)
    p.add_argument("--strategy", choices=list(STRATEGIES), default="a2")
    p.add_argument("--backend", choices=["compiled", "pure"], default=None)
    p.add_argument("--compare", action="store_true",
                   help="benchmark both backends and report the speedup")
    p.add_argument("--track-allocations", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("inspect", help="summarize a stream file")
    p.add_argument("stream", help="path to a .egws stream file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EgostreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
