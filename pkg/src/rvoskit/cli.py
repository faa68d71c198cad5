"""Command-line entry point.

Subcommands: plan, synth, targets, infer, eval, ablate, pack. Run
settings come from a flat JSON config file; command-line flags override
file values, and the effective config is echoed into the output
directory for provenance. The default dataset root can also be set via
the RVOSKIT_DATA_ROOT environment variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import os
import shlex
import sys
import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from PIL import Image

from . import __version__
from .ablation import DEFAULT_LENGTHS, GridSpec, render_grid, render_grid_csv, run_grid
from .bridge import (
    DEFAULT_NUM_QUERIES,
    DEFAULT_RESIZE_SHORT,
    AdapterSpec,
    NoiseConfig,
    OracleSegmenter,
    SegmenterPool,
)
from .errors import (
    InvalidArgumentError,
    MissingPredictionError,
    SchemaError,
    ToolkitError,
)
from .figures import save_grid_figure, save_report_figure
from .ingest import Dataset, SynthConfig, build_union_targets, export_training_targets, load_dataset, synth_generate
from .metrics import Report, aggregate, evaluate_expression, format_table, format_table_csv
from .model import validate_prediction
from .pairfile import read_pair_record, record_from_masks, write_pair_record
from .pipeline import run_pair
from .sampling import SamplingScheme, make_plan, plan_to_json

ENV_DATA_ROOT = "RVOSKIT_DATA_ROOT"
PACK_TEMPLATE = "{video_id}/{exp_id}/{frame}.png"


@dataclass(frozen=True)
class RunConfig:
    """Everything an inference or ablation run needs; flat and serializable."""

    dataset_root: str
    split: str
    scheme: str = "non-continuous"
    chunk_length: int = 30
    resize_short: int = DEFAULT_RESIZE_SHORT
    num_queries: int = DEFAULT_NUM_QUERIES
    segmenter: str = "oracle"  # "oracle" | "external"
    adapter_cmd: str = ""
    adapter_timeout: float = 300.0
    score_sigma: float = 0.0
    morph_radius: int = 0
    flip_prob: float = 0.0
    seed: int = 0
    workers: int = 1
    output_dir: str = "runs/out"
    limit: int | None = None

    def noise(self) -> NoiseConfig:
        return NoiseConfig(self.score_sigma, self.morph_radius, self.flip_prob, self.seed)

    def adapter_spec(self) -> AdapterSpec:
        argv = tuple(shlex.split(self.adapter_cmd))
        if not argv:
            raise InvalidArgumentError("segmenter is 'external' but adapter_cmd is empty")
        return AdapterSpec(argv, timeout=self.adapter_timeout)


def load_run_config(path: str | None, overrides: dict) -> RunConfig:
    values: dict = {}
    if path:
        cfg_path = Path(path)
        if not cfg_path.is_file():
            raise InvalidArgumentError(f"config file not found: {cfg_path}")
        try:
            doc = json.loads(cfg_path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{cfg_path}: not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise SchemaError(f"{cfg_path}: config must be a JSON object")
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise SchemaError(f"{cfg_path}: unknown config keys: {', '.join(unknown)}")
        values.update(doc)
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "dataset_root" not in values:
        env_root = os.environ.get(ENV_DATA_ROOT)
        if env_root:
            values["dataset_root"] = env_root
    for required in ("dataset_root", "split"):
        if not values.get(required):
            raise InvalidArgumentError(
                f"missing required setting {required!r} (flag, config file, or "
                f"{ENV_DATA_ROOT} for the dataset root)"
            )
    if values.get("segmenter") not in (None, "oracle", "external"):
        raise InvalidArgumentError(
            f"segmenter must be 'oracle' or 'external', got {values['segmenter']!r}"
        )
    return RunConfig(**values)


def _echo_config(config: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = dataclasses.asdict(config)
    (out_dir / "config.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n"
    )


def _open_segmenter(config: RunConfig, dataset: Dataset):
    if config.segmenter == "external":
        return SegmenterPool(config.adapter_spec(), workers=max(1, config.workers))
    return OracleSegmenter(dataset, config.noise())


# --- subcommands --------------------------------------------------------------


def cmd_plan(args: argparse.Namespace) -> int:
    plan = make_plan(args.frames, args.chunk_length, SamplingScheme.parse(args.scheme))
    print(json.dumps(plan_to_json(plan)))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = SynthConfig(
        num_videos=args.videos,
        frames_per_video=args.frames,
        height=args.height,
        width=args.width,
        objects_per_video=args.objects,
        seed=args.seed,
    )
    dataset = synth_generate(cfg, args.out, split=args.split)
    pairs = len(dataset.pairs())
    print(
        f"wrote {len(dataset.videos)} videos / {pairs} (video, expression) pairs "
        f"to {Path(args.out) / args.split}"
    )
    return 0


def cmd_targets(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset_root, args.split)
    entries = export_training_targets(dataset, args.out)
    print(f"exported {len(entries)} union target sequences to {args.out}")
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    config = load_run_config(args.config, _run_overrides(args))
    dataset = load_dataset(config.dataset_root, config.split)
    scheme = SamplingScheme.parse(config.scheme)
    out_dir = Path(config.output_dir)
    pred_dir = out_dir / "predictions"
    _echo_config(config, out_dir)

    pairs = dataset.pairs()
    if config.limit is not None:
        pairs = pairs[: config.limit]
    failures: list[str] = []
    done = 0
    skipped = 0

    with _open_segmenter(config, dataset) as segmenter:

        def one(pair) -> str | None:
            meta, expr = pair
            target = pred_dir / meta.video_id / f"{expr.exp_id}.json"
            if target.is_file():
                return "skipped"
            try:
                prediction = run_pair(
                    dataset,
                    meta,
                    expr,
                    scheme,
                    config.chunk_length,
                    segmenter,
                    config.num_queries,
                    config.resize_short,
                )
                record = record_from_masks(
                    meta.video_id, expr.exp_id, meta, list(prediction.masks)
                )
                write_pair_record(record, target)
                return None
            except ToolkitError as exc:
                return f"{meta.video_id}/{expr.exp_id}: {exc}"

        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                outcomes = list(pool.map(one, pairs))
        else:
            outcomes = [one(pair) for pair in pairs]

    for outcome in outcomes:
        if outcome == "skipped":
            skipped += 1
        elif outcome is None:
            done += 1
        else:
            failures.append(outcome)
            print(f"error: {outcome}", file=sys.stderr)

    manifest = out_dir / "manifest.jsonl"
    with manifest.open("w") as fh:
        for meta, expr in dataset.pairs():
            rel = f"predictions/{meta.video_id}/{expr.exp_id}.json"
            if (out_dir / rel).is_file():
                fh.write(
                    json.dumps(
                        {"video_id": meta.video_id, "exp_id": expr.exp_id, "path": rel},
                        sort_keys=True,
                    )
                    + "\n"
                )
    print(f"completed {done} pairs ({skipped} already present) -> {pred_dir}")
    if failures:
        print(f"{len(failures)} pairs failed", file=sys.stderr)
        return 1
    return 0


def _load_predictions(dataset: Dataset, pred_dir: Path):
    missing = []
    loaded = []
    for meta, expr in dataset.pairs():
        path = pred_dir / meta.video_id / f"{expr.exp_id}.json"
        if not path.is_file():
            missing.append(f"{meta.video_id}/{expr.exp_id}")
            continue
        loaded.append((meta, expr, path))
    if missing:
        raise MissingPredictionError(
            f"no prediction for {len(missing)} pairs: {', '.join(missing)}"
        )
    return loaded


def cmd_eval(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset_root, args.split)
    pred_dir = Path(args.predictions)
    out_dir = Path(args.out) if args.out else pred_dir.parent / "report"
    label = args.label or pred_dir.parent.name or "run"

    records = []
    for meta, expr, path in _load_predictions(dataset, pred_dir):
        record = read_pair_record(path)
        prediction = record.to_prediction()
        validate_prediction(prediction, meta)
        gt = build_union_targets(expr, dataset)
        records.append(evaluate_expression(prediction, gt))
    report = aggregate(records)

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(_report_json(label, report))
    (out_dir / "records.csv").write_text(_records_csv(report))
    table = format_table([(label, report)], ranked=False)
    (out_dir / "table.txt").write_text(table)
    (out_dir / "table.csv").write_text(format_table_csv([(label, report)], ranked=False))
    save_report_figure(report, out_dir / "report.png", title=label)
    print(table, end="")
    print(f"report written to {out_dir}")
    return 0


def _report_json(label: str, report: Report) -> str:
    doc = {
        "label": label,
        "mean_j": report.mean_j,
        "mean_f": report.mean_f,
        "mean_jf": report.mean_jf,
        "records": [
            {"video_id": r.video_id, "exp_id": r.exp_id, "j": r.j, "f": r.f, "jf": r.jf}
            for r in report.records
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _records_csv(report: Report) -> str:
    lines = ["video_id,exp_id,j,f,jf"]
    for r in report.records:
        lines.append(f"{r.video_id},{r.exp_id},{r.j!r},{r.f!r},{r.jf!r}")
    return "\n".join(lines) + "\n"


def cmd_ablate(args: argparse.Namespace) -> int:
    config = load_run_config(args.config, _run_overrides(args))
    dataset = load_dataset(config.dataset_root, config.split)
    schemes = tuple(
        SamplingScheme.parse(s.strip()) for s in args.schemes.split(",") if s.strip()
    )
    lengths = tuple(int(v) for v in args.lengths.split(",") if v.strip())
    segmenter = config.adapter_spec() if config.segmenter == "external" else "oracle"
    spec = GridSpec(
        schemes=schemes,
        lengths=lengths,
        dataset=dataset,
        segmenter=segmenter,
        noise=config.noise(),
        num_queries=config.num_queries,
        resize_short=config.resize_short,
    )
    matrix = run_grid(spec, workers=config.workers)

    out_dir = Path(config.output_dir)
    _echo_config(config, out_dir)
    table = render_grid(spec, matrix)
    (out_dir / "grid.txt").write_text(table)
    (out_dir / "grid.csv").write_text(render_grid_csv(spec, matrix))
    index = {
        "schemes": [s.value for s in spec.schemes],
        "lengths": list(spec.lengths),
        "cells": [
            [
                {"mean_j": rep.mean_j, "mean_f": rep.mean_f, "mean_jf": rep.mean_jf}
                for rep in row
            ]
            for row in matrix
        ],
    }
    (out_dir / "grid.json").write_text(json.dumps(index, sort_keys=True, indent=2) + "\n")
    save_grid_figure(spec, matrix, out_dir / "grid.png")
    print(table, end="")
    print(f"grid written to {out_dir}")
    return 0


def cmd_pack(args: argparse.Namespace) -> int:
    pred_dir = Path(args.predictions)
    paths = sorted(pred_dir.glob("*/*.json"))
    if not paths:
        raise MissingPredictionError(f"no prediction files under {pred_dir}")
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    members = 0
    tmp = out_path.with_name(out_path.name + ".tmp")
    with zipfile.ZipFile(tmp, "w", compression=zipfile.ZIP_STORED) as archive:
        for path in paths:
            record = read_pair_record(path)
            for name, mask in zip(record.frames, record.decode_masks()):
                try:
                    arcname = args.template.format(
                        video_id=record.video_id, exp_id=record.exp_id, frame=name
                    )
                except (KeyError, IndexError) as exc:
                    raise InvalidArgumentError(
                        f"bad --template {args.template!r}: unknown field {exc}"
                    ) from exc
                buf = io.BytesIO()
                img = Image.fromarray(mask.data.astype("uint8") * 255, mode="L")
                img.save(buf, "PNG")
                info = zipfile.ZipInfo(arcname, date_time=(1980, 1, 1, 0, 0, 0))
                archive.writestr(info, buf.getvalue())
                members += 1
    os.replace(tmp, out_path)
    print(f"packed {members} PNG masks from {len(paths)} pairs into {out_path}")
    return 0


# --- argument parsing ---------------------------------------------------------


def _run_overrides(args: argparse.Namespace) -> dict:
    keys = (
        "dataset_root",
        "split",
        "scheme",
        "chunk_length",
        "resize_short",
        "num_queries",
        "segmenter",
        "adapter_cmd",
        "adapter_timeout",
        "score_sigma",
        "morph_radius",
        "flip_prob",
        "seed",
        "workers",
        "output_dir",
        "limit",
    )
    return {k: getattr(args, k, None) for k in keys}


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--dataset-root", dest="dataset_root")
    parser.add_argument("--split", dest="split")
    parser.add_argument(
        "--scheme",
        choices=[s.value for s in SamplingScheme],
        help="frame sampling scheme (default non-continuous)",
    )
    parser.add_argument("--chunk-length", dest="chunk_length", type=int,
                        help="sub-video length T_c (default 30)")
    parser.add_argument("--resize-short", dest="resize_short", type=int,
                        help="shorter side forwarded to the segmenter (default 360)")
    parser.add_argument("--num-queries", dest="num_queries", type=int,
                        help="object query budget Q (default 5)")
    parser.add_argument("--segmenter", choices=["oracle", "external"])
    parser.add_argument("--adapter-cmd", dest="adapter_cmd",
                        help="external adapter command line (shell-quoted)")
    parser.add_argument("--adapter-timeout", dest="adapter_timeout", type=float)
    parser.add_argument("--score-sigma", dest="score_sigma", type=float)
    parser.add_argument("--morph-radius", dest="morph_radius", type=int)
    parser.add_argument("--flip-prob", dest="flip_prob", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--output-dir", dest="output_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rvoskit",
        description="Referring video segmentation pipeline: sampling, inference "
        "orchestration, J&F evaluation, and submission packaging.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="print the frame subsets a plan produces")
    p.add_argument("--frames", type=int, required=True, help="video length T")
    p.add_argument("--chunk-length", dest="chunk_length", type=int, required=True)
    p.add_argument("--scheme", default="non-continuous",
                   choices=[s.value for s in SamplingScheme])
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("synth", help="generate a synthetic dataset with exact ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="synth")
    p.add_argument("--videos", type=int, default=2)
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--height", type=int, default=48)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--objects", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("targets", help="export union training targets plus a manifest")
    p.add_argument("--dataset-root", dest="dataset_root",
                   default=os.environ.get(ENV_DATA_ROOT), required=ENV_DATA_ROOT not in os.environ)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_targets)

    p = sub.add_parser("infer", help="run the full pipeline over a split (resumable)")
    _add_run_flags(p)
    p.add_argument("--limit", type=int, help="only process the first N pairs")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="score a predictions directory against ground truth")
    p.add_argument("--dataset-root", dest="dataset_root",
                   default=os.environ.get(ENV_DATA_ROOT), required=ENV_DATA_ROOT not in os.environ)
    p.add_argument("--split", required=True)
    p.add_argument("--predictions", required=True,
                   help="directory holding <video_id>/<exp_id>.json files")
    p.add_argument("--out", help="report directory (default: sibling 'report')")
    p.add_argument("--label", help="row label in the rendered table")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run the scheme x sub-video-length grid")
    _add_run_flags(p)
    p.add_argument("--schemes", default=",".join(s.value for s in SamplingScheme))
    p.add_argument("--lengths", default=",".join(str(v) for v in DEFAULT_LENGTHS))
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("pack", help="zip predictions as 0/255 grayscale PNGs")
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True, help="output zip path")
    p.add_argument("--template", default=PACK_TEMPLATE,
                   help=f"archive member template (default {PACK_TEMPLATE!r})")
    p.set_defaults(func=cmd_pack)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
