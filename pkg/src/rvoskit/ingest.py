"""Dataset loading, union training targets, and synthetic data generation.

The on-disk layout follows the public benchmark release:

    <root>/<split>/JPEGImages/<video_id>/<frame_name>.jpg
    <root>/<split>/meta_expressions.json
    <root>/<split>/mask_dict.json

``meta_expressions.json`` maps video ids to their ordered frame names and
expressions (``{"videos": {vid: {"frames": [...], "expressions":
{exp_id: {"exp": str, "anno_id": [ids]}}}}}``); ``mask_dict.json`` maps
each annotation id to a per-frame list of RLE objects or null (null means
the object is absent from that frame). Video height/width are taken from
the first non-null annotation mask, so a video with no annotated pixels
anywhere is rejected as unusable.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np
from PIL import Image

from .errors import (
    InvalidArgumentError,
    MissingFileError,
    RleError,
    SchemaError,
    UnknownAnnotationIdError,
    UnknownVideoOrExpressionError,
)
from .maskops import (
    RleMask,
    rle_canonicalize,
    rle_decode,
    rle_encode,
    rle_from_json,
    union,
)
from .model import BitMask, Expression, VideoMeta
from .pairfile import record_from_masks, write_pair_record

AnnotationTrack = tuple  # per-frame RleMask | None


@dataclass(frozen=True)
class Dataset:
    """Immutable view of one split: videos, expressions, and annotation tracks."""

    root: Path
    split: str
    videos: tuple[VideoMeta, ...]
    expressions: Mapping[str, tuple[Expression, ...]]
    annotations: Mapping[str, AnnotationTrack]
    anno_video: Mapping[str, str]  # annotation id -> owning video id

    def __post_init__(self) -> None:
        object.__setattr__(self, "root", Path(self.root))
        object.__setattr__(self, "expressions", MappingProxyType(dict(self.expressions)))
        object.__setattr__(self, "annotations", MappingProxyType(dict(self.annotations)))
        object.__setattr__(self, "anno_video", MappingProxyType(dict(self.anno_video)))

    def video(self, video_id: str) -> VideoMeta:
        for meta in self.videos:
            if meta.video_id == video_id:
                return meta
        raise UnknownVideoOrExpressionError(f"video {video_id!r} not in dataset")

    def expression(self, video_id: str, exp_id: str) -> Expression:
        for expr in self.expressions.get(video_id, ()):
            if expr.exp_id == exp_id:
                return expr
        raise UnknownVideoOrExpressionError(
            f"expression {exp_id!r} of video {video_id!r} not in dataset"
        )

    def pairs(self) -> list[tuple[VideoMeta, Expression]]:
        """All (video, expression) pairs sorted by (video_id, exp_id)."""
        out = []
        for meta in sorted(self.videos, key=lambda m: m.video_id):
            for expr in sorted(self.expressions[meta.video_id], key=lambda e: e.exp_id):
                out.append((meta, expr))
        return out

    def frame_paths(self, video_id: str) -> list[str]:
        meta = self.video(video_id)
        base = self.root / self.split / "JPEGImages" / video_id
        return [str(base / f"{name}.jpg") for name in meta.frame_names]

    def object_mask(self, anno_id: str, frame_idx: int, shape: tuple[int, int]) -> BitMask:
        """Decoded mask of one object at one frame; absent objects give empty masks."""
        track = self.annotations.get(anno_id)
        if track is None:
            raise UnknownAnnotationIdError(f"annotation {anno_id!r} not in dataset")
        rle = track[frame_idx]
        if rle is None:
            return BitMask.zeros(*shape)
        return rle_decode(rle)


def _read_json(path: Path) -> object:
    if not path.is_file():
        raise MissingFileError(f"required file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc


def load_dataset(root: Path | str, split: str) -> Dataset:
    """Load and fully validate one split from ``root``."""
    root = Path(root)
    meta_path = root / split / "meta_expressions.json"
    mask_path = root / split / "mask_dict.json"
    meta_doc = _read_json(meta_path)
    mask_doc = _read_json(mask_path)

    if not isinstance(meta_doc, dict) or not isinstance(meta_doc.get("videos"), dict):
        raise SchemaError(f"{meta_path}: expected a top-level 'videos' mapping")
    if not isinstance(mask_doc, dict):
        raise SchemaError(f"{mask_path}: expected a mapping of annotation ids")

    videos: list[VideoMeta] = []
    expressions: dict[str, tuple[Expression, ...]] = {}
    annotations: dict[str, AnnotationTrack] = {}
    anno_video: dict[str, str] = {}

    for video_id, entry in meta_doc["videos"].items():
        where = f"{meta_path}: video {video_id!r}"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: expected an object")
        frames = entry.get("frames")
        exprs_doc = entry.get("expressions")
        if not isinstance(frames, list) or not all(isinstance(f, str) for f in frames):
            raise SchemaError(f"{where}: 'frames' must be a list of strings")
        if not isinstance(exprs_doc, dict):
            raise SchemaError(f"{where}: 'expressions' must be a mapping")

        exprs: list[Expression] = []
        for exp_id, exp_entry in exprs_doc.items():
            if not isinstance(exp_entry, dict):
                raise SchemaError(f"{where}: expression {exp_id!r} must be an object")
            text = exp_entry.get("exp")
            anno_ids = exp_entry.get("anno_id")
            if not isinstance(text, str):
                raise SchemaError(f"{where}: expression {exp_id!r} has no 'exp' text")
            if not isinstance(anno_ids, list) or not anno_ids:
                raise SchemaError(
                    f"{where}: expression {exp_id!r} has no 'anno_id' list"
                )
            anno_ids = [str(a) for a in anno_ids]
            try:
                exprs.append(Expression(str(exp_id), text, tuple(anno_ids)))
            except InvalidArgumentError as exc:
                raise SchemaError(f"{where}: expression {exp_id!r}: {exc}") from exc
            for anno_id in anno_ids:
                if anno_id not in mask_doc:
                    raise SchemaError(
                        f"{where}: expression {exp_id!r} references annotation "
                        f"{anno_id!r} absent from {mask_path.name}"
                    )
                owner = anno_video.setdefault(anno_id, video_id)
                if owner != video_id:
                    raise SchemaError(
                        f"{where}: annotation {anno_id!r} already belongs to video {owner!r}"
                    )

        # Normalize this video's annotation tracks before sizing the video.
        size: tuple[int, int] | None = None
        video_annos = [a for expr in exprs for a in expr.object_ids]
        seen: set[str] = set()
        for anno_id in video_annos:
            if anno_id in seen:
                continue
            seen.add(anno_id)
            track_doc = mask_doc[anno_id]
            if not isinstance(track_doc, list):
                raise SchemaError(
                    f"{mask_path}: annotation {anno_id!r} must be a per-frame list"
                )
            if len(track_doc) != len(frames):
                raise SchemaError(
                    f"{mask_path}: annotation {anno_id!r} has {len(track_doc)} frames, "
                    f"video {video_id!r} has {len(frames)}"
                )
            track: list[RleMask | None] = []
            for t, rle_doc in enumerate(track_doc):
                if rle_doc is None:
                    track.append(None)
                    continue
                try:
                    rle = rle_from_json(rle_doc)
                    if rle.is_compressed:
                        rle = rle_canonicalize(rle)  # expand + validate run sum once
                except (SchemaError, RleError) as exc:
                    raise type(exc)(
                        f"{mask_path}: video {video_id!r} annotation {anno_id!r} "
                        f"frame {t}: {exc}"
                    ) from exc
                if size is None:
                    size = (rle.height, rle.width)
                elif (rle.height, rle.width) != size:
                    raise SchemaError(
                        f"{mask_path}: video {video_id!r} annotation {anno_id!r} "
                        f"frame {t}: size {rle.height}x{rle.width} differs from "
                        f"{size[0]}x{size[1]}"
                    )
                track.append(rle)
            annotations[anno_id] = tuple(track)

        if size is None:
            raise SchemaError(
                f"{where}: no non-null annotation mask; video size cannot be determined"
            )
        try:
            videos.append(VideoMeta(video_id, tuple(frames), size[0], size[1]))
        except InvalidArgumentError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
        expressions[video_id] = tuple(exprs)

    if not videos:
        raise SchemaError(f"{meta_path}: dataset contains no videos")
    return Dataset(root, split, tuple(videos), expressions, annotations, anno_video)


def build_union_targets(expr: Expression, dataset: Dataset) -> list[BitMask]:
    """Per-frame union of all masks the expression refers to.

    Expressions naming several objects are supervised with one combined
    mask per frame; objects absent from a frame contribute nothing.
    """
    for anno_id in expr.object_ids:
        if anno_id not in dataset.annotations:
            raise UnknownAnnotationIdError(f"annotation {anno_id!r} not in dataset")
    video_id = dataset.anno_video[expr.object_ids[0]]
    meta = dataset.video(video_id)
    shape = (meta.height, meta.width)
    targets = []
    for t in range(meta.num_frames):
        masks = [dataset.object_mask(a, t, shape) for a in expr.object_ids]
        targets.append(union(masks))
    return targets


def export_training_targets(dataset: Dataset, out: Path | str) -> list[dict]:
    """Write one RLE-JSON target file per (video, expression) plus a manifest.

    Returns the manifest entries. Ordering is deterministic (sorted by
    video id then expression id) and re-exports are byte-identical.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for meta, expr in dataset.pairs():
        targets = build_union_targets(expr, dataset)
        record = record_from_masks(meta.video_id, expr.exp_id, meta, targets)
        rel = f"{meta.video_id}/{expr.exp_id}.json"
        write_pair_record(record, out / rel)
        entries.append(
            {"video_id": meta.video_id, "exp_id": expr.exp_id, "target_path": rel}
        )
    manifest = out / "manifest.jsonl"
    tmp = manifest.with_name(manifest.name + ".tmp")
    with tmp.open("w") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    tmp.replace(manifest)
    return entries


# --- synthetic datasets -----------------------------------------------------


@dataclass(frozen=True)
class ObjectScript:
    """One moving shape: analytic masks, so ground truth is exact."""

    shape: str  # "square" | "disk"
    size: int  # side length (square) or radius (disk)
    start: tuple[int, int]  # (row, col): top-left for squares, center for disks
    velocity: tuple[int, int]  # pixels per frame, (d_row, d_col)

    def __post_init__(self) -> None:
        if self.shape not in ("square", "disk"):
            raise InvalidArgumentError(f"unknown shape {self.shape!r}")
        if self.size < 1:
            raise InvalidArgumentError("object size must be >= 1")

    def render(self, t: int, height: int, width: int) -> np.ndarray:
        """Mask at frame ``t`` (clipped to the canvas)."""
        r = self.start[0] + t * self.velocity[0]
        c = self.start[1] + t * self.velocity[1]
        grid = np.zeros((height, width), dtype=bool)
        if self.shape == "square":
            r0, r1 = max(r, 0), min(r + self.size, height)
            c0, c1 = max(c, 0), min(c + self.size, width)
            if r0 < r1 and c0 < c1:
                grid[r0:r1, c0:c1] = True
        else:
            rows = np.arange(height)[:, None] - r
            cols = np.arange(width)[None, :] - c
            grid = rows * rows + cols * cols <= self.size * self.size
        return grid

    def describe(self) -> str:
        vr, vc = self.velocity
        parts = []
        if vc > 0:
            parts.append("right")
        elif vc < 0:
            parts.append("left")
        if vr > 0:
            parts.append("down")
        elif vr < 0:
            parts.append("up")
        motion = "moving " + " and ".join(parts) if parts else "staying still"
        return f"the {self.shape} {motion}"


@dataclass(frozen=True)
class SynthConfig:
    """Desk-scale synthetic dataset with analytic ground truth."""

    num_videos: int = 2
    frames_per_video: int = 8
    height: int = 48
    width: int = 64
    objects_per_video: int = 2
    seed: int = 0
    scripts: tuple[tuple[ObjectScript, ...], ...] | None = None  # overrides randoms

    def __post_init__(self) -> None:
        for name in ("num_videos", "frames_per_video", "height", "width", "objects_per_video"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be >= 1")
        if self.scripts is not None:
            scripts = tuple(tuple(v) for v in self.scripts)
            object.__setattr__(self, "scripts", scripts)
            if len(scripts) != self.num_videos:
                raise InvalidArgumentError(
                    f"got scripts for {len(scripts)} videos, expected {self.num_videos}"
                )


def _random_script(rng: np.random.Generator, cfg: SynthConfig) -> ObjectScript:
    shape = "square" if rng.integers(0, 2) == 0 else "disk"
    size = int(rng.integers(2, max(3, min(cfg.height, cfg.width) // 6) + 1))
    speed_cap = 2
    vr = int(rng.integers(-speed_cap, speed_cap + 1))
    vc = int(rng.integers(-speed_cap, speed_cap + 1))
    # Keep the object fully inside the canvas over the whole clip so mask
    # pixel counts stay constant and centroids move exactly with velocity.
    span = cfg.frames_per_video - 1
    if shape == "square":
        lo_r, hi_r = 0, cfg.height - size
        lo_c, hi_c = 0, cfg.width - size
    else:
        lo_r, hi_r = size, cfg.height - 1 - size
        lo_c, hi_c = size, cfg.width - 1 - size
    lo_r += max(0, -vr * span)
    hi_r -= max(0, vr * span)
    lo_c += max(0, -vc * span)
    hi_c -= max(0, vc * span)
    if lo_r > hi_r:
        vr = 0
        lo_r, hi_r = (size, cfg.height - 1 - size) if shape == "disk" else (0, cfg.height - size)
    if lo_c > hi_c:
        vc = 0
        lo_c, hi_c = (size, cfg.width - 1 - size) if shape == "disk" else (0, cfg.width - size)
    r = int(rng.integers(lo_r, hi_r + 1))
    c = int(rng.integers(lo_c, hi_c + 1))
    return ObjectScript(shape, size, (r, c), (vr, vc))


def _encode_frame_jpeg(height: int, width: int) -> bytes:
    img = Image.new("RGB", (width, height), (96, 96, 96))
    buf = io.BytesIO()
    img.save(buf, "JPEG", quality=80)
    return buf.getvalue()


def synth_generate(cfg: SynthConfig, out: Path | str, split: str = "synth") -> Dataset:
    """Write a benchmark-layout dataset of scripted moving shapes.

    The same seed always produces byte-identical output. Returns the
    freshly loaded (hence fully validated) dataset.
    """
    out = Path(out)
    rng = np.random.default_rng(cfg.seed)
    split_dir = out / split
    images_dir = split_dir / "JPEGImages"
    frame_bytes = _encode_frame_jpeg(cfg.height, cfg.width)
    frame_names = [f"{t:05d}" for t in range(cfg.frames_per_video)]

    meta_videos: dict[str, dict] = {}
    mask_dict: dict[str, list] = {}
    next_anno = 0
    for v in range(cfg.num_videos):
        video_id = f"video{v:04d}"
        if cfg.scripts is not None:
            scripts = list(cfg.scripts[v])
        else:
            scripts = [_random_script(rng, cfg) for _ in range(cfg.objects_per_video)]

        anno_ids = []
        for script in scripts:
            anno_id = str(next_anno)
            next_anno += 1
            anno_ids.append(anno_id)
            track = []
            for t in range(cfg.frames_per_video):
                mask = BitMask(script.render(t, cfg.height, cfg.width))
                track.append(
                    None
                    if mask.is_empty()
                    else {
                        "size": [cfg.height, cfg.width],
                        "counts": list(rle_encode(mask).counts),
                    }
                )
            mask_dict[anno_id] = track

        expressions: dict[str, dict] = {}
        for i, (script, anno_id) in enumerate(zip(scripts, anno_ids)):
            expressions[str(i)] = {"exp": script.describe(), "anno_id": [anno_id]}
        if len(scripts) >= 2:
            expressions[str(len(scripts))] = {
                "exp": "all the shapes in the scene",
                "anno_id": list(anno_ids),
            }
        meta_videos[video_id] = {"frames": frame_names, "expressions": expressions}

        video_dir = images_dir / video_id
        video_dir.mkdir(parents=True, exist_ok=True)
        for name in frame_names:
            (video_dir / f"{name}.jpg").write_bytes(frame_bytes)

    split_dir.mkdir(parents=True, exist_ok=True)
    (split_dir / "meta_expressions.json").write_text(
        json.dumps({"videos": meta_videos}, sort_keys=True, indent=2) + "\n"
    )
    (split_dir / "mask_dict.json").write_text(
        json.dumps(mask_dict, sort_keys=True, separators=(",", ":")) + "\n"
    )
    return load_dataset(out, split)
