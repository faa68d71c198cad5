"""Per-(video, expression) mask sequence files.

One JSON document per pair holds an RLE mask for every frame. The same
format backs exported training targets and inference predictions:

    {"video_id": ..., "exp_id": ..., "size": [H, W],
     "frames": ["00000", ...], "masks": [{"size": [H, W], "counts": ...}, ...]}

Files are written atomically (tmp + rename), so the presence of a file is
a reliable completion marker for resumable runs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaError
from .maskops import RleMask, rle_decode, rle_encode, rle_from_json, rle_to_json
from .model import BitMask, VideoMeta, VideoPrediction


@dataclass(frozen=True)
class PairRecord:
    """Mask sequence for one (video, expression) pair."""

    video_id: str
    exp_id: str
    height: int
    width: int
    frames: tuple[str, ...]
    rles: tuple[RleMask, ...]

    def __post_init__(self) -> None:
        if len(self.frames) != len(self.rles):
            raise SchemaError(
                f"{self.video_id}/{self.exp_id}: {len(self.frames)} frame names "
                f"but {len(self.rles)} masks"
            )
        for name, rle in zip(self.frames, self.rles):
            if (rle.height, rle.width) != (self.height, self.width):
                raise SchemaError(
                    f"{self.video_id}/{self.exp_id} frame {name}: mask is "
                    f"{rle.height}x{rle.width}, expected {self.height}x{self.width}"
                )

    def decode_masks(self) -> list[BitMask]:
        return [rle_decode(r) for r in self.rles]

    def to_prediction(self) -> VideoPrediction:
        return VideoPrediction(self.video_id, self.exp_id, tuple(self.decode_masks()))


def record_from_masks(
    video_id: str,
    exp_id: str,
    meta: VideoMeta,
    masks: list[BitMask] | tuple[BitMask, ...],
    compressed: bool = False,
) -> PairRecord:
    return PairRecord(
        video_id=video_id,
        exp_id=exp_id,
        height=meta.height,
        width=meta.width,
        frames=meta.frame_names,
        rles=tuple(rle_encode(m, compressed=compressed) for m in masks),
    )


def write_pair_record(record: PairRecord, path: Path | str) -> None:
    """Serialize a record to ``path`` atomically with deterministic bytes."""
    path = Path(path)
    doc = {
        "video_id": record.video_id,
        "exp_id": record.exp_id,
        "size": [record.height, record.width],
        "frames": list(record.frames),
        "masks": [rle_to_json(r) for r in record.rles],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    os.replace(tmp, path)


def read_pair_record(path: Path | str) -> PairRecord:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    try:
        video_id = doc["video_id"]
        exp_id = doc["exp_id"]
        size = doc["size"]
        frames = doc["frames"]
        masks = doc["masks"]
    except KeyError as exc:
        raise SchemaError(f"{path}: missing key {exc}") from exc
    if (
        not isinstance(size, list)
        or len(size) != 2
        or not all(isinstance(v, int) for v in size)
    ):
        raise SchemaError(f"{path}: 'size' must be [height, width]")
    if not isinstance(frames, list) or not isinstance(masks, list):
        raise SchemaError(f"{path}: 'frames' and 'masks' must be lists")
    try:
        rles = tuple(rle_from_json(m) for m in masks)
        return PairRecord(
            video_id=str(video_id),
            exp_id=str(exp_id),
            height=size[0],
            width=size[1],
            frames=tuple(str(f) for f in frames),
            rles=rles,
        )
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
