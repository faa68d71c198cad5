"""Core domain types shared by every stage of the pipeline.

All types are immutable after construction and validate their invariants
eagerly, so instances can be shared freely across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    FrameCountMismatchError,
    InvalidArgumentError,
)


@dataclass(frozen=True, eq=False)
class BitMask:
    """Dense binary mask: a read-only 2-D bool array with explicit height/width."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise InvalidArgumentError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgumentError(f"mask dimensions must be >= 1, got {arr.shape}")
        if arr.dtype != np.bool_ and not np.isin(arr, (0, 1)).all():
            raise InvalidArgumentError("mask values must be 0 or 1")
        arr = arr.astype(bool, copy=True)  # detach from caller before locking
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, height: int, width: int) -> "BitMask":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def count(self) -> int:
        """Number of set pixels."""
        return int(self.data.sum())

    def is_empty(self) -> bool:
        return not self.data.any()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self) -> str:
        return f"BitMask({self.height}x{self.width}, {self.count()} set)"


@dataclass(frozen=True)
class VideoMeta:
    """Identity and geometry of one video; pixel content stays on disk."""

    video_id: str
    frame_names: tuple[str, ...]
    height: int
    width: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "frame_names", tuple(self.frame_names))
        if len(self.frame_names) < 1:
            raise InvalidArgumentError(f"video {self.video_id!r} has no frames")
        if len(set(self.frame_names)) != len(self.frame_names):
            raise InvalidArgumentError(f"video {self.video_id!r} has duplicate frame names")
        if self.height < 1 or self.width < 1:
            raise InvalidArgumentError(
                f"video {self.video_id!r} has invalid size {self.height}x{self.width}"
            )

    @property
    def num_frames(self) -> int:
        return len(self.frame_names)


@dataclass(frozen=True)
class Expression:
    """A referring expression and the annotation ids of the objects it names."""

    exp_id: str
    text: str
    object_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "object_ids", tuple(self.object_ids))
        if not self.text:
            raise InvalidArgumentError(f"expression {self.exp_id!r} has empty text")
        if not self.object_ids:
            raise InvalidArgumentError(f"expression {self.exp_id!r} references no objects")


@dataclass(frozen=True, eq=False)
class VideoPrediction:
    """Final per-frame masks for one (video, expression) pair."""

    video_id: str
    exp_id: str
    masks: tuple[BitMask, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "masks", tuple(self.masks))
        if not self.masks:
            raise InvalidArgumentError("prediction must contain at least one mask")
        first = self.masks[0].shape
        for t, m in enumerate(self.masks):
            if m.shape != first:
                raise DimensionMismatchError(
                    f"prediction {self.video_id}/{self.exp_id}: frame {t} is "
                    f"{m.height}x{m.width}, expected {first[0]}x{first[1]}"
                )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VideoPrediction):
            return NotImplemented
        return (
            self.video_id == other.video_id
            and self.exp_id == other.exp_id
            and self.masks == other.masks
        )


@dataclass(frozen=True)
class EvalRecord:
    """Per-expression region similarity (j) and boundary accuracy (f)."""

    video_id: str
    exp_id: str
    j: float
    f: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.j <= 1.0:
            raise InvalidArgumentError(f"j={self.j} outside [0, 1]")
        if not 0.0 <= self.f <= 1.0:
            raise InvalidArgumentError(f"f={self.f} outside [0, 1]")

    @property
    def jf(self) -> float:
        return (self.j + self.f) / 2.0


def validate_prediction(pred: VideoPrediction, meta: VideoMeta) -> None:
    """Check that a prediction matches its video's frame count and size.

    Raises FrameCountMismatchError or DimensionMismatchError.
    """
    if len(pred.masks) != meta.num_frames:
        raise FrameCountMismatchError(
            f"prediction {pred.video_id}/{pred.exp_id} has {len(pred.masks)} masks, "
            f"video has {meta.num_frames} frames"
        )
    expected = (meta.height, meta.width)
    for t, m in enumerate(pred.masks):
        if m.shape != expected:
            raise DimensionMismatchError(
                f"prediction {pred.video_id}/{pred.exp_id} frame {t}: mask is "
                f"{m.height}x{m.width}, video is {meta.height}x{meta.width}"
            )


def require_uniform_shape(masks: Sequence[BitMask] | Iterable[BitMask]) -> tuple[int, int]:
    """Return the common shape of ``masks`` or raise DimensionMismatchError."""
    masks = list(masks)
    if not masks:
        raise InvalidArgumentError("no masks given")
    shape = masks[0].shape
    for i, m in enumerate(masks):
        if m.shape != shape:
            raise DimensionMismatchError(
                f"mask {i} is {m.height}x{m.width}, expected {shape[0]}x{shape[1]}"
            )
    return shape
