"""Frame-sampling plans for chunked long-video inference.

Three schemes are supported. Non-continuous sampling interleaves frames
with stride N (frame i joins subset i mod N), continuous sampling cuts
the video into consecutive blocks, and no-sampling uses the same blocks
but selects one trajectory globally across the whole video instead of
per subset.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InvalidArgumentError


class SamplingScheme(enum.Enum):
    NON_CONTINUOUS = "non-continuous"
    CONTINUOUS = "continuous"
    NO_SAMPLING = "no-sampling"

    @classmethod
    def parse(cls, text: str) -> "SamplingScheme":
        for scheme in cls:
            if scheme.value == text:
                return scheme
        options = ", ".join(s.value for s in cls)
        raise InvalidArgumentError(f"unknown scheme {text!r} (expected one of: {options})")


class SelectionMode(enum.Enum):
    PER_SUBSET = "per-subset"
    GLOBAL = "global"


@dataclass(frozen=True)
class SamplingPlan:
    """Scheme plus ordered frame-index subsets partitioning one video."""

    scheme: SamplingScheme
    total_frames: int
    chunk_length: int
    subsets: tuple[tuple[int, ...], ...]
    selection_mode: SelectionMode

    def __post_init__(self) -> None:
        object.__setattr__(self, "subsets", tuple(tuple(s) for s in self.subsets))
        if self.total_frames < 1 or self.chunk_length < 1:
            raise InvalidArgumentError(
                f"need total_frames >= 1 and chunk_length >= 1, got "
                f"{self.total_frames}, {self.chunk_length}"
            )
        expected_n = math.ceil(self.total_frames / self.chunk_length)
        if len(self.subsets) != expected_n:
            raise InvalidArgumentError(
                f"plan has {len(self.subsets)} subsets, expected {expected_n}"
            )
        seen: list[int] = []
        for n, subset in enumerate(self.subsets):
            if not subset:
                raise InvalidArgumentError(f"subset {n} is empty")
            if len(subset) > self.chunk_length:
                raise InvalidArgumentError(
                    f"subset {n} has {len(subset)} frames, chunk length is {self.chunk_length}"
                )
            if list(subset) != sorted(subset):
                raise InvalidArgumentError(f"subset {n} is not sorted: {subset}")
            seen.extend(subset)
        if sorted(seen) != list(range(self.total_frames)):
            raise InvalidArgumentError("subsets do not partition the frame range")

    @property
    def num_subsets(self) -> int:
        return len(self.subsets)


def make_plan(total_frames: int, chunk_length: int, scheme: SamplingScheme) -> SamplingPlan:
    """Partition ``range(total_frames)`` into ceil(T / chunk_length) subsets.

    Non-continuous subsets are the stride-N residue classes; continuous and
    no-sampling subsets are consecutive blocks of ``chunk_length`` frames
    (the last block may be shorter). Only the no-sampling scheme selects
    trajectories globally.
    """
    if total_frames < 1:
        raise InvalidArgumentError(f"total_frames must be >= 1, got {total_frames}")
    if chunk_length < 1:
        raise InvalidArgumentError(f"chunk_length must be >= 1, got {chunk_length}")
    n_subsets = math.ceil(total_frames / chunk_length)
    if scheme is SamplingScheme.NON_CONTINUOUS:
        subsets = tuple(
            tuple(range(n, total_frames, n_subsets)) for n in range(n_subsets)
        )
    else:
        subsets = tuple(
            tuple(range(n * chunk_length, min((n + 1) * chunk_length, total_frames)))
            for n in range(n_subsets)
        )
    mode = (
        SelectionMode.GLOBAL
        if scheme is SamplingScheme.NO_SAMPLING
        else SelectionMode.PER_SUBSET
    )
    return SamplingPlan(scheme, total_frames, chunk_length, subsets, mode)


def invert_plan(plan: SamplingPlan) -> dict[int, tuple[int, int]]:
    """Map every frame index to its (subset index, position within subset)."""
    lookup: dict[int, tuple[int, int]] = {}
    for n, subset in enumerate(plan.subsets):
        for pos, frame in enumerate(subset):
            lookup[frame] = (n, pos)
    return lookup


def plan_to_json(plan: SamplingPlan) -> dict:
    """Plain-JSON view of a plan for debugging and the ``plan`` CLI command."""
    return {
        "scheme": plan.scheme.value,
        "T": plan.total_frames,
        "T_c": plan.chunk_length,
        "subsets": [list(s) for s in plan.subsets],
    }
