"""Best-trajectory selection and full-video mask reassembly.

Per-subset selection picks an argmax query independently inside each
subset. Global selection pools every frame score of a query across the
whole video (frame-weighted, so a short final subset cannot skew the
mean) and picks one query for all subsets. Ties always go to the lowest
query index.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bridge import QueryTrajectory, SubsetPrediction
from .errors import (
    DimensionMismatchError,
    FrameCountMismatchError,
    InvalidArgumentError,
    MissingSubsetError,
    SubsetCountMismatchError,
)
from .model import VideoPrediction
from .sampling import SamplingPlan, SelectionMode, invert_plan


@dataclass(frozen=True)
class SelectionResult:
    """Chosen query index per subset (all equal in global mode)."""

    mode: SelectionMode
    chosen: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "chosen", tuple(int(c) for c in self.chosen))
        if not self.chosen:
            raise InvalidArgumentError("selection covers no subsets")
        if any(c < 0 for c in self.chosen):
            raise InvalidArgumentError(f"negative query index in {self.chosen}")
        if self.mode is SelectionMode.GLOBAL and len(set(self.chosen)) != 1:
            raise InvalidArgumentError("global selection must choose one query everywhere")


def aggregate_score(traj: QueryTrajectory) -> float:
    """Arithmetic mean of a trajectory's frame scores."""
    return sum(traj.frame_scores) / len(traj.frame_scores)


def select_per_subset(pred: SubsetPrediction) -> int:
    """Query index with the highest mean score in this subset (ties: lowest index)."""
    best_index = 0
    best_score = float("-inf")
    for q in sorted(pred.trajectories, key=lambda t: t.query_index):
        score = aggregate_score(q)
        if score > best_score:
            best_index = q.query_index
            best_score = score
    return best_index


def select_global(preds: list[SubsetPrediction], plan: SamplingPlan) -> int:
    """Query index with the highest frame-weighted mean score over the whole video."""
    _check_coverage(preds, plan)
    num_queries = preds[0].num_queries
    if any(p.num_queries != num_queries for p in preds):
        raise InvalidArgumentError("subset predictions disagree on query count")
    best_index = 0
    best_score = float("-inf")
    for q in range(num_queries):
        total = 0.0
        frames = 0
        for p in preds:
            scores = p.trajectory(q).frame_scores
            total += sum(scores)
            frames += len(scores)
        score = total / frames
        if score > best_score:
            best_index = q
            best_score = score
    return best_index


def select(preds: list[SubsetPrediction], plan: SamplingPlan) -> SelectionResult:
    """Apply the plan's selection mode over all subset predictions."""
    if plan.selection_mode is SelectionMode.GLOBAL:
        choice = select_global(preds, plan)
        return SelectionResult(SelectionMode.GLOBAL, (choice,) * plan.num_subsets)
    _check_coverage(preds, plan)
    by_subset = {p.subset_index: p for p in preds}
    chosen = tuple(select_per_subset(by_subset[n]) for n in range(plan.num_subsets))
    return SelectionResult(SelectionMode.PER_SUBSET, chosen)


def _check_coverage(preds: list[SubsetPrediction], plan: SamplingPlan) -> None:
    if len(preds) != plan.num_subsets:
        raise SubsetCountMismatchError(
            f"got {len(preds)} subset predictions, plan has {plan.num_subsets}"
        )
    seen = sorted(p.subset_index for p in preds)
    if seen != list(range(plan.num_subsets)):
        missing = sorted(set(range(plan.num_subsets)) - set(seen))
        if missing:
            raise MissingSubsetError(f"no prediction for subsets {missing}")
        raise InvalidArgumentError(f"duplicate subset indices in {seen}")


def assemble(
    plan: SamplingPlan,
    preds: list[SubsetPrediction],
    selection: SelectionResult,
    video_id: str = "",
    exp_id: str = "",
) -> VideoPrediction:
    """Reassemble per-subset masks of the chosen trajectories into video order.

    Output frame t takes the chosen trajectory's mask at the (subset,
    position) that ``invert_plan`` assigns to t, so arrival order of the
    subset predictions is irrelevant.
    """
    _check_coverage(preds, plan)
    if len(selection.chosen) != plan.num_subsets:
        raise InvalidArgumentError(
            f"selection covers {len(selection.chosen)} subsets, plan has {plan.num_subsets}"
        )
    by_subset = {p.subset_index: p for p in preds}
    for n, subset in enumerate(plan.subsets):
        pred = by_subset[n]
        if pred.num_frames != len(subset):
            raise FrameCountMismatchError(
                f"subset {n}: prediction has {pred.num_frames} frames, plan has {len(subset)}"
            )
        if selection.chosen[n] >= pred.num_queries:
            raise InvalidArgumentError(
                f"subset {n}: chosen query {selection.chosen[n]} out of range"
            )
    lookup = invert_plan(plan)
    masks = []
    shape = None
    for t in range(plan.total_frames):
        n, pos = lookup[t]
        mask = by_subset[n].trajectory(selection.chosen[n]).masks[pos]
        if shape is None:
            shape = mask.shape
        elif mask.shape != shape:
            raise DimensionMismatchError(
                f"frame {t}: mask is {mask.height}x{mask.width}, "
                f"expected {shape[0]}x{shape[1]}"
            )
        masks.append(mask)
    return VideoPrediction(video_id, exp_id, tuple(masks))
