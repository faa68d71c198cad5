"""Region similarity J, boundary accuracy F, and leaderboard tables.

Definitions follow the DAVIS benchmark convention: J is the Jaccard
index of the masks, F is the F-measure between the mask contours where a
boundary pixel counts as matched if the other mask has a boundary pixel
within ``ceil(bound_frac * image diagonal)`` (dilation by a Euclidean
disk). Frames where both masks are empty score 1.0 by default.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import (
    DimensionMismatchError,
    EmptyListError,
    FrameCountMismatchError,
    InvalidArgumentError,
)
from .model import BitMask, EvalRecord, VideoPrediction

DEFAULT_BOUND_FRAC = 0.008


@dataclass(frozen=True)
class Report:
    """Per-expression records plus their unweighted means."""

    records: tuple[EvalRecord, ...]
    mean_j: float
    mean_f: float
    mean_jf: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        if self.mean_jf != (self.mean_j + self.mean_f) / 2.0:
            raise InvalidArgumentError("mean_jf must equal (mean_j + mean_f) / 2")


def compute_j(pred: BitMask, gt: BitMask, strict_empty: bool = False) -> float:
    """Compute region similarity as the Jaccard index.

    Arguments:
        pred: binary prediction mask.
        gt: binary ground-truth mask.
        strict_empty: score 0.0 instead of 1.0 when both masks are empty.

    Returns:
        |pred & gt| / |pred | gt| in [0, 1].
    """
    if pred.shape != gt.shape:
        raise DimensionMismatchError(
            f"masks are {pred.height}x{pred.width} vs {gt.height}x{gt.width}"
        )
    inter = int((pred.data & gt.data).sum())
    uni = int((pred.data | gt.data).sum())
    if uni == 0:
        return 0.0 if strict_empty else 1.0
    return inter / uni


def boundary(mask: BitMask) -> np.ndarray:
    """1-pixel contour: set pixels whose 4-neighbourhood leaves the mask."""
    a = mask.data
    padded = np.pad(a, 1, constant_values=False)
    interior = (
        padded[2:, 1:-1] & padded[:-2, 1:-1] & padded[1:-1, 2:] & padded[1:-1, :-2]
    )
    return a & ~interior


def _disk(radius: int) -> np.ndarray:
    span = np.arange(-radius, radius + 1)
    return span[:, None] ** 2 + span[None, :] ** 2 <= radius * radius


def compute_f(
    pred: BitMask,
    gt: BitMask,
    bound_frac: float = DEFAULT_BOUND_FRAC,
    strict_empty: bool = False,
) -> float:
    """Compute boundary accuracy as the contour F-measure.

    Arguments:
        pred: binary prediction mask.
        gt: binary ground-truth mask.
        bound_frac: matching tolerance as a fraction of the image diagonal.
        strict_empty: score 0.0 instead of 1.0 when both masks are empty.

    Returns:
        2*P*R / (P+R) where P/R are the fractions of pred/gt boundary
        pixels lying within the tolerance of the other boundary; 0.0 when
        P+R is zero or exactly one mask is empty.
    """
    if pred.shape != gt.shape:
        raise DimensionMismatchError(
            f"masks are {pred.height}x{pred.width} vs {gt.height}x{gt.width}"
        )
    if not 0.0 < bound_frac < 1.0:
        raise InvalidArgumentError(f"bound_frac must be in (0, 1), got {bound_frac}")
    pred_empty = pred.is_empty()
    gt_empty = gt.is_empty()
    if pred_empty and gt_empty:
        return 0.0 if strict_empty else 1.0
    if pred_empty or gt_empty:
        return 0.0
    radius = math.ceil(bound_frac * math.hypot(pred.height, pred.width))
    pred_bound = boundary(pred)
    gt_bound = boundary(gt)
    disk = _disk(radius)
    pred_dilated = ndimage.binary_dilation(pred_bound, structure=disk)
    gt_dilated = ndimage.binary_dilation(gt_bound, structure=disk)
    precision = int((pred_bound & gt_dilated).sum()) / int(pred_bound.sum())
    recall = int((gt_bound & pred_dilated).sum()) / int(gt_bound.sum())
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def evaluate_expression(
    pred: VideoPrediction,
    gt: Sequence[BitMask],
    bound_frac: float = DEFAULT_BOUND_FRAC,
) -> EvalRecord:
    """Per-expression J and F, each averaged over frames."""
    if len(pred.masks) != len(gt):
        raise FrameCountMismatchError(
            f"{pred.video_id}/{pred.exp_id}: prediction has {len(pred.masks)} frames, "
            f"ground truth has {len(gt)}"
        )
    js = [compute_j(p, g) for p, g in zip(pred.masks, gt)]
    fs = [compute_f(p, g, bound_frac) for p, g in zip(pred.masks, gt)]
    return EvalRecord(pred.video_id, pred.exp_id, sum(js) / len(js), sum(fs) / len(fs))


def aggregate(records: Sequence[EvalRecord]) -> Report:
    """Unweighted means over records; the ranking metric is (J + F) / 2."""
    records = tuple(records)
    if not records:
        raise EmptyListError("cannot aggregate zero records")
    mean_j = sum(r.j for r in records) / len(records)
    mean_f = sum(r.f for r in records) / len(records)
    return Report(records, mean_j, mean_f, (mean_j + mean_f) / 2.0)


def _competition_ranks(values: Sequence[float]) -> list[int]:
    # 1 + number of strictly better scores; equal scores share a rank
    return [1 + sum(1 for u in values if u > v) for v in values]


def _table_cells(
    rows: Sequence[tuple[str, Report]], ranked: bool
) -> tuple[list[str], list[list[str]]]:
    ordered = list(rows)
    if ranked:
        ordered.sort(key=lambda row: -row[1].mean_jf)
    labels = [label for label, _ in ordered]
    columns = [
        [rep.mean_jf for _, rep in ordered],
        [rep.mean_j for _, rep in ordered],
        [rep.mean_f for _, rep in ordered],
    ]
    ranks = [_competition_ranks(values) for values in columns] if ranked else None
    cells = []
    for i, label in enumerate(labels):
        row = [label]
        for c, values in enumerate(columns):
            text = f"{values[i]:.4f}"
            if ranks is not None:
                text += f" ({ranks[c][i]})"
            row.append(text)
        cells.append(row)
    return ["method", "J&F", "J", "F"], cells


def format_table(rows: Sequence[tuple[str, Report]], ranked: bool = False) -> str:
    """Fixed-width leaderboard; when ranked, rows are sorted by J&F descending."""
    if not rows:
        raise EmptyListError("cannot format an empty table")
    header, cells = _table_cells(rows, ranked)
    widths = [
        max(len(header[c]), *(len(row[c]) for row in cells)) for c in range(len(header))
    ]
    lines = []
    for row in [header] + cells:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def format_table_csv(rows: Sequence[tuple[str, Report]], ranked: bool = False) -> str:
    """CSV twin of ``format_table`` with numeric columns unrounded."""
    if not rows:
        raise EmptyListError("cannot format an empty table")
    ordered = list(rows)
    if ranked:
        ordered.sort(key=lambda row: -row[1].mean_jf)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["method", "jf", "j", "f"]
    if ranked:
        header += ["rank_jf", "rank_j", "rank_f"]
    writer.writerow(header)
    if ranked:
        rank_jf = _competition_ranks([rep.mean_jf for _, rep in ordered])
        rank_j = _competition_ranks([rep.mean_j for _, rep in ordered])
        rank_f = _competition_ranks([rep.mean_f for _, rep in ordered])
    for i, (label, rep) in enumerate(ordered):
        row = [label, repr(rep.mean_jf), repr(rep.mean_j), repr(rep.mean_f)]
        if ranked:
            row += [rank_jf[i], rank_j[i], rank_f[i]]
        writer.writerow(row)
    return buf.getvalue()
