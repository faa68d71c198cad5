"""Scheme x sub-video-length ablation grids over any segmenter.

Each grid cell is one full pipeline run (plan, segment, select,
assemble, evaluate). Cells are independent: the oracle derives its noise
stream from the request identity, so running cells in any order, or
concurrently, yields identical reports. Data ablations (comparing runs
trained differently) are covered by evaluating each run separately and
rendering the labeled reports with ``metrics.format_table``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .bridge import (
    DEFAULT_NUM_QUERIES,
    DEFAULT_RESIZE_SHORT,
    AdapterSpec,
    NoiseConfig,
    OracleSegmenter,
    SegmenterPool,
)
from .errors import InvalidArgumentError, ToolkitError
from .ingest import Dataset
from .metrics import Report
from .pipeline import run_split
from .sampling import SamplingScheme

SCHEME_LABELS = {
    SamplingScheme.NON_CONTINUOUS: "N-continuous",
    SamplingScheme.CONTINUOUS: "Continuous",
    SamplingScheme.NO_SAMPLING: "No sampling",
}

DEFAULT_LENGTHS = (1, 5, 10, 20, 30, 40)


class AblationCellError(ToolkitError):
    """A pipeline failure annotated with its grid coordinates."""


@dataclass(frozen=True)
class GridSpec:
    """The grid to run: schemes x chunk lengths over one dataset and segmenter."""

    schemes: tuple[SamplingScheme, ...]
    lengths: tuple[int, ...]
    dataset: Dataset
    segmenter: str | AdapterSpec = "oracle"
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    num_queries: int = DEFAULT_NUM_QUERIES
    resize_short: int = DEFAULT_RESIZE_SHORT

    def __post_init__(self) -> None:
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "lengths", tuple(int(v) for v in self.lengths))
        if not self.schemes or not self.lengths:
            raise InvalidArgumentError("grid needs at least one scheme and one length")
        if any(v < 1 for v in self.lengths):
            raise InvalidArgumentError(f"chunk lengths must be >= 1, got {self.lengths}")
        if isinstance(self.segmenter, str) and self.segmenter != "oracle":
            raise InvalidArgumentError(
                f"segmenter must be 'oracle' or an AdapterSpec, got {self.segmenter!r}"
            )


def run_grid(spec: GridSpec, workers: int = 1) -> list[list[Report]]:
    """One report per (scheme, length) cell; rows follow ``spec.schemes``."""

    def open_segmenter():
        if isinstance(spec.segmenter, AdapterSpec):
            return SegmenterPool(spec.segmenter, workers=max(1, workers))
        return OracleSegmenter(spec.dataset, spec.noise)

    cells = [
        (r, c, scheme, length)
        for r, scheme in enumerate(spec.schemes)
        for c, length in enumerate(spec.lengths)
    ]
    matrix: list[list[Report | None]] = [
        [None] * len(spec.lengths) for _ in spec.schemes
    ]
    with open_segmenter() as segmenter:

        def one(cell) -> tuple[int, int, Report]:
            r, c, scheme, length = cell
            try:
                report = run_split(
                    spec.dataset,
                    scheme,
                    length,
                    segmenter,
                    spec.num_queries,
                    spec.resize_short,
                )
            except ToolkitError as exc:
                raise AblationCellError(
                    f"cell (scheme={scheme.value}, length={length}): {exc}"
                ) from exc
            return r, c, report

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(one, cells))
        else:
            results = [one(cell) for cell in cells]
    for r, c, report in results:
        matrix[r][c] = report
    return matrix  # type: ignore[return-value]


def render_grid(spec: GridSpec, matrix: list[list[Report]]) -> str:
    """Fixed-width grid of mean J&F, rows = schemes, columns = lengths."""
    header = ["method"] + [str(v) for v in spec.lengths]
    rows = [header]
    for scheme, row in zip(spec.schemes, matrix):
        rows.append([SCHEME_LABELS[scheme]] + [f"{rep.mean_jf:.4f}" for rep in row])
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    lines = [
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows
    ]
    return "\n".join(lines) + "\n"


def render_grid_csv(spec: GridSpec, matrix: list[list[Report]]) -> str:
    """CSV twin of ``render_grid`` with unrounded cell values."""
    lines = [",".join(["method"] + [str(v) for v in spec.lengths])]
    for scheme, row in zip(spec.schemes, matrix):
        lines.append(
            ",".join([SCHEME_LABELS[scheme]] + [repr(rep.mean_jf) for rep in row])
        )
    return "\n".join(lines) + "\n"
