"""Segmenter-agnostic referring video object segmentation toolkit.

Builds frame-sampling plans for long videos, drives any segmentation
model through a uniform bridge (in-process oracle or external process
speaking JSON lines), selects the best query trajectory, reassembles
full-video masks, and evaluates them with the J&F protocol.
"""

__version__ = "0.1.0"

from .ablation import GridSpec, render_grid, render_grid_csv, run_grid
from .bridge import (
    AdapterSpec,
    ExternalSegmenter,
    NoiseConfig,
    OracleSegmenter,
    QueryTrajectory,
    SegmenterPool,
    SegmentRequest,
    SubsetPrediction,
    external_segment,
    oracle_segment,
)
from .errors import ToolkitError
from .ingest import (
    Dataset,
    ObjectScript,
    SynthConfig,
    build_union_targets,
    export_training_targets,
    load_dataset,
    synth_generate,
)
from .maskops import (
    PixelCounts,
    RleMask,
    pixel_counts,
    rle_decode,
    rle_encode,
    rle_from_json,
    rle_to_json,
    union,
)
from .merge import (
    SelectionResult,
    aggregate_score,
    assemble,
    select,
    select_global,
    select_per_subset,
)
from .metrics import (
    Report,
    aggregate,
    compute_f,
    compute_j,
    evaluate_expression,
    format_table,
    format_table_csv,
)
from .model import (
    BitMask,
    EvalRecord,
    Expression,
    VideoMeta,
    VideoPrediction,
    validate_prediction,
)
from .pipeline import evaluate_pair, run_pair, run_split
from .sampling import (
    SamplingPlan,
    SamplingScheme,
    SelectionMode,
    invert_plan,
    make_plan,
    plan_to_json,
)

__all__ = [name for name in dir() if not name.startswith("_")]
