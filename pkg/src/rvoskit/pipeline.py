"""End-to-end runs for one (video, expression) pair and whole splits."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .bridge import SegmentRequest, Segmenter
from .ingest import Dataset, build_union_targets
from .merge import assemble, select
from .metrics import DEFAULT_BOUND_FRAC, Report, aggregate, evaluate_expression
from .model import EvalRecord, Expression, VideoMeta, VideoPrediction, validate_prediction
from .sampling import SamplingScheme, make_plan


def run_pair(
    dataset: Dataset,
    meta: VideoMeta,
    expr: Expression,
    scheme: SamplingScheme,
    chunk_length: int,
    segmenter: Segmenter,
    num_queries: int,
    resize_short: int,
) -> VideoPrediction:
    """Plan, segment every subset, select trajectories, and reassemble."""
    plan = make_plan(meta.num_frames, chunk_length, scheme)
    paths = dataset.frame_paths(meta.video_id)
    expected = (meta.height, meta.width)
    preds = []
    for n, subset in enumerate(plan.subsets):
        req = SegmentRequest(
            video_id=meta.video_id,
            exp_id=expr.exp_id,
            text=expr.text,
            frame_paths=tuple(paths[i] for i in subset),
            resize_short=resize_short,
            num_queries=num_queries,
        )
        preds.append(segmenter.segment(req, subset_index=n, expected_size=expected))
    selection = select(preds, plan)
    prediction = assemble(plan, preds, selection, meta.video_id, expr.exp_id)
    validate_prediction(prediction, meta)
    return prediction


def evaluate_pair(
    dataset: Dataset,
    expr: Expression,
    prediction: VideoPrediction,
    bound_frac: float = DEFAULT_BOUND_FRAC,
) -> EvalRecord:
    """Score a prediction against the expression's union ground truth."""
    gt = build_union_targets(expr, dataset)
    return evaluate_expression(prediction, gt, bound_frac)


def run_split(
    dataset: Dataset,
    scheme: SamplingScheme,
    chunk_length: int,
    segmenter: Segmenter,
    num_queries: int,
    resize_short: int,
    workers: int = 1,
) -> Report:
    """Run and evaluate every (video, expression) pair; records stay sorted."""
    pairs = dataset.pairs()

    def one(pair: tuple[VideoMeta, Expression]) -> EvalRecord:
        meta, expr = pair
        prediction = run_pair(
            dataset, meta, expr, scheme, chunk_length, segmenter, num_queries, resize_short
        )
        return evaluate_pair(dataset, expr, prediction)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, pairs))
    else:
        records = [one(pair) for pair in pairs]
    return aggregate(records)
