"""Uniform contract between the pipeline and any segmentation model.

Two segmenters ship with the toolkit: an in-process oracle that answers
from dataset ground truth (optionally corrupted by configurable noise),
and an adapter host that talks JSON lines over a child process's
stdin/stdout. Both return every query trajectory; picking the best one is
the pipeline's job, because global selection needs scores from all
subsets.

Wire protocol (one JSON object per line):

    handshake, both directions at startup:
        {"type": "hello", "protocol": 1}
    request:
        {"type": "segment", "video_id": ..., "exp_id": ..., "text": ...,
         "frames": [paths], "resize_short": 360, "num_queries": Q}
    response:
        {"type": "result", "queries": [
            {"query_index": i, "scores": [...], "masks": [RLE-or-null, ...]}]}

A null mask means an empty mask. The adapter resizes its inputs (shorter
side to ``resize_short``) but must return masks at the original video
resolution; binarization happens adapter-side, the wire carries binary
RLE only.
"""

from __future__ import annotations

import hashlib
import json
import queue
import subprocess
import threading
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    AdapterTimeoutError,
    InvalidArgumentError,
    ProcessSpawnError,
    ProtocolError,
    RleError,
    SchemaError,
    UnknownVideoOrExpressionError,
)
from .ingest import Dataset
from .maskops import rle_decode, rle_from_json, union
from .model import BitMask

PROTOCOL_VERSION = 1
DEFAULT_RESIZE_SHORT = 360
DEFAULT_NUM_QUERIES = 5  # query budget of the hosted model; adjust to match yours


@dataclass(frozen=True)
class SegmentRequest:
    """One subset of frames to segment under one expression."""

    video_id: str
    exp_id: str
    text: str
    frame_paths: tuple[str, ...]
    resize_short: int = DEFAULT_RESIZE_SHORT
    num_queries: int = DEFAULT_NUM_QUERIES

    def __post_init__(self) -> None:
        object.__setattr__(self, "frame_paths", tuple(self.frame_paths))
        if not self.frame_paths:
            raise InvalidArgumentError("request must contain at least one frame")
        if self.resize_short < 1:
            raise InvalidArgumentError(f"resize_short must be >= 1, got {self.resize_short}")
        if self.num_queries < 1:
            raise InvalidArgumentError(f"num_queries must be >= 1, got {self.num_queries}")

    def to_json(self) -> dict:
        return {
            "type": "segment",
            "video_id": self.video_id,
            "exp_id": self.exp_id,
            "text": self.text,
            "frames": list(self.frame_paths),
            "resize_short": self.resize_short,
            "num_queries": self.num_queries,
        }


@dataclass(frozen=True)
class QueryTrajectory:
    """Masks and per-frame scores of one object query across a subset."""

    query_index: int
    masks: tuple[BitMask, ...]
    frame_scores: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "masks", tuple(self.masks))
        try:
            scores = tuple(float(s) for s in self.frame_scores)
        except (TypeError, ValueError) as exc:
            raise InvalidArgumentError(
                f"query {self.query_index}: non-numeric score: {exc}"
            ) from exc
        object.__setattr__(self, "frame_scores", scores)
        if self.query_index < 0:
            raise InvalidArgumentError(f"query_index must be >= 0, got {self.query_index}")
        if len(self.masks) != len(self.frame_scores):
            raise InvalidArgumentError(
                f"query {self.query_index}: {len(self.masks)} masks but "
                f"{len(self.frame_scores)} scores"
            )
        if not self.masks:
            raise InvalidArgumentError(f"query {self.query_index} covers no frames")
        for s in self.frame_scores:
            if not 0.0 <= s <= 1.0 or s != s:
                raise InvalidArgumentError(
                    f"query {self.query_index}: score {s} outside [0, 1]"
                )


@dataclass(frozen=True)
class SubsetPrediction:
    """All query trajectories returned for one subset."""

    subset_index: int
    trajectories: tuple[QueryTrajectory, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        if not self.trajectories:
            raise InvalidArgumentError(f"subset {self.subset_index} has no trajectories")
        indices = sorted(t.query_index for t in self.trajectories)
        if indices != list(range(len(self.trajectories))):
            raise InvalidArgumentError(
                f"subset {self.subset_index}: query indices {indices} are not "
                f"0..{len(self.trajectories) - 1} exactly once"
            )
        lengths = {len(t.masks) for t in self.trajectories}
        if len(lengths) > 1:
            raise InvalidArgumentError(
                f"subset {self.subset_index}: trajectories disagree on frame count"
            )
        shapes = {m.shape for t in self.trajectories for m in t.masks}
        if len(shapes) > 1:
            raise InvalidArgumentError(
                f"subset {self.subset_index}: trajectories disagree on mask size"
            )

    @property
    def num_queries(self) -> int:
        return len(self.trajectories)

    @property
    def num_frames(self) -> int:
        return len(self.trajectories[0].masks)

    def trajectory(self, query_index: int) -> QueryTrajectory:
        for t in self.trajectories:
            if t.query_index == query_index:
                return t
        raise InvalidArgumentError(f"no trajectory with query index {query_index}")


@dataclass(frozen=True)
class NoiseConfig:
    """Corruption applied by the oracle to mimic an imperfect model."""

    score_sigma: float = 0.0
    morph_radius: int = 0
    flip_prob: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.score_sigma < 0 or self.morph_radius < 0 or self.flip_prob < 0:
            raise InvalidArgumentError("noise parameters must be >= 0")
        if self.flip_prob > 1:
            raise InvalidArgumentError(f"flip_prob must be <= 1, got {self.flip_prob}")

    @property
    def is_zero(self) -> bool:
        return self.score_sigma == 0 and self.morph_radius == 0 and self.flip_prob == 0


def _disk(radius: int) -> np.ndarray:
    span = np.arange(-radius, radius + 1)
    return span[:, None] ** 2 + span[None, :] ** 2 <= radius * radius


def _request_rng(noise: NoiseConfig, req: SegmentRequest) -> np.random.Generator:
    # Seed from the request identity so outputs do not depend on the order
    # in which subsets or grid cells are processed.
    digest = hashlib.blake2b(digest_size=8)
    digest.update(str(noise.seed).encode())
    for part in (req.video_id, req.exp_id, *req.frame_paths):
        digest.update(b"\x00" + part.encode())
    return np.random.default_rng(int.from_bytes(digest.digest(), "big"))


def _noisy_mask(mask: BitMask, noise: NoiseConfig, rng: np.random.Generator) -> BitMask:
    data = mask.data
    if noise.morph_radius > 0:
        radius = int(rng.integers(0, noise.morph_radius + 1))
        if radius > 0:
            op = ndimage.binary_dilation if rng.integers(0, 2) else ndimage.binary_erosion
            data = op(data, structure=_disk(radius))
    if noise.flip_prob > 0:
        flips = rng.random(data.shape) < noise.flip_prob
        data = data ^ flips
    return BitMask(data) if data is not mask.data else mask


def _noisy_scores(base: float, n: int, noise: NoiseConfig, rng: np.random.Generator) -> tuple:
    if noise.score_sigma == 0:
        return (base,) * n
    jitter = rng.normal(0.0, noise.score_sigma, size=n)
    return tuple(float(min(1.0, max(0.0, base + j))) for j in jitter)


def _frame_indices(req: SegmentRequest, dataset: Dataset) -> list[int]:
    meta = dataset.video(req.video_id)
    by_name = {name: i for i, name in enumerate(meta.frame_names)}
    indices = []
    for path in req.frame_paths:
        stem = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
        if stem not in by_name:
            raise UnknownVideoOrExpressionError(
                f"frame {stem!r} not in video {req.video_id!r}"
            )
        indices.append(by_name[stem])
    return indices


def oracle_segment(
    req: SegmentRequest,
    dataset: Dataset,
    noise: NoiseConfig = NoiseConfig(),
    subset_index: int = 0,
) -> SubsetPrediction:
    """Answer a request from ground truth; a drop-in test double for a model.

    Query 0 carries the union ground-truth masks with scores near 1;
    remaining queries carry other objects of the same video (or stay
    empty) with scores near 0. With zero noise the output equals ground
    truth bit-exactly.
    """
    expr = dataset.expression(req.video_id, req.exp_id)
    meta = dataset.video(req.video_id)
    shape = (meta.height, meta.width)
    indices = _frame_indices(req, dataset)
    rng = _request_rng(noise, req) if not noise.is_zero else None

    gt_masks = [
        union([dataset.object_mask(a, t, shape) for a in expr.object_ids])
        for t in indices
    ]
    distractors = []
    for other in dataset.expressions[req.video_id]:
        for anno_id in other.object_ids:
            if anno_id not in expr.object_ids and anno_id not in distractors:
                distractors.append(anno_id)

    trajectories = []
    for q in range(req.num_queries):
        if q == 0:
            masks = gt_masks
            base = 1.0
        elif q - 1 < len(distractors):
            anno_id = distractors[q - 1]
            masks = [dataset.object_mask(anno_id, t, shape) for t in indices]
            base = 0.0
        else:
            masks = [BitMask.zeros(*shape)] * len(indices)
            base = 0.0
        if rng is not None:
            masks = [_noisy_mask(m, noise, rng) for m in masks]
            scores = _noisy_scores(base, len(indices), noise, rng)
        else:
            scores = (base,) * len(indices)
        trajectories.append(QueryTrajectory(q, tuple(masks), scores))
    return SubsetPrediction(subset_index, tuple(trajectories))


class OracleSegmenter:
    """Stateful wrapper so the pipeline can treat the oracle like any segmenter."""

    def __init__(self, dataset: Dataset, noise: NoiseConfig = NoiseConfig()):
        self.dataset = dataset
        self.noise = noise

    def segment(
        self,
        req: SegmentRequest,
        subset_index: int = 0,
        expected_size: tuple[int, int] | None = None,
    ) -> SubsetPrediction:
        return oracle_segment(req, self.dataset, self.noise, subset_index)

    def close(self) -> None:
        pass

    def __enter__(self) -> "OracleSegmenter":
        return self

    def __exit__(self, *exc_info) -> None:
        pass


# --- external adapters -------------------------------------------------------


@dataclass(frozen=True)
class AdapterSpec:
    """How to launch one adapter process."""

    command: tuple[str, ...]
    timeout: float = 300.0  # seconds per response

    def __post_init__(self) -> None:
        object.__setattr__(self, "command", tuple(self.command))
        if not self.command:
            raise InvalidArgumentError("adapter command is empty")
        if self.timeout <= 0:
            raise InvalidArgumentError("adapter timeout must be positive")


def _parse_result(
    doc: object,
    req: SegmentRequest,
    subset_index: int,
    expected_size: tuple[int, int] | None,
) -> SubsetPrediction:
    if not isinstance(doc, dict) or doc.get("type") != "result":
        raise ProtocolError(f"expected a 'result' message, got {doc!r:.200}")
    queries = doc.get("queries")
    if not isinstance(queries, list):
        raise ProtocolError("'queries' must be a list")
    if len(queries) != req.num_queries:
        raise ProtocolError(
            f"adapter returned {len(queries)} queries, expected {req.num_queries}"
        )
    n_frames = len(req.frame_paths)
    for q in queries:
        if not isinstance(q, dict):
            raise ProtocolError("query entry must be an object")
        idx = q.get("query_index")
        scores = q.get("scores")
        masks_doc = q.get("masks")
        if not isinstance(idx, int):
            raise ProtocolError(f"bad query_index {idx!r}")
        if not isinstance(scores, list) or len(scores) != n_frames:
            raise ProtocolError(
                f"query {idx}: expected {n_frames} scores, got "
                f"{len(scores) if isinstance(scores, list) else scores!r}"
            )
        if not isinstance(masks_doc, list) or len(masks_doc) != n_frames:
            raise ProtocolError(
                f"query {idx}: expected {n_frames} masks, got "
                f"{len(masks_doc) if isinstance(masks_doc, list) else masks_doc!r}"
            )

    # Fix the output resolution: the caller's expectation wins, otherwise
    # the first declared mask size (all-null responses are undecidable).
    size = expected_size
    if size is None:
        for q in queries:
            for m in q["masks"]:
                if isinstance(m, dict):
                    declared = m.get("size")
                    if isinstance(declared, list) and len(declared) == 2:
                        size = (declared[0], declared[1])
                        break
            if size is not None:
                break
        if size is None:
            raise ProtocolError("all masks are null and no expected size is known")

    trajectories = []
    for q in queries:
        idx = q["query_index"]
        masks = []
        for t, m in enumerate(q["masks"]):
            if m is None:
                masks.append(BitMask.zeros(*size))
                continue
            try:
                rle = rle_from_json(m)
            except SchemaError as exc:
                raise ProtocolError(f"query {idx} frame {t}: {exc}") from exc
            if (rle.height, rle.width) != size:
                raise ProtocolError(
                    f"query {idx} frame {t} ({req.frame_paths[t]}): mask is "
                    f"{rle.height}x{rle.width}, expected {size[0]}x{size[1]}"
                )
            try:
                masks.append(rle_decode(rle))
            except RleError as exc:
                raise ProtocolError(f"query {idx} frame {t}: {exc}") from exc
        try:
            trajectories.append(QueryTrajectory(idx, tuple(masks), tuple(q["scores"])))
        except InvalidArgumentError as exc:
            raise ProtocolError(str(exc)) from exc
    try:
        return SubsetPrediction(subset_index, tuple(trajectories))
    except InvalidArgumentError as exc:
        raise ProtocolError(str(exc)) from exc


class ExternalSegmenter:
    """Owns one adapter process; strict request/response alternation."""

    def __init__(self, spec: AdapterSpec):
        self.spec = spec
        self._lock = threading.Lock()
        self._lines: queue.Queue = queue.Queue()
        try:
            self._proc = subprocess.Popen(
                list(spec.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProcessSpawnError(
                f"cannot start adapter {' '.join(spec.command)!r}: {exc}"
            ) from exc
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._handshake()

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _read_message(self) -> dict:
        try:
            line = self._lines.get(timeout=self.spec.timeout)
        except queue.Empty:
            raise AdapterTimeoutError(
                f"adapter {' '.join(self.spec.command)!r} sent nothing for "
                f"{self.spec.timeout:.0f}s"
            ) from None
        if line is None:
            raise ProtocolError("adapter closed its output stream")
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"adapter sent malformed JSON: {line!r:.200}") from exc
        if not isinstance(doc, dict):
            raise ProtocolError(f"adapter sent a non-object message: {line!r:.200}")
        return doc

    def _send(self, doc: dict) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(doc) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ProtocolError("adapter closed its input stream") from exc

    def _handshake(self) -> None:
        self._send({"type": "hello", "protocol": PROTOCOL_VERSION})
        hello = self._read_message()
        if hello.get("type") != "hello" or hello.get("protocol") != PROTOCOL_VERSION:
            raise ProtocolError(f"bad handshake message: {hello!r}")

    def segment(
        self,
        req: SegmentRequest,
        subset_index: int = 0,
        expected_size: tuple[int, int] | None = None,
    ) -> SubsetPrediction:
        with self._lock:  # one in-flight request per process
            self._send(req.to_json())
            doc = self._read_message()
        return _parse_result(doc, req, subset_index, expected_size)

    def close(self) -> None:
        if self._proc.stdin is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self) -> "ExternalSegmenter":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def external_segment(
    req: SegmentRequest,
    adapter: AdapterSpec | ExternalSegmenter,
    subset_index: int = 0,
    expected_size: tuple[int, int] | None = None,
) -> SubsetPrediction:
    """Segment one subset through an adapter process.

    Accepts either a spec (spawns a process for this one request) or a
    live ExternalSegmenter to reuse.
    """
    if isinstance(adapter, AdapterSpec):
        with ExternalSegmenter(adapter) as seg:
            return seg.segment(req, subset_index, expected_size)
    return adapter.segment(req, subset_index, expected_size)


class SegmenterPool:
    """Fixed pool of adapter processes; safe for concurrent subset requests."""

    def __init__(self, spec: AdapterSpec, workers: int = 1):
        if workers < 1:
            raise InvalidArgumentError(f"workers must be >= 1, got {workers}")
        self._idle: queue.Queue = queue.Queue()
        self._all: list[ExternalSegmenter] = []
        try:
            for _ in range(workers):
                seg = ExternalSegmenter(spec)
                self._all.append(seg)
                self._idle.put(seg)
        except Exception:
            self.close()
            raise

    def segment(
        self,
        req: SegmentRequest,
        subset_index: int = 0,
        expected_size: tuple[int, int] | None = None,
    ) -> SubsetPrediction:
        seg = self._idle.get()
        try:
            return seg.segment(req, subset_index, expected_size)
        finally:
            self._idle.put(seg)

    def close(self) -> None:
        for seg in self._all:
            seg.close()
        self._all.clear()

    def __enter__(self) -> "SegmenterPool":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


Segmenter = OracleSegmenter | ExternalSegmenter | SegmenterPool
