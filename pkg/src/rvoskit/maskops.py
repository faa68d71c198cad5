"""Run-length mask codec and pixelwise set operations.

RLE runs are counted in column-major (Fortran) scan order and always
alternate zero-run first, so the leading count may be 0 when the scan
starts inside an object. This matches the convention of the public
annotation files the loader consumes. The compressed string form packs
each count LEB128-style into 6-bit chunks (5 value bits + continuation
bit, character code = chunk + 48); counts from index 3 onward are stored
as differences against the count two positions back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    BadCompressedCharError,
    BadRunSumError,
    DimensionMismatchError,
    EmptyListError,
    InvalidArgumentError,
    SchemaError,
)
from .model import BitMask, require_uniform_shape

_CHAR_LO = 48
_CHAR_HI = 111  # 48 + 63: 6-bit chunk range


@dataclass(frozen=True)
class RleMask:
    """Run-length encoded mask; counts are a run list or a compressed string."""

    height: int
    width: int
    counts: tuple[int, ...] | str

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise InvalidArgumentError(f"invalid RLE size {self.height}x{self.width}")
        if isinstance(self.counts, str):
            for ch in self.counts:
                if not _CHAR_LO <= ord(ch) <= _CHAR_HI:
                    raise BadCompressedCharError(
                        f"character {ch!r} (code {ord(ch)}) outside RLE alphabet"
                    )
            return
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if any(c < 0 for c in counts):
            raise BadRunSumError(f"negative run length in {counts}")
        total = sum(counts)
        if total != self.height * self.width:
            raise BadRunSumError(
                f"run lengths sum to {total}, expected "
                f"{self.height}x{self.width}={self.height * self.width}"
            )

    @property
    def is_compressed(self) -> bool:
        return isinstance(self.counts, str)


class PixelCounts(NamedTuple):
    intersection: int
    union: int
    a_only: int
    b_only: int


def compress_counts(counts: Sequence[int]) -> str:
    """Pack a run list into the compressed 6-bit-chunk string form."""
    out: list[str] = []
    counts = [int(c) for c in counts]
    for i, x in enumerate(counts):
        if i > 2:
            x -= counts[i - 2]
        more = True
        while more:
            chunk = x & 0x1F
            x >>= 5
            more = (x != -1) if (chunk & 0x10) else (x != 0)
            if more:
                chunk |= 0x20
            out.append(chr(chunk + _CHAR_LO))
    return "".join(out)


def expand_counts(s: str) -> list[int]:
    """Expand a compressed counts string back into a run list."""
    counts: list[int] = []
    p = 0
    while p < len(s):
        x = 0
        k = 0
        more = True
        while more:
            code = ord(s[p]) - _CHAR_LO
            if not 0 <= code <= 63:
                raise BadCompressedCharError(
                    f"character {s[p]!r} at position {p} outside RLE alphabet"
                )
            x |= (code & 0x1F) << (5 * k)
            more = bool(code & 0x20)
            p += 1
            k += 1
            if more and p >= len(s):
                raise BadCompressedCharError("truncated compressed counts string")
            if not more and (code & 0x10):
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[-2]
        if x < 0:
            raise BadRunSumError(f"negative run length {x} decoded at count {len(counts)}")
        counts.append(x)
    return counts


def canonical_counts(counts: Sequence[int]) -> tuple[int, ...]:
    """Merge zero-length interior runs; result alternates starting with a zero-run."""
    runs: list[tuple[int, int]] = []  # (value, length), zero lengths dropped
    for i, c in enumerate(counts):
        c = int(c)
        if c < 0:
            raise BadRunSumError(f"negative run length in {list(counts)}")
        if c == 0:
            continue
        value = i % 2
        if runs and runs[-1][0] == value:
            runs[-1] = (value, runs[-1][1] + c)
        else:
            runs.append((value, c))
    out: list[int] = []
    if runs and runs[0][0] == 1:
        out.append(0)
    out.extend(length for _, length in runs)
    return tuple(out)


def rle_encode(mask: BitMask, compressed: bool = False) -> RleMask:
    """Encode a mask into canonical column-major runs."""
    flat = mask.data.ravel(order="F")
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate(([0], changes))
    ends = np.concatenate((changes, [flat.size]))
    counts = (ends - starts).tolist()
    if flat[0]:
        counts.insert(0, 0)
    if compressed:
        return RleMask(mask.height, mask.width, compress_counts(counts))
    return RleMask(mask.height, mask.width, tuple(counts))


def rle_decode(rle: RleMask) -> BitMask:
    """Decode runs back into a dense mask (tolerant of non-canonical input)."""
    counts = expand_counts(rle.counts) if isinstance(rle.counts, str) else list(rle.counts)
    total = sum(counts)
    if total != rle.height * rle.width:
        raise BadRunSumError(
            f"run lengths sum to {total}, expected "
            f"{rle.height}x{rle.width}={rle.height * rle.width}"
        )
    values = np.arange(len(counts), dtype=np.uint8) % 2
    flat = np.repeat(values, counts).astype(bool)
    return BitMask(flat.reshape((rle.height, rle.width), order="F"))


def rle_canonicalize(rle: RleMask) -> RleMask:
    """Return the canonical uncompressed form of ``rle``."""
    counts = expand_counts(rle.counts) if isinstance(rle.counts, str) else rle.counts
    return RleMask(rle.height, rle.width, canonical_counts(counts))


def rle_to_json(rle: RleMask) -> dict:
    """Serialize to the ``{"size": [h, w], "counts": ...}`` wire shape."""
    counts = rle.counts if isinstance(rle.counts, str) else list(rle.counts)
    return {"size": [rle.height, rle.width], "counts": counts}


def rle_from_json(obj: object) -> RleMask:
    """Parse the ``{"size": [h, w], "counts": ...}`` wire shape (both forms)."""
    if not isinstance(obj, dict):
        raise SchemaError(f"RLE object must be a mapping, got {type(obj).__name__}")
    size = obj.get("size")
    counts = obj.get("counts")
    if (
        not isinstance(size, (list, tuple))
        or len(size) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in size)
    ):
        raise SchemaError(f"RLE 'size' must be [height, width], got {size!r}")
    if isinstance(counts, str):
        return RleMask(size[0], size[1], counts)
    if isinstance(counts, (list, tuple)) and all(
        isinstance(v, int) and not isinstance(v, bool) for v in counts
    ):
        return RleMask(size[0], size[1], tuple(counts))
    raise SchemaError("RLE 'counts' must be a list of ints or a string")


def union(masks: Sequence[BitMask]) -> BitMask:
    """Pixelwise OR of one or more same-sized masks."""
    if not masks:
        raise EmptyListError("union of zero masks is undefined")
    require_uniform_shape(masks)
    combined = np.logical_or.reduce([m.data for m in masks])
    return BitMask(combined)


def pixel_counts(a: BitMask, b: BitMask) -> PixelCounts:
    """Exact intersection/union/difference cardinalities of two masks."""
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"masks are {a.height}x{a.width} vs {b.height}x{b.width}"
        )
    inter = int((a.data & b.data).sum())
    uni = int((a.data | b.data).sum())
    a_only = int((a.data & ~b.data).sum())
    b_only = uni - inter - a_only
    return PixelCounts(inter, uni, a_only, b_only)
