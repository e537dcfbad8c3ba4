"""Windowed false-negative SPI monitor.

Each frame is checked for the ratio of missed ground-truth objects to
ground-truth objects within ``max_distance``; a ratio at or above the
threshold is a violation. Non-overlapping windows of ``window_size``
frames are tallied into ``(r, s)`` and turned into an SPI opinion.

Detections arrive already matched to ground truth via ``matched_gt_id``.
Logs that carry raw bounding boxes must be matched before being fed in;
:func:`read_frame_log` accepts a ``preprocess`` hook for that purpose.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Sequence, TextIO

from .argument import SpiSpec
from .errors import LogFormatError, OrderingError, WindowSizeMismatch
from .opinion import EvidenceCounts, Opinion, opinion_from_evidence


@dataclass(frozen=True)
class GtObject:
    gt_id: str
    object_class: str
    distance: float

    def __post_init__(self):
        if not self.distance >= 0:
            raise ValueError(f"distance must be >= 0, got {self.distance!r}")


@dataclass(frozen=True)
class Detection:
    matched_gt_id: str | None
    object_class: str
    score: float = 1.0


@dataclass(frozen=True)
class FrameRecord:
    frame_id: int
    timestamp: float
    ground_truth: tuple[GtObject, ...] = ()
    detections: tuple[Detection, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ground_truth", tuple(self.ground_truth))
        object.__setattr__(self, "detections", tuple(self.detections))
        known = {gt.gt_id for gt in self.ground_truth}
        for det in self.detections:
            if det.matched_gt_id is not None and det.matched_gt_id not in known:
                raise ValueError(
                    f"frame {self.frame_id}: detection matched to unknown gt {det.matched_gt_id!r}"
                )


@dataclass(frozen=True)
class FrameCounts:
    gt: int
    fn: int

    @property
    def ratio(self) -> float:
        return self.fn / self.gt if self.gt > 0 else 0.0


@dataclass(frozen=True)
class WindowResult:
    window_index: int
    frame_range: tuple[int, int]
    r: int
    s: int
    spi_opinion: Opinion
    partial: bool = False
    skipped: int = 0  # GT-empty frames left out when exclude_empty_frames is on

    @property
    def violated(self) -> bool:
        return self.s > 0


def count_frame(frame: FrameRecord, max_distance: float, object_class: str = "cone") -> FrameCounts:
    in_scope = {
        gt.gt_id
        for gt in frame.ground_truth
        if gt.object_class == object_class and gt.distance <= max_distance
    }
    matched = {det.matched_gt_id for det in frame.detections if det.matched_gt_id in in_scope}
    return FrameCounts(gt=len(in_scope), fn=len(in_scope - matched))


def evaluate_frame(
    frame: FrameRecord, max_distance: float, threshold: float, object_class: str = "cone"
) -> bool:
    """Return True when the frame violates the SPI (FN/GT >= threshold)."""
    return count_frame(frame, max_distance, object_class).ratio >= threshold


def _tally(
    frames: Sequence[FrameRecord], spec: SpiSpec, index: int, partial: bool, exclude_empty_frames: bool
) -> WindowResult:
    r = s = skipped = 0
    for frame in frames:
        counts = count_frame(frame, spec.max_distance, spec.object_class)
        if exclude_empty_frames and counts.gt == 0:
            skipped += 1
        elif counts.ratio >= spec.threshold:
            s += 1
        else:
            r += 1
    opinion = opinion_from_evidence(EvidenceCounts(r, s, spec.prior_weight), spec.base_rate)
    return WindowResult(
        window_index=index,
        frame_range=(frames[0].frame_id, frames[-1].frame_id),
        r=r,
        s=s,
        spi_opinion=opinion,
        partial=partial,
        skipped=skipped,
    )


def evaluate_window(
    frames: Sequence[FrameRecord],
    spec: SpiSpec,
    *,
    window_index: int = 0,
    exclude_empty_frames: bool = False,
) -> WindowResult:
    frames = list(frames)
    if len(frames) != spec.window_size:
        raise WindowSizeMismatch(f"expected {spec.window_size} frames, got {len(frames)}")
    return _tally(frames, spec, window_index, False, exclude_empty_frames)


def windowed_stream(
    log: Iterable[FrameRecord], spec: SpiSpec, *, exclude_empty_frames: bool = False
) -> Iterator[WindowResult]:
    """Split the log into consecutive windows of ``spec.window_size`` frames.

    A trailing short window is yielded with ``partial=True``.
    """
    buffer: list[FrameRecord] = []
    index = 0
    last_id = None
    for frame in log:
        if last_id is not None and frame.frame_id <= last_id:
            raise OrderingError(f"frame id {frame.frame_id} follows {last_id}")
        last_id = frame.frame_id
        buffer.append(frame)
        if len(buffer) == spec.window_size:
            yield _tally(buffer, spec, index, False, exclude_empty_frames)
            buffer = []
            index += 1
    if buffer:
        yield _tally(buffer, spec, index, True, exclude_empty_frames)


# -- JSON-lines frame log -------------------------------------------------


def frame_to_dict(frame: FrameRecord) -> dict[str, Any]:
    return {
        "frame_id": frame.frame_id,
        "timestamp": frame.timestamp,
        "ground_truth": [
            {"gt_id": gt.gt_id, "class": gt.object_class, "distance": gt.distance}
            for gt in frame.ground_truth
        ],
        "detections": [
            {"matched_gt_id": det.matched_gt_id, "class": det.object_class, "score": det.score}
            for det in frame.detections
        ],
    }


def _field(obj: dict, key: str, types, where: str, nullable: bool = False):
    if key not in obj:
        raise LogFormatError(f"missing key {key!r}", where)
    value = obj[key]
    if value is None and nullable:
        return None
    if isinstance(value, bool) or not isinstance(value, types):
        raise LogFormatError(f"bad type for {key!r}: {type(value).__name__}", f"{where}.{key}")
    return value


def frame_from_dict(raw: Any, where: str = "$") -> FrameRecord:
    if not isinstance(raw, dict):
        raise LogFormatError("frame must be an object", where)
    frame_id = _field(raw, "frame_id", int, where)
    timestamp = float(_field(raw, "timestamp", (int, float), where))
    gts = []
    for i, g in enumerate(_field(raw, "ground_truth", list, where)):
        at = f"{where}.ground_truth[{i}]"
        if not isinstance(g, dict):
            raise LogFormatError("ground-truth entry must be an object", at)
        distance = float(_field(g, "distance", (int, float), at))
        if not (distance >= 0 and math.isfinite(distance)):
            raise LogFormatError(f"distance must be finite and >= 0, got {distance}", at)
        gts.append(GtObject(_field(g, "gt_id", str, at), _field(g, "class", str, at), distance))
    dets = []
    for i, d in enumerate(_field(raw, "detections", list, where)):
        at = f"{where}.detections[{i}]"
        if not isinstance(d, dict):
            raise LogFormatError("detection entry must be an object", at)
        dets.append(
            Detection(
                _field(d, "matched_gt_id", str, at, nullable=True),
                _field(d, "class", str, at),
                float(_field(d, "score", (int, float), at)),
            )
        )
    try:
        return FrameRecord(frame_id, timestamp, tuple(gts), tuple(dets))
    except ValueError as exc:
        raise LogFormatError(str(exc), where) from None


def dumps_frame(frame: FrameRecord) -> str:
    return json.dumps(frame_to_dict(frame), separators=(",", ":"))


def write_frame_log(frames: Iterable[FrameRecord], out: str | Path | TextIO) -> int:
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            return write_frame_log(frames, fh)
    n = 0
    for frame in frames:
        out.write(dumps_frame(frame) + "\n")
        n += 1
    return n


def iter_frame_log(
    source: str | Path | TextIO,
    preprocess: Callable[[dict], dict] | None = None,
) -> Iterator[FrameRecord]:
    """Lazily parse a JSON-lines frame log. Blank lines are ignored.

    ``preprocess`` receives each decoded line before validation, e.g. to
    resolve raw boxes into ``matched_gt_id`` values.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from iter_frame_log(fh, preprocess)
        return
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        where = f"line {lineno}"
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"invalid JSON: {exc.msg}", where) from None
        if preprocess is not None:
            raw = preprocess(raw)
        yield frame_from_dict(raw, where)


def read_frame_log(source, preprocess=None) -> list[FrameRecord]:
    return list(iter_frame_log(source, preprocess))
