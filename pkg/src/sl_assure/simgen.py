"""Synthetic cone-detection frame logs.

A scenario is a list of segments. Every frame of a segment draws a number
of in-range cones uniformly from ``cones_in_range``, and each cone is
missed independently with the segment's miss probability (or the burst's,
inside a burst). Missed cones get no detection; detected cones get one
detection matched to them. ``out_of_range_fraction`` adds, per in-range
cone, a chance of an extra cone placed beyond ``max_distance`` so that the
monitor's distance filter has something to discard.

Randomness comes from :class:`random.Random` (Mersenne Twister) seeded
explicitly; only ``random()`` is used so logs are reproducible across
platforms and Python versions.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

from .argument import DEFAULT_MAX_DISTANCE
from .errors import SchemaError
from .monitor import Detection, FrameRecord, GtObject

SCENARIO_FORMAT = "sl-assure-scenario/1"


@dataclass(frozen=True)
class Burst:
    start_frame: int  # relative to the segment start
    length: int
    miss_probability: float


@dataclass(frozen=True)
class SegmentSpec:
    n_frames: int
    cones_in_range: tuple[int, int] = (3, 6)
    per_cone_miss_probability: float = 0.0
    burst: Burst | None = None

    def __post_init__(self):
        object.__setattr__(self, "cones_in_range", tuple(self.cones_in_range))
        lo, hi = self.cones_in_range
        if self.n_frames < 0:
            raise ValueError("n_frames must be >= 0")
        if not 0 <= lo <= hi:
            raise ValueError(f"cones_in_range must satisfy 0 <= min <= max, got {self.cones_in_range}")
        if not 0.0 <= self.per_cone_miss_probability <= 1.0:
            raise ValueError("per_cone_miss_probability must lie in [0, 1]")
        if self.burst is not None:
            b = self.burst
            if not 0.0 <= b.miss_probability <= 1.0:
                raise ValueError("burst miss_probability must lie in [0, 1]")
            if b.start_frame < 0 or b.length < 1 or b.start_frame + b.length > self.n_frames:
                raise ValueError("burst must lie inside its segment")

    def miss_probability_at(self, offset: int) -> float:
        b = self.burst
        if b is not None and b.start_frame <= offset < b.start_frame + b.length:
            return b.miss_probability
        return self.per_cone_miss_probability


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int
    segments: tuple[SegmentSpec, ...]
    frame_rate: float = 10.0
    max_distance: float = DEFAULT_MAX_DISTANCE
    out_of_range_fraction: float = 0.0
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("scenario needs at least one segment")
        if self.total_frames < 1:
            raise ValueError("scenario needs at least one frame")
        if not self.frame_rate > 0:
            raise ValueError("frame_rate must be positive")
        if not self.max_distance > 0:
            raise ValueError("max_distance must be positive")
        if not 0.0 <= self.out_of_range_fraction <= 1.0:
            raise ValueError("out_of_range_fraction must lie in [0, 1]")

    @property
    def total_frames(self) -> int:
        return sum(seg.n_frames for seg in self.segments)

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return replace(self, seed=seed)


def _randint(rng: random.Random, lo: int, hi: int) -> int:
    return lo + min(int(rng.random() * (hi - lo + 1)), hi - lo)


def generate_log(spec: ScenarioSpec, object_class: str = "cone") -> list[FrameRecord]:
    rng = random.Random(spec.seed)
    d = spec.max_distance
    frames = []
    frame_id = 0
    for segment in spec.segments:
        lo, hi = segment.cones_in_range
        for offset in range(segment.n_frames):
            p_miss = segment.miss_probability_at(offset)
            n_in = _randint(rng, lo, hi)
            n_out = sum(rng.random() < spec.out_of_range_fraction for _ in range(n_in))
            gts, dets = [], []
            for j in range(n_in + n_out):
                gt_id = f"f{frame_id}c{j}"
                if j < n_in:
                    distance = rng.random() * d
                else:
                    distance = d * (1.05 + 0.95 * rng.random())
                gts.append(GtObject(gt_id, object_class, round(distance, 3)))
                missed = rng.random() < p_miss
                score = round(0.5 + 0.5 * rng.random(), 4)
                if not missed:
                    dets.append(Detection(gt_id, object_class, score))
            frames.append(
                FrameRecord(frame_id, round(frame_id / spec.frame_rate, 6), tuple(gts), tuple(dets))
            )
            frame_id += 1
    return frames


# -- presets --------------------------------------------------------------

_PRESETS = {
    "violation-burst": ScenarioSpec(
        seed=42,
        segments=(
            SegmentSpec(
                n_frames=300,
                cones_in_range=(3, 6),
                per_cone_miss_probability=0.03,
                burst=Burst(start_frame=100, length=10, miss_probability=0.6),
            ),
        ),
        out_of_range_fraction=0.2,
        description=(
            "Mostly reliable detection with an occlusion burst covering window 10 "
            "(frames 100-109); qualitative stand-in for a scenario with an SPI violation."
        ),
    ),
    "clean-run": ScenarioSpec(
        seed=42,
        segments=(SegmentSpec(n_frames=400, cones_in_range=(3, 8), per_cone_miss_probability=0.0),),
        out_of_range_fraction=0.2,
        description="Violation-free segment; uncertainty shrinks and belief grows.",
    ),
    "short-night": ScenarioSpec(
        seed=42,
        segments=(SegmentSpec(n_frames=25, cones_in_range=(1, 4), per_cone_miss_probability=0.15),),
        out_of_range_fraction=0.1,
        description="Short night-time segment (two full windows and a partial one); "
        "too little evidence to remove much uncertainty.",
    ),
}


def preset_scenarios() -> dict[str, ScenarioSpec]:
    return dict(_PRESETS)


def get_preset(name: str) -> ScenarioSpec:
    try:
        return _PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}") from None


# -- scenario files -------------------------------------------------------


def scenario_to_dict(spec: ScenarioSpec) -> dict[str, Any]:
    segments = []
    for seg in spec.segments:
        entry: dict[str, Any] = {
            "n_frames": seg.n_frames,
            "cones_in_range": list(seg.cones_in_range),
            "per_cone_miss_probability": seg.per_cone_miss_probability,
        }
        if seg.burst is not None:
            entry["burst"] = {
                "start_frame": seg.burst.start_frame,
                "length": seg.burst.length,
                "miss_probability": seg.burst.miss_probability,
            }
        segments.append(entry)
    return {
        "format": SCENARIO_FORMAT,
        "seed": spec.seed,
        "frame_rate": spec.frame_rate,
        "max_distance": spec.max_distance,
        "out_of_range_fraction": spec.out_of_range_fraction,
        "description": spec.description,
        "segments": segments,
    }


def scenario_from_dict(doc: Mapping[str, Any]) -> ScenarioSpec:
    if not isinstance(doc, Mapping):
        raise SchemaError("scenario must be an object")
    if doc.get("format") != SCENARIO_FORMAT:
        raise SchemaError(f"expected format {SCENARIO_FORMAT!r}", "$.format")
    raw_segments = doc.get("segments")
    if not isinstance(raw_segments, list) or not raw_segments:
        raise SchemaError("segments must be a non-empty array", "$.segments")
    try:
        segments = []
        for i, raw in enumerate(raw_segments):
            if not isinstance(raw, Mapping):
                raise SchemaError("segment must be an object", f"$.segments[{i}]")
            burst = raw.get("burst")
            segments.append(
                SegmentSpec(
                    n_frames=int(raw["n_frames"]),
                    cones_in_range=tuple(int(c) for c in raw.get("cones_in_range", (3, 6))),
                    per_cone_miss_probability=float(raw.get("per_cone_miss_probability", 0.0)),
                    burst=None if burst is None else Burst(
                        int(burst["start_frame"]), int(burst["length"]), float(burst["miss_probability"])
                    ),
                )
            )
        return ScenarioSpec(
            seed=int(doc.get("seed", 0)),
            segments=tuple(segments),
            frame_rate=float(doc.get("frame_rate", 10.0)),
            max_distance=float(doc.get("max_distance", DEFAULT_MAX_DISTANCE)),
            out_of_range_fraction=float(doc.get("out_of_range_fraction", 0.0)),
            description=str(doc.get("description", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"invalid scenario: {exc}") from None


def load_scenario(path: str | Path) -> ScenarioSpec:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}") from None
    return scenario_from_dict(doc)
