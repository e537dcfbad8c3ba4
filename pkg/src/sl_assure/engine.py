"""Claim confidence updates driven by SPI windows, and trace output.

One update step fuses the window's SPI opinion into the claim opinion and
then lets the negated SPI opinion challenge the fused result::

    claim' = refuting_challenge(negate(spi), cbf_fuse(claim, spi))

Because the challenger's belief is the window's disbelief mass, a window
without violations only accumulates evidence, while any violation moves
part of the fused belief straight into disbelief.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .argument import ArgumentGraph, SpiSpec, get_claim_opinion, set_claim_opinion
from .errors import AttachmentError, BaseRateMismatch, SchemaError
from .monitor import FrameRecord, WindowResult, windowed_stream
from .opinion import (
    BASE_RATE_TOLERANCE,
    BetaParams,
    ConfidenceMetrics,
    Opinion,
    cbf_fuse,
    confidence_metrics,
    negate,
    opinion_to_beta,
    refuting_challenge,
)

log = logging.getLogger(__name__)

TRACE_FORMAT = "sl-assure-trace/1"
UNCERTAINTY_FLOOR = 1e-12

CSV_HEADER = (
    "window_index", "frame_start", "frame_end", "partial", "r", "s",
    "spi_b", "spi_d", "spi_u", "claim_b", "claim_d", "claim_u",
    "projected_p", "first_order", "beta_alpha", "beta_beta", "beta_variance",
)


@dataclass(frozen=True)
class TracePoint:
    window: WindowResult
    claim_opinion_before: Opinion
    claim_opinion_after: Opinion
    metrics_after: ConfidenceMetrics
    beta_after: BetaParams | None  # None: dogmatic or degenerate opinion

    @property
    def window_index(self) -> int:
        return self.window.window_index

    @property
    def spi_opinion(self) -> Opinion:
        return self.window.spi_opinion


@dataclass(frozen=True)
class ConfidenceTrace:
    claim_id: str
    spi_id: str
    config: dict[str, Any]
    initial: Opinion
    points: tuple[TracePoint, ...] = ()
    findings: tuple[str, ...] = ()

    @property
    def final(self) -> Opinion:
        return self.points[-1].claim_opinion_after if self.points else self.initial


def apply_update(claim_op: Opinion, spi_op: Opinion) -> Opinion:
    return refuting_challenge(negate(spi_op), cbf_fuse(claim_op, spi_op))


def floor_uncertainty(op: Opinion, floor: float = UNCERTAINTY_FLOOR) -> Opinion:
    """Keep ``u`` at or above ``floor`` so the Beta mapping stays finite."""
    if op.u >= floor:
        return op
    scale = (1.0 - floor) / (op.b + op.d)
    return Opinion(op.b * scale, op.d * scale, floor, op.a)


def spec_config(spec: SpiSpec, exclude_empty_frames: bool = False) -> dict[str, Any]:
    return {
        "window_size": spec.window_size,
        "threshold": spec.threshold,
        "max_distance": spec.max_distance,
        "prior_weight": spec.prior_weight,
        "base_rate": spec.base_rate,
        "object_class": spec.object_class,
        "exclude_empty_frames": exclude_empty_frames,
    }


def beta_or_none(op: Opinion, W: float) -> BetaParams | None:
    if op.is_dogmatic:
        return None
    try:
        return opinion_to_beta(op, W)
    except ValueError:
        # base rate 0 or 1 without the matching evidence: point mass, no Beta
        return None


def replay_windows(
    initial: Opinion, windows: Iterable[WindowResult], prior_weight: float
) -> list[TracePoint]:
    points = []
    current = initial
    for window in windows:
        after = floor_uncertainty(apply_update(current, window.spi_opinion))
        points.append(
            TracePoint(
                window=window,
                claim_opinion_before=current,
                claim_opinion_after=after,
                metrics_after=confidence_metrics(after, prior_weight),
                beta_after=beta_or_none(after, prior_weight),
            )
        )
        current = after
    return points


def run_replay(
    graph: ArgumentGraph,
    claim_id: str,
    log_frames: Iterable[FrameRecord],
    spec: SpiSpec,
    *,
    initial: Opinion | None = None,
    exclude_empty_frames: bool = False,
) -> tuple[ConfidenceTrace, ArgumentGraph]:
    """Fold every SPI window of ``log_frames`` into the claim's opinion.

    ``initial`` overrides the claim's stored opinion (e.g. after injecting
    uncertainty). Returns the trace and a graph whose claim carries the
    final opinion.
    """
    if spec.claim_id != claim_id:
        raise AttachmentError(f"SPI {spec.id} targets {spec.claim_id}, not {claim_id}")
    start = initial if initial is not None else get_claim_opinion(graph, claim_id)
    if start is None:
        raise AttachmentError(f"claim {claim_id} lacks initial opinion")
    if abs(start.a - spec.base_rate) > BASE_RATE_TOLERANCE:
        raise BaseRateMismatch(
            f"claim {claim_id} base rate {start.a} differs from SPI base rate {spec.base_rate}"
        )
    findings = []
    if start.is_dogmatic:
        msg = f"claim {claim_id} starts dogmatic (u=0); runtime evidence cannot move it"
        log.warning(msg)
        findings.append(msg)

    windows = windowed_stream(log_frames, spec, exclude_empty_frames=exclude_empty_frames)
    points = replay_windows(start, windows, spec.prior_weight)
    trace = ConfidenceTrace(
        claim_id=claim_id,
        spi_id=spec.id,
        config=spec_config(spec, exclude_empty_frames),
        initial=start,
        points=tuple(points),
        findings=tuple(findings),
    )
    return trace, set_claim_opinion(graph, claim_id, trace.final)


# -- serialisation --------------------------------------------------------


def fmt_float(x: float) -> str:
    return format(x, ".9g")


def _round9(x: float) -> float:
    return float(fmt_float(x))


def trace_rows(trace: ConfidenceTrace) -> list[dict[str, Any]]:
    rows = []
    for p in trace.points:
        w, after, m = p.window, p.claim_opinion_after, p.metrics_after
        rows.append(
            {
                "window_index": w.window_index,
                "frame_start": w.frame_range[0],
                "frame_end": w.frame_range[1],
                "partial": int(w.partial),
                "r": w.r,
                "s": w.s,
                "spi_b": w.spi_opinion.b,
                "spi_d": w.spi_opinion.d,
                "spi_u": w.spi_opinion.u,
                "claim_b": after.b,
                "claim_d": after.d,
                "claim_u": after.u,
                "projected_p": m.projected_probability,
                "first_order": m.first_order,
                "beta_alpha": None if p.beta_after is None else p.beta_after.alpha,
                "beta_beta": None if p.beta_after is None else p.beta_after.beta,
                "beta_variance": m.beta_variance,
            }
        )
    return rows


def trace_to_csv(trace: ConfidenceTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in trace_rows(trace):
        writer.writerow(
            "" if v is None else fmt_float(v) if isinstance(v, float) else v
            for v in (row[k] for k in CSV_HEADER)
        )
    return buf.getvalue()


def _opinion_json(op: Opinion) -> dict[str, float]:
    return {k: _round9(v) for k, v in op.as_dict().items()}


def trace_to_dict(trace: ConfidenceTrace) -> dict[str, Any]:
    points = []
    for row in trace_rows(trace):
        points.append({k: _round9(v) if isinstance(v, float) else v for k, v in row.items()})
    return {
        "format": TRACE_FORMAT,
        "claim_id": trace.claim_id,
        "spi_id": trace.spi_id,
        "config": dict(trace.config),
        "initial": _opinion_json(trace.initial),
        "final": _opinion_json(trace.final),
        "findings": list(trace.findings),
        "points": points,
    }


def trace_to_json(trace: ConfidenceTrace) -> str:
    return json.dumps(trace_to_dict(trace), indent=2) + "\n"


def load_trace_document(path: str | Path) -> dict[str, Any]:
    """Read a JSON trace written by :func:`trace_to_json` and check its format tag."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not a JSON trace: {exc.msg}", str(path)) from None
    if not isinstance(doc, dict) or "format" not in doc:
        raise SchemaError("missing trace format tag", str(path))
    if doc["format"] != TRACE_FORMAT:
        raise SchemaError(
            f"incompatible trace format {doc['format']!r}, expected {TRACE_FORMAT!r}", str(path)
        )
    for key in ("claim_id", "spi_id", "config", "initial", "final", "points"):
        if key not in doc:
            raise SchemaError(f"missing key {key!r}", str(path))
    return doc
