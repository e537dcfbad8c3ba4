"""Subjective-logic confidence updates for assurance arguments driven by
windowed safety performance indicators."""

from .argument import (
    ArgumentGraph,
    ArgumentNode,
    Finding,
    SpiSpec,
    get_claim_opinion,
    load_argument,
    parse_argument,
    serialize_argument,
    set_claim_opinion,
    validate_argument,
)
from .engine import ConfidenceTrace, TracePoint, apply_update, run_replay
from .monitor import (
    Detection,
    FrameRecord,
    GtObject,
    WindowResult,
    evaluate_frame,
    evaluate_window,
    read_frame_log,
    windowed_stream,
)
from .opinion import (
    BetaParams,
    ConfidenceMetrics,
    EvidenceCounts,
    Opinion,
    beta_pdf_samples,
    cbf_fuse,
    confidence_metrics,
    inject_uncertainty,
    negate,
    opinion_from_evidence,
    opinion_to_beta,
    projected_probability,
    refuting_challenge,
    vacuous,
)
from .simgen import ScenarioSpec, SegmentSpec, generate_log, preset_scenarios

__version__ = "0.1.0"
