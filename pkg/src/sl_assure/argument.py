"""GSN-subset assurance arguments: parsing, serialisation and validation.

An argument file is a JSON document::

    {
      "format": "sl-assure/1",
      "nodes": [{"id": "G2", "kind": "goal", "text": "...",
                 "opinion": {"b": .., "d": .., "u": .., "a": ..},
                 "evidence": {"r": .., "s": .., "W": ..},
                 "undeveloped": false}, ...],
      "edges": [{"from": "G1", "to": "S1"}, ...],
      "spis":  [{"id": "SPI2", "claim_id": "G2", "window_size": 10,
                 "threshold": 0.5, "max_distance": 50.0,
                 "prior_weight": 2, "base_rate": 0.5}, ...]
    }

Edges point from a parent to the child that supports it (or provides
its context). An explicit ``opinion`` wins over ``evidence``; when only
``evidence`` is present the opinion is derived from the counts with base
rate 0.5.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import (
    CycleError,
    DanglingReference,
    InvalidEvidence,
    InvalidOpinion,
    KindMismatch,
    SchemaError,
    UnknownClaim,
)
from .opinion import DEFAULT_BASE_RATE, EvidenceCounts, Opinion, opinion_from_evidence

FORMAT = "sl-assure/1"
NODE_KINDS = ("goal", "strategy", "context", "assumption", "evidence")
OPINION_KINDS = frozenset({"goal", "evidence"})

DEFAULT_WINDOW_SIZE = 10
DEFAULT_THRESHOLD = 0.5
DEFAULT_MAX_DISTANCE = 50.0
DEFAULT_OBJECT_CLASS = "cone"


@dataclass(frozen=True)
class SpiSpec:
    """Windowed SPI monitor parameters attached to one claim."""

    id: str
    claim_id: str
    window_size: int = DEFAULT_WINDOW_SIZE
    threshold: float = DEFAULT_THRESHOLD
    max_distance: float = DEFAULT_MAX_DISTANCE
    prior_weight: float = 2.0
    base_rate: float = DEFAULT_BASE_RATE
    object_class: str = DEFAULT_OBJECT_CLASS

    def __post_init__(self):
        if isinstance(self.window_size, bool) or not isinstance(self.window_size, int) or self.window_size < 1:
            raise ValueError(f"window_size must be an integer >= 1, got {self.window_size!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold!r}")
        if not (self.max_distance > 0 and math.isfinite(self.max_distance)):
            raise ValueError(f"max_distance must be positive, got {self.max_distance!r}")
        if not (self.prior_weight > 0 and math.isfinite(self.prior_weight)):
            raise ValueError(f"prior_weight must be positive, got {self.prior_weight!r}")
        if not 0.0 <= self.base_rate <= 1.0:
            raise ValueError(f"base_rate must lie in [0, 1], got {self.base_rate!r}")


@dataclass(frozen=True)
class ArgumentNode:
    id: str
    kind: str
    text: str = ""
    opinion: Opinion | None = None
    evidence_counts: EvidenceCounts | None = None
    undeveloped: bool = False

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise KindMismatch(f"unknown node kind {self.kind!r}")
        if self.opinion is not None and self.kind not in OPINION_KINDS:
            raise KindMismatch(f"{self.kind} node {self.id} cannot carry an opinion")


@dataclass(frozen=True)
class Finding:
    severity: str  # "ERROR" or "WARN"
    node_id: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity} {self.node_id} {self.message}"


@dataclass(frozen=True)
class ArgumentGraph:
    """Immutable argument value. Treat the mappings as read-only; use
    :func:`set_claim_opinion` to derive updated graphs."""

    nodes: Mapping[str, ArgumentNode]
    edges: tuple[tuple[str, str], ...] = ()
    spis: Mapping[str, SpiSpec] = field(default_factory=dict)

    @property
    def spi_attachments(self) -> dict[str, str]:
        return {spec.claim_id: spec.id for spec in self.spis.values()}

    def children(self, node_id: str) -> list[str]:
        return [child for parent, child in self.edges if parent == node_id]

    def parents(self, node_id: str) -> list[str]:
        return [parent for parent, child in self.edges if child == node_id]

    @property
    def roots(self) -> list[str]:
        with_parent = {child for _, child in self.edges}
        return [nid for nid in self.nodes if nid not in with_parent]

    def spi_for(self, claim_id: str) -> SpiSpec | None:
        spi_id = self.spi_attachments.get(claim_id)
        return None if spi_id is None else self.spis[spi_id]


# -- parsing ---------------------------------------------------------------


def _require(obj: Mapping, key: str, path: str, types, type_name: str):
    if key not in obj:
        raise SchemaError(f"missing required key {key!r}", path)
    value = obj[key]
    if not isinstance(types, tuple):
        types = (types,)
    if isinstance(value, bool) and bool not in types:
        raise SchemaError(f"expected {type_name}, got bool", f"{path}.{key}")
    if not isinstance(value, types):
        raise SchemaError(f"expected {type_name}, got {type(value).__name__}", f"{path}.{key}")
    return value


def _optional(obj: Mapping, key: str, path: str, types, type_name: str, default=None):
    if key not in obj or obj[key] is None:
        return default
    return _require(obj, key, path, types, type_name)


_NUMBER = (int, float)


def _check_keys(obj: Mapping, allowed: Iterable[str], path: str) -> None:
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise SchemaError(f"unexpected keys {extra}", path)


def _parse_opinion(raw: Any, path: str) -> Opinion:
    if not isinstance(raw, dict):
        raise SchemaError("opinion must be an object", path)
    _check_keys(raw, ("b", "d", "u", "a"), path)
    values = [_require(raw, k, path, _NUMBER, "number") for k in ("b", "d", "u")]
    a = _optional(raw, "a", path, _NUMBER, "number", DEFAULT_BASE_RATE)
    try:
        return Opinion(*values, a)
    except InvalidOpinion as exc:
        raise InvalidOpinion(f"{path}: {exc}") from None


def _parse_evidence(raw: Any, path: str) -> EvidenceCounts:
    if not isinstance(raw, dict):
        raise SchemaError("evidence must be an object", path)
    _check_keys(raw, ("r", "s", "W"), path)
    r = _require(raw, "r", path, _NUMBER, "number")
    s = _require(raw, "s", path, _NUMBER, "number")
    W = _optional(raw, "W", path, _NUMBER, "number", 2)
    try:
        return EvidenceCounts(r, s, W)
    except InvalidEvidence as exc:
        raise SchemaError(str(exc), path) from None


def _parse_node(raw: Any, path: str) -> ArgumentNode:
    if not isinstance(raw, dict):
        raise SchemaError("node must be an object", path)
    _check_keys(raw, ("id", "kind", "text", "opinion", "evidence", "undeveloped"), path)
    node_id = _require(raw, "id", path, str, "string")
    kind = _require(raw, "kind", path, str, "string")
    if kind not in NODE_KINDS:
        raise SchemaError(f"kind must be one of {list(NODE_KINDS)}, got {kind!r}", f"{path}.kind")
    text = _optional(raw, "text", path, str, "string", "")
    undeveloped = _optional(raw, "undeveloped", path, bool, "boolean", False)
    opinion = None
    if raw.get("opinion") is not None:
        opinion = _parse_opinion(raw["opinion"], f"{path}.opinion")
    counts = None
    if raw.get("evidence") is not None:
        counts = _parse_evidence(raw["evidence"], f"{path}.evidence")
    if (opinion is not None or counts is not None) and kind not in OPINION_KINDS:
        raise SchemaError(f"{kind} nodes cannot carry an opinion or evidence", path)
    if opinion is None and counts is not None:
        opinion = opinion_from_evidence(counts)
    return ArgumentNode(node_id, kind, text, opinion, counts, undeveloped)


def _parse_spi(raw: Any, path: str) -> SpiSpec:
    if not isinstance(raw, dict):
        raise SchemaError("spi must be an object", path)
    _check_keys(
        raw,
        ("id", "claim_id", "window_size", "threshold", "max_distance",
         "prior_weight", "base_rate", "object_class"),
        path,
    )
    kwargs = {
        "id": _require(raw, "id", path, str, "string"),
        "claim_id": _require(raw, "claim_id", path, str, "string"),
        "window_size": _require(raw, "window_size", path, int, "integer"),
        "threshold": _require(raw, "threshold", path, _NUMBER, "number"),
        "max_distance": _require(raw, "max_distance", path, _NUMBER, "number"),
        "prior_weight": _require(raw, "prior_weight", path, _NUMBER, "number"),
        "base_rate": _require(raw, "base_rate", path, _NUMBER, "number"),
    }
    if "object_class" in raw:
        kwargs["object_class"] = _require(raw, "object_class", path, str, "string")
    try:
        return SpiSpec(**kwargs)
    except ValueError as exc:
        raise SchemaError(str(exc), path) from None


def _check_acyclic(nodes: Mapping[str, ArgumentNode], edges: tuple[tuple[str, str], ...]) -> None:
    children: dict[str, list[str]] = {nid: [] for nid in nodes}
    for parent, child in edges:
        children[parent].append(child)
    WHITE, GREY, BLACK = 0, 1, 2
    colour = dict.fromkeys(nodes, WHITE)
    for start in nodes:
        if colour[start] != WHITE:
            continue
        stack = [(start, iter(children[start]))]
        colour[start] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = BLACK
                stack.pop()
            elif colour[nxt] == GREY:
                trail = [n for n, _ in stack]
                cycle = trail[trail.index(nxt):] + [nxt]
                raise CycleError("support cycle: " + " -> ".join(cycle))
            elif colour[nxt] == WHITE:
                colour[nxt] = GREY
                stack.append((nxt, iter(children[nxt])))


def build_argument(
    nodes: Iterable[ArgumentNode],
    edges: Iterable[tuple[str, str]] = (),
    spis: Iterable[SpiSpec] = (),
) -> ArgumentGraph:
    """Assemble and structurally check a graph from already-typed parts."""
    node_map: dict[str, ArgumentNode] = {}
    for i, node in enumerate(nodes):
        if node.id in node_map:
            raise SchemaError(f"duplicate node id {node.id!r}", f"nodes[{i}].id")
        node_map[node.id] = node
    if not node_map:
        raise SchemaError("argument must contain at least one node", "nodes")

    edge_list: list[tuple[str, str]] = []
    for i, (parent, child) in enumerate(edges):
        for end in (parent, child):
            if end not in node_map:
                raise DanglingReference(f"edges[{i}] references unknown node {end!r}")
        if parent == child:
            raise CycleError(f"edges[{i}] is a self-loop on {parent!r}")
        if (parent, child) in edge_list:
            raise SchemaError(f"duplicate edge {parent}->{child}", f"edges[{i}]")
        edge_list.append((parent, child))
    edge_tuple = tuple(edge_list)
    _check_acyclic(node_map, edge_tuple)

    spi_map: dict[str, SpiSpec] = {}
    attached: dict[str, str] = {}
    for i, spec in enumerate(spis):
        if spec.id in spi_map:
            raise SchemaError(f"duplicate SPI id {spec.id!r}", f"spis[{i}].id")
        if spec.claim_id not in node_map:
            raise DanglingReference(f"spis[{i}] attached to unknown node {spec.claim_id!r}")
        if spec.claim_id in attached:
            raise SchemaError(
                f"claim {spec.claim_id!r} already has SPI {attached[spec.claim_id]!r}",
                f"spis[{i}].claim_id",
            )
        spi_map[spec.id] = spec
        attached[spec.claim_id] = spec.id

    graph = ArgumentGraph(node_map, edge_tuple, spi_map)
    roots = graph.roots
    if len(roots) != 1:
        raise SchemaError(f"argument must have exactly one root, found {roots}", "edges")
    return graph


def parse_argument(document: str | bytes | Mapping[str, Any]) -> ArgumentGraph:
    """Parse an argument document (JSON text or already-decoded mapping)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SchemaError("top level must be an object")
    _check_keys(document, ("format", "nodes", "edges", "spis"), "$")
    fmt = _require(document, "format", "$", str, "string")
    if fmt != FORMAT:
        raise SchemaError(f"unsupported format {fmt!r}, expected {FORMAT!r}", "$.format")
    raw_nodes = _require(document, "nodes", "$", list, "array")
    if not raw_nodes:
        raise SchemaError("argument must contain at least one node", "$.nodes")
    nodes = [_parse_node(raw, f"$.nodes[{i}]") for i, raw in enumerate(raw_nodes)]

    edges = []
    for i, raw in enumerate(_optional(document, "edges", "$", list, "array", [])):
        path = f"$.edges[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError("edge must be an object", path)
        _check_keys(raw, ("from", "to"), path)
        edges.append(
            (_require(raw, "from", path, str, "string"), _require(raw, "to", path, str, "string"))
        )
    spis = [
        _parse_spi(raw, f"$.spis[{i}]")
        for i, raw in enumerate(_optional(document, "spis", "$", list, "array", []))
    ]
    return build_argument(nodes, edges, spis)


def load_argument(path: str | Path) -> ArgumentGraph:
    return parse_argument(Path(path).read_text(encoding="utf-8"))


def _number(x: float):
    # integral counts come back as ints so that files stay readable
    if isinstance(x, float) and x.is_integer() and abs(x) < 2**53:
        return int(x)
    return x


def serialize_argument(graph: ArgumentGraph) -> dict[str, Any]:
    nodes = []
    for node in graph.nodes.values():
        entry: dict[str, Any] = {"id": node.id, "kind": node.kind, "text": node.text}
        if node.opinion is not None:
            entry["opinion"] = node.opinion.as_dict()
        if node.evidence_counts is not None:
            entry["evidence"] = {k: _number(v) for k, v in node.evidence_counts.as_dict().items()}
        if node.undeveloped:
            entry["undeveloped"] = True
        nodes.append(entry)
    spis = []
    for spec in graph.spis.values():
        entry = {
            "id": spec.id,
            "claim_id": spec.claim_id,
            "window_size": spec.window_size,
            "threshold": spec.threshold,
            "max_distance": spec.max_distance,
            "prior_weight": spec.prior_weight,
            "base_rate": spec.base_rate,
        }
        if spec.object_class != DEFAULT_OBJECT_CLASS:
            entry["object_class"] = spec.object_class
        spis.append(entry)
    return {
        "format": FORMAT,
        "nodes": nodes,
        "edges": [{"from": p, "to": c} for p, c in graph.edges],
        "spis": spis,
    }


def dumps_argument(graph: ArgumentGraph) -> str:
    return json.dumps(serialize_argument(graph), indent=2, ensure_ascii=False) + "\n"


# -- queries and updates ----------------------------------------------------


def _goal(graph: ArgumentGraph, claim_id: str) -> ArgumentNode:
    try:
        node = graph.nodes[claim_id]
    except KeyError:
        raise UnknownClaim(f"no node {claim_id!r} in argument") from None
    if node.kind != "goal":
        raise KindMismatch(f"{claim_id} is a {node.kind} node, not a goal")
    return node


def get_claim_opinion(graph: ArgumentGraph, claim_id: str) -> Opinion | None:
    return _goal(graph, claim_id).opinion


def set_claim_opinion(graph: ArgumentGraph, claim_id: str, op: Opinion) -> ArgumentGraph:
    node = _goal(graph, claim_id)
    nodes = dict(graph.nodes)
    nodes[claim_id] = replace(node, opinion=op)
    return replace(graph, nodes=nodes)


def validate_argument(graph: ArgumentGraph) -> list[Finding]:
    """Report content problems that do not prevent parsing.

    ========================================  ========
    rule                                      severity
    ========================================  ========
    goal without children, marked undeveloped WARN
    goal without children, not undeveloped    ERROR
    goal with SPI but no opinion              ERROR
    goal without opinion (no SPI)             WARN
    SPI attached to a non-goal node           ERROR
    ========================================  ========
    """
    findings: list[Finding] = []
    attachments = graph.spi_attachments
    for node in graph.nodes.values():
        if node.kind == "goal":
            if not graph.children(node.id):
                if node.undeveloped:
                    findings.append(Finding("WARN", node.id, "goal is undeveloped"))
                else:
                    findings.append(Finding("ERROR", node.id, "goal has no supporting nodes"))
            if node.opinion is None:
                if node.id in attachments:
                    findings.append(Finding("ERROR", node.id, "claim lacks initial opinion"))
                else:
                    findings.append(Finding("WARN", node.id, "goal has no opinion"))
        elif node.id in attachments:
            findings.append(
                Finding("ERROR", node.id, f"SPI {attachments[node.id]} attached to {node.kind} node")
            )
    return findings
