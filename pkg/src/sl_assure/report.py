"""Audit summaries over one or more JSON confidence traces."""

from __future__ import annotations

import json
from typing import Any, Iterable

CONFIG_ORDER = ("window_size", "threshold", "max_distance", "prior_weight", "base_rate")


def _config_key(config: dict[str, Any]) -> tuple:
    return tuple(config.get(k) for k in CONFIG_ORDER)


def summarize_trace(doc: dict[str, Any], source: str = "") -> dict[str, Any]:
    points = doc["points"]
    summary: dict[str, Any] = {
        "source": source,
        "spi_id": doc["spi_id"],
        "config": {k: doc["config"].get(k) for k in CONFIG_ORDER},
        "windows": len(points),
        "violation_windows": sum(1 for p in points if p["s"] > 0),
        "initial": doc["initial"],
        "final": doc["final"],
        "min_belief": None,
        "min_belief_window": None,
        "final_metrics": None,
    }
    if points:
        lowest = min(points, key=lambda p: (p["claim_b"], p["window_index"]))
        last = points[-1]
        summary["min_belief"] = lowest["claim_b"]
        summary["min_belief_window"] = lowest["window_index"]
        summary["final_metrics"] = {
            "projected_p": last["projected_p"],
            "first_order": last["first_order"],
            "beta_variance": last["beta_variance"],
        }
    return summary


def build_report(docs: Iterable[tuple[str, dict[str, Any]]]) -> dict[str, Any]:
    """Group traces by claim. Within a claim traces are ordered by their
    config snapshot, and a note is raised when thresholds differ."""
    by_claim: dict[str, list[dict[str, Any]]] = {}
    for source, doc in docs:
        by_claim.setdefault(doc["claim_id"], []).append(summarize_trace(doc, source))
    claims = []
    for claim_id in sorted(by_claim):
        runs = sorted(by_claim[claim_id], key=lambda s: (_config_key(s["config"]), s["source"]))
        notes = []
        thetas = sorted({r["config"]["threshold"] for r in runs})
        if len(thetas) > 1:
            notes.append("differing threshold across traces: " + ", ".join(str(t) for t in thetas))
        claims.append({"claim_id": claim_id, "traces": runs, "notes": notes})
    return {"format": "sl-assure-report/1", "claims": claims}


def _op(o: dict[str, float]) -> str:
    return f"(b={o['b']:.4f}, d={o['d']:.4f}, u={o['u']:.4f})"


def render_text(report: dict[str, Any]) -> str:
    lines = []
    for claim in report["claims"]:
        lines.append(f"claim {claim['claim_id']}")
        for note in claim["notes"]:
            lines.append(f"  NOTE {note}")
        for run in claim["traces"]:
            cfg = run["config"]
            lines.append(
                f"  trace {run['source']} spi={run['spi_id']} k={cfg['window_size']} "
                f"theta={cfg['threshold']} d={cfg['max_distance']} "
                f"W={cfg['prior_weight']} a={cfg['base_rate']}"
            )
            lines.append(f"    initial {_op(run['initial'])}")
            lines.append(f"    final   {_op(run['final'])}")
            lines.append(f"    windows {run['windows']}, violation windows {run['violation_windows']}")
            if run["min_belief"] is not None:
                m = run["final_metrics"]
                lines.append(f"    min belief {run['min_belief']:.4f} at window {run['min_belief_window']}")
                lines.append(
                    f"    final projected_p={m['projected_p']:.4f} "
                    f"first_order={m['first_order']:.4f} beta_variance={m['beta_variance']:.6g}"
                )
    return "\n".join(lines) + "\n"


def render_json(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2) + "\n"
