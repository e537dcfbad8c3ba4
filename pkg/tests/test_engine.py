import csv
import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EXAMPLE_PATH, make_frame
from sl_assure.argument import SpiSpec, get_claim_opinion, load_argument, set_claim_opinion
from sl_assure.engine import (
    CSV_HEADER,
    TRACE_FORMAT,
    apply_update,
    floor_uncertainty,
    load_trace_document,
    run_replay,
    trace_to_csv,
    trace_to_dict,
    trace_to_json,
)
from sl_assure.errors import AttachmentError, BaseRateMismatch, SchemaError
from sl_assure.opinion import (
    EvidenceCounts,
    Opinion,
    cbf_fuse,
    inject_uncertainty,
    opinion_from_evidence,
    vacuous,
)

SPEC = SpiSpec("SPI2", "G2", window_size=10, threshold=0.5, max_distance=50.0)


def ev(r, s):
    return opinion_from_evidence(EvidenceCounts(r, s, 2), 0.5)


def frames_from_labels(labels):
    """One frame per label: True = violating frame (2 of 2 cones missed)."""
    return [make_frame(i, 2, 2 if bad else 0) for i, bad in enumerate(labels)]


@st.composite
def claim_opinions(draw):
    b = draw(st.floats(0, 1))
    d = draw(st.floats(0, 1 - b))
    return Opinion(b, d, max(0.0, 1 - b - d), 0.5)


class TestApplyUpdate:
    def test_clean_window(self):
        out = apply_update(ev(5, 1), ev(10, 0))
        # exact: evidence (15, 1) -> (15/18, 1/18, 2/18); challenger belief 0
        assert tuple(out)[:3] == pytest.approx((15 / 18, 1 / 18, 2 / 18), abs=1e-12)

    def test_three_violations(self):
        out = apply_update(ev(5, 1), ev(7, 3))
        # exact: fused (12/18, 4/18, 2/18); challenger belief 3/12
        assert tuple(out)[:3] == pytest.approx((0.5, 7 / 18, 2 / 18), abs=1e-12)

    def test_vacuous_spi(self):
        claim = Opinion(0.6, 0.1, 0.3)
        assert apply_update(claim, vacuous()) == claim

    def test_base_rate_mismatch(self):
        with pytest.raises(BaseRateMismatch):
            apply_update(vacuous(0.5), vacuous(0.3))

    @given(claim_opinions(), st.integers(0, 50))
    def test_confirmation(self, claim, r):
        out = apply_update(claim, ev(r, 0))
        assert out.d <= claim.d + 1e-15
        assert out.u <= claim.u + 1e-15

    @given(claim_opinions(), st.integers(0, 50), st.integers(1, 50))
    def test_violation_penalty(self, claim, r, s):
        spi = ev(r, s)
        fused = cbf_fuse(claim, spi)
        out = apply_update(claim, spi)
        assert out.b == pytest.approx(fused.b * (1 - spi.d), abs=1e-15)
        if fused.b > 0:
            assert out.b < fused.b
        assert out.u == fused.u

    @settings(max_examples=200)
    @given(st.lists(st.booleans(), min_size=1, max_size=40), st.data())
    def test_violations_never_help(self, labels, data):
        i = data.draw(st.integers(0, len(labels) - 1))
        worse = list(labels)
        worse[i] = True
        start = Opinion(0.7, 0.1, 0.2)
        graph = _graph_with(start)
        base, _ = run_replay(graph, "G2", frames_from_labels(labels), SPEC)
        bad, _ = run_replay(graph, "G2", frames_from_labels(worse), SPEC)
        assert bad.final.b <= base.final.b + 1e-12


def _graph_with(op):
    return set_claim_opinion(load_argument(EXAMPLE_PATH), "G2", op)


class TestReplay:
    def test_violation_free(self, example_graph):
        start = inject_uncertainty(get_claim_opinion(example_graph, "G2"), 0.1)
        trace, updated = run_replay(example_graph, "G2", frames_from_labels([False] * 30), SPEC, initial=start)
        assert len(trace.points) == 3
        us = [start.u] + [p.claim_opinion_after.u for p in trace.points]
        ds = [start.d] + [p.claim_opinion_after.d for p in trace.points]
        assert us == sorted(us, reverse=True)
        assert ds == sorted(ds, reverse=True)
        assert trace.points[0].claim_opinion_before == start
        assert get_claim_opinion(updated, "G2") == trace.final
        assert get_claim_opinion(example_graph, "G2") != trace.final

    def test_dip_and_recovery(self, example_graph):
        labels = [False] * 30 + [True] * 5 + [False] * 5 + [False] * 40
        start = inject_uncertainty(get_claim_opinion(example_graph, "G2"), 0.1)
        trace, _ = run_replay(example_graph, "G2", frames_from_labels(labels), SPEC, initial=start)
        beliefs = [p.claim_opinion_after.b for p in trace.points]
        assert beliefs[3] < beliefs[2]
        assert beliefs[4:] == sorted(beliefs[4:])
        assert beliefs[-1] > beliefs[3]
        assert trace.points[3].claim_opinion_after.d > trace.points[2].claim_opinion_after.d

    def test_empty_log(self, example_graph):
        trace, updated = run_replay(example_graph, "G2", [], SPEC)
        assert trace.points == ()
        assert trace.final == trace.initial == get_claim_opinion(example_graph, "G2")
        assert updated == example_graph

    def test_wrong_spi(self, example_graph):
        with pytest.raises(AttachmentError):
            run_replay(example_graph, "G3", [], SPEC)

    def test_base_rate_mismatch(self, example_graph):
        spec = SpiSpec("SPI2", "G2", base_rate=0.3)
        with pytest.raises(BaseRateMismatch):
            run_replay(example_graph, "G2", [], spec)

    def test_dogmatic_start_warns(self, example_graph, caplog):
        graph = set_claim_opinion(example_graph, "G2", Opinion(0.9, 0.1, 0.0))
        trace, _ = run_replay(graph, "G2", frames_from_labels([False] * 10), SPEC)
        assert trace.findings and "dogmatic" in trace.findings[0]
        assert "dogmatic" in caplog.text
        assert trace.final.u == pytest.approx(1e-12)

    def test_uncertainty_floor(self):
        op = floor_uncertainty(Opinion(0.5, 0.5, 0.0))
        assert op.u == 1e-12
        assert op.b == pytest.approx(op.d)
        unchanged = Opinion(0.5, 0.3, 0.2)
        assert floor_uncertainty(unchanged) is unchanged

    def test_long_replay_keeps_u_positive(self, example_graph):
        trace, _ = run_replay(example_graph, "G2", frames_from_labels([False] * 5000), SPEC)
        assert all(p.claim_opinion_after.u >= 1e-12 for p in trace.points)
        assert all(p.beta_after is not None for p in trace.points)

    def test_deterministic(self, example_graph):
        labels = [i % 7 == 0 for i in range(95)]
        a, _ = run_replay(example_graph, "G2", frames_from_labels(labels), SPEC)
        b, _ = run_replay(example_graph, "G2", frames_from_labels(labels), SPEC)
        assert trace_to_csv(a) == trace_to_csv(b)
        assert a == b


class TestTraceOutput:
    @pytest.fixture
    def trace(self, example_graph):
        labels = [False] * 10 + [True] * 3 + [False] * 12
        t, _ = run_replay(example_graph, "G2", frames_from_labels(labels), SPEC)
        return t

    def test_csv_layout(self, trace):
        text = trace_to_csv(trace)
        rows = list(csv.reader(io.StringIO(text)))
        assert tuple(rows[0]) == CSV_HEADER
        assert len(rows) == 4
        assert rows[3][:6] == ["2", "20", "24", "1", "5", "0"]
        assert rows[2][4:6] == ["7", "3"]
        assert rows[1][6] == "0.833333333"

    def test_csv_nine_significant_digits(self, trace):
        rows = list(csv.DictReader(io.StringIO(trace_to_csv(trace))))
        for row in rows:
            for key in ("claim_b", "spi_u", "beta_variance"):
                mantissa = row[key].split("e")[0].replace(".", "").replace("-", "").lstrip("0")
                assert len(mantissa) <= 9

    def test_json_mirrors_csv(self, trace):
        doc = json.loads(trace_to_json(trace))
        assert doc["format"] == TRACE_FORMAT
        assert doc["config"]["window_size"] == 10 and doc["config"]["threshold"] == 0.5
        rows = list(csv.DictReader(io.StringIO(trace_to_csv(trace))))
        assert [list(p) for p in doc["points"]] == [list(CSV_HEADER)] * len(rows)
        for point, row in zip(doc["points"], rows):
            for key in CSV_HEADER:
                assert float(row[key]) == pytest.approx(point[key], rel=1e-9)

    def test_load_trace_document(self, trace, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(trace_to_json(trace))
        assert load_trace_document(path) == trace_to_dict(trace)

    def test_load_rejects_other_version(self, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"format": "sl-assure-trace/9"}))
        with pytest.raises(SchemaError, match="incompatible"):
            load_trace_document(path)

    def test_load_rejects_csv(self, trace, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text(trace_to_csv(trace))
        with pytest.raises(SchemaError):
            load_trace_document(path)
