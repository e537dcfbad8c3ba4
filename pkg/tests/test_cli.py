import csv
import json
import re

import pytest
from click.testing import CliRunner

from sl_assure.cli import cli

SUMMARY = re.compile(
    r"claim=(\S+) windows=(\d+) b:([\d.]+)→([\d.]+) d:([\d.]+)→([\d.]+) u:([\d.]+)→([\d.]+)"
)


@pytest.fixture
def runner():
    return CliRunner()


def parse_summary(output):
    m = SUMMARY.search(output)
    assert m, output
    claim, n, *vals = m.groups()
    return claim, int(n), [float(v) for v in vals]


def replay(runner, tmp_path, *extra, name="out"):
    out = tmp_path / name
    args = ["replay", "--argument", "builtin:example", "--claim", "G2", "--out", str(out), *extra]
    result = runner.invoke(cli, args)
    return result, out


class TestValidate:
    def test_example(self, runner, example_path):
        result = runner.invoke(cli, ["validate", "--argument", str(example_path)])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert len(lines) == 2 and all(line.startswith("WARN") for line in lines)

    def test_builtin(self, runner):
        assert runner.invoke(cli, ["validate", "--argument", "builtin:example"]).exit_code == 0

    def test_truncated(self, runner, tmp_path, example_path):
        bad = tmp_path / "bad.json"
        bad.write_text(example_path.read_text()[:200])
        result = runner.invoke(cli, ["validate", "--argument", str(bad)])
        assert result.exit_code == 2
        assert "error [parse-argument]" in result.output

    def test_mass_sum(self, runner, tmp_path, example_path):
        doc = json.loads(example_path.read_text())
        doc["nodes"][0]["opinion"] = {"b": 0.5, "d": 0.4, "u": 0.3, "a": 0.5}
        path = tmp_path / "mass.json"
        path.write_text(json.dumps(doc))
        result = runner.invoke(cli, ["validate", "--argument", str(path)])
        assert result.exit_code == 2
        assert "InvalidOpinion" in result.output

    def test_error_findings_exit_1(self, runner, tmp_path):
        doc = {"format": "sl-assure/1", "nodes": [{"id": "G", "kind": "goal"}]}
        path = tmp_path / "g.json"
        path.write_text(json.dumps(doc))
        result = runner.invoke(cli, ["validate", "--argument", str(path)])
        assert result.exit_code == 1
        assert "ERROR G" in result.output

    def test_missing_file(self, runner, tmp_path):
        result = runner.invoke(cli, ["validate", "--argument", str(tmp_path / "none.json")])
        assert result.exit_code == 2


class TestSimulate:
    def test_deterministic(self, runner, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for p in (a, b):
            result = runner.invoke(cli, ["simulate", "--preset", "violation-burst", "--out", str(p)])
            assert result.exit_code == 0
            assert "frames=300" in result.output
        assert a.read_bytes() == b.read_bytes()

    def test_stdout(self, runner):
        result = runner.invoke(cli, ["simulate", "--preset", "short-night"])
        assert result.exit_code == 0
        lines = [line for line in result.stdout.splitlines() if line.startswith("{")]
        assert len(lines) == 25

    def test_seed_env(self, runner, tmp_path):
        outs = []
        for env in ({}, {"SL_ASSURE_SEED": "42"}, {"SL_ASSURE_SEED": "5"}):
            p = tmp_path / f"s{len(outs)}.jsonl"
            runner.invoke(cli, ["simulate", "--preset", "short-night", "--out", str(p)], env=env)
            outs.append(p.read_bytes())
        assert outs[0] == outs[1] != outs[2]

    def test_unknown_preset(self, runner):
        result = runner.invoke(cli, ["simulate", "--preset", "nope"])
        assert result.exit_code == 2
        assert "error [simulate]" in result.output

    def test_needs_source(self, runner):
        assert runner.invoke(cli, ["simulate"]).exit_code == 2


class TestReplay:
    def test_clean_run_reduces_uncertainty(self, runner, tmp_path):
        result, out = replay(runner, tmp_path, "--preset", "clean-run", "--inject-uncertainty", "0.1")
        assert result.exit_code == 0, result.output
        claim, n, (b0, b1, d0, d1, u0, u1) = parse_summary(result.output)
        assert (claim, n) == ("G2", 40)
        assert u1 < u0 and d1 <= d0 and b1 > b0
        for name in ("trace.csv", "trace.json", "beta_initial.csv", "beta_final.csv"):
            assert (out / name).exists()
        rows = list(csv.reader((out / "beta_final.csv").open()))
        assert rows[0] == ["x", "density"] and len(rows) == 202

    def test_violation_burst_raises_disbelief(self, runner, tmp_path):
        result, _ = replay(runner, tmp_path, "--preset", "violation-burst", "--inject-uncertainty", "0.1")
        assert result.exit_code == 0, result.output
        _, n, (b0, b1, d0, d1, u0, u1) = parse_summary(result.output)
        assert n == 30 and d1 > d0

    def test_from_log_file(self, runner, tmp_path):
        log = tmp_path / "log.jsonl"
        runner.invoke(cli, ["simulate", "--preset", "short-night", "--out", str(log)])
        a, out_a = replay(runner, tmp_path, "--log", str(log), name="a")
        b, out_b = replay(runner, tmp_path, "--preset", "short-night", name="b")
        assert a.exit_code == b.exit_code == 0
        assert (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()

    def test_format_selection(self, runner, tmp_path):
        result, out = replay(runner, tmp_path, "--preset", "short-night", "--format", "csv")
        assert result.exit_code == 0
        assert (out / "trace.csv").exists() and not (out / "trace.json").exists()

    def test_override_recorded(self, runner, tmp_path):
        result, out = replay(runner, tmp_path, "--preset", "short-night", "--window", "5", "--theta", "0.3")
        assert result.exit_code == 0
        cfg = json.loads((out / "trace.json").read_text())["config"]
        assert (cfg["window_size"], cfg["threshold"]) == (5, 0.3)

    def test_no_spi_spec(self, runner, tmp_path):
        result, _ = replay(runner, tmp_path, "--preset", "short-night")
        assert result.exit_code == 0
        result = runner.invoke(cli, ["replay", "--argument", "builtin:example", "--claim", "G3",
                                     "--preset", "short-night", "--out", str(tmp_path / "x")])
        assert result.exit_code == 2
        assert "no SPI spec for claim G3" in result.output

    def test_claim_without_opinion(self, runner, tmp_path, example_path):
        doc = json.loads(example_path.read_text())
        for node in doc["nodes"]:
            if node["id"] == "G3":
                node.pop("opinion", None)
        path = tmp_path / "arg.json"
        path.write_text(json.dumps(doc))
        result = runner.invoke(cli, ["replay", "--argument", str(path), "--claim", "G3", "--window", "10",
                                     "--preset", "short-night", "--out", str(tmp_path / "x")])
        assert result.exit_code == 2
        assert "lacks initial opinion" in result.output

    def test_bad_inject_target(self, runner, tmp_path):
        result, _ = replay(runner, tmp_path, "--preset", "short-night", "--inject-uncertainty", "0.0")
        assert result.exit_code == 2
        assert "inject-uncertainty" in result.output

    def test_malformed_log(self, runner, tmp_path):
        log = tmp_path / "bad.jsonl"
        log.write_text("{oops\n")
        result, _ = replay(runner, tmp_path, "--log", str(log))
        assert result.exit_code == 2
        assert "error [load-log]" in result.output and "line 1" in result.output

    def test_two_sources(self, runner, tmp_path):
        result, _ = replay(runner, tmp_path, "--preset", "short-night", "--log", "x.jsonl")
        assert result.exit_code == 2


class TestReport:
    def _trace(self, runner, tmp_path, preset, *extra, name=None):
        result, out = replay(runner, tmp_path, "--preset", preset, "--inject-uncertainty", "0.1",
                             *extra, name=name or preset)
        assert result.exit_code == 0, result.output
        return out / "trace.json"

    def test_clean_run(self, runner, tmp_path):
        path = self._trace(runner, tmp_path, "clean-run")
        result = runner.invoke(cli, ["report", str(path), "--format", "json"])
        assert result.exit_code == 0
        (run,) = json.loads(result.output)["claims"][0]["traces"]
        assert run["violation_windows"] == 0 and run["windows"] == 40

    def test_min_belief_at_burst(self, runner, tmp_path):
        path = self._trace(runner, tmp_path, "violation-burst")
        result = runner.invoke(cli, ["report", str(path), "--format", "json"])
        (run,) = json.loads(result.output)["claims"][0]["traces"]
        assert run["min_belief_window"] == 10
        text = runner.invoke(cli, ["report", str(path)]).output
        assert "min belief" in text and "at window 10" in text

    def test_differing_theta(self, runner, tmp_path):
        hi = self._trace(runner, tmp_path, "short-night", "--theta", "0.7", name="hi")
        lo = self._trace(runner, tmp_path, "short-night", "--theta", "0.3", name="lo")
        result = runner.invoke(cli, ["report", str(hi), str(lo), "--format", "json"])
        claim = json.loads(result.output)["claims"][0]
        assert [t["config"]["threshold"] for t in claim["traces"]] == [0.3, 0.7]
        assert any("threshold" in note for note in claim["notes"])

    def test_incompatible_version(self, runner, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"format": "sl-assure-trace/0"}))
        result = runner.invoke(cli, ["report", str(path)])
        assert result.exit_code == 2
        assert "error [load-trace]" in result.output

    def test_out_file(self, runner, tmp_path):
        path = self._trace(runner, tmp_path, "short-night")
        dest = tmp_path / "report.txt"
        assert runner.invoke(cli, ["report", str(path), "--out", str(dest)]).exit_code == 0
        assert dest.read_text().startswith("claim G2")
