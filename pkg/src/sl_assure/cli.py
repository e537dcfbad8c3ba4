"""``sl-assure`` command line: validate, simulate, replay, report.

Exit codes: 0 success, 1 validation findings of severity ERROR,
2 usage, parse or runtime failure.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import click

from . import argument as arg_mod
from . import engine, report, simgen
from .argument import SpiSpec
from .errors import LogFormatError, OrderingError, SLAssureError
from .monitor import iter_frame_log, write_frame_log
from .opinion import BetaParams, beta_pdf_samples, inject_uncertainty

BUILTIN_ARGUMENTS = {"builtin:example": "example_argument.json"}


class StageError(click.ClickException):
    exit_code = 2

    def __init__(self, stage: str, exc: BaseException | str):
        super().__init__(f"[{stage}] {exc}")

    def show(self, file=None):
        click.echo(f"error {self.message}", err=True)


def _fail(stage: str, exc) -> StageError:
    return StageError(stage, exc)


def _resolve_argument_path(path: str) -> Path:
    if path in BUILTIN_ARGUMENTS:
        return Path(__file__).with_name("data") / BUILTIN_ARGUMENTS[path]
    return Path(path)


def _load_argument(path: str):
    try:
        return arg_mod.load_argument(_resolve_argument_path(path))
    except (OSError, UnicodeDecodeError) as exc:
        raise _fail("parse-argument", exc)
    except SLAssureError as exc:
        raise _fail("parse-argument", f"{type(exc).__name__}: {exc}")


def _scenario(preset: str | None, scenario_path: str | None, seed: int | None) -> simgen.ScenarioSpec:
    if (preset is None) == (scenario_path is None):
        raise click.UsageError("give exactly one of --preset or --scenario")
    try:
        spec = simgen.get_preset(preset) if preset else simgen.load_scenario(scenario_path)
    except KeyError as exc:
        raise _fail("simulate", exc.args[0])
    except (OSError, SLAssureError) as exc:
        raise _fail("simulate", exc)
    return spec if seed is None else spec.with_seed(seed)


@dataclass(frozen=True)
class RunConfig:
    argument_path: str
    claim_id: str | None
    spi_id: str | None
    log_path: str | None
    preset: str | None
    scenario_path: str | None
    seed: int | None
    out_dir: Path
    formats: tuple[str, ...]
    window_size: int | None = None
    threshold: float | None = None
    max_distance: float | None = None
    prior_weight: float | None = None
    base_rate: float | None = None
    inject_u: float | None = None
    exclude_empty_frames: bool = False
    pdf_points: int = 201

    def __post_init__(self):
        sources = [s for s in (self.log_path, self.preset, self.scenario_path) if s is not None]
        if len(sources) != 1:
            raise click.UsageError("give exactly one of --log, --preset or --scenario")

    @property
    def overrides(self) -> dict:
        values = {
            "window_size": self.window_size,
            "threshold": self.threshold,
            "max_distance": self.max_distance,
            "prior_weight": self.prior_weight,
            "base_rate": self.base_rate,
        }
        return {k: v for k, v in values.items() if v is not None}


def resolve_spi(graph: arg_mod.ArgumentGraph, cfg: RunConfig) -> tuple[str, SpiSpec]:
    """Pick claim and SPI spec: command-line overrides win over the
    argument file, which wins over built-in defaults."""
    claim_id = cfg.claim_id
    spec = None
    if cfg.spi_id is not None:
        spec = graph.spis.get(cfg.spi_id)
        if spec is None:
            raise _fail("resolve-spi", f"no SPI {cfg.spi_id!r} in argument")
        if claim_id is None:
            claim_id = spec.claim_id
        elif spec.claim_id != claim_id:
            raise _fail("resolve-spi", f"SPI {cfg.spi_id} is attached to {spec.claim_id}, not {claim_id}")
    if claim_id is None:
        raise click.UsageError("--claim is required unless --spi names an attached SPI")
    if claim_id not in graph.nodes:
        raise _fail("resolve-spi", f"no claim {claim_id!r} in argument")
    if spec is None:
        spec = graph.spi_for(claim_id)
    overrides = cfg.overrides
    try:
        if spec is None:
            if not overrides:
                raise _fail("resolve-spi", f"no SPI spec for claim {claim_id}")
            spec = SpiSpec(id=f"SPI-{claim_id}", claim_id=claim_id, **overrides)
        elif overrides:
            spec = replace(spec, **overrides)
    except ValueError as exc:
        raise _fail("resolve-spi", exc)
    return claim_id, spec


def _format_change(name: str, before: float, after: float) -> str:
    return f"{name}:{before:.4f}→{after:.4f}"


def summary_line(trace: engine.ConfidenceTrace) -> str:
    i, f = trace.initial, trace.final
    return " ".join(
        [
            f"claim={trace.claim_id}",
            f"windows={len(trace.points)}",
            _format_change("b", i.b, f.b),
            _format_change("d", i.d, f.d),
            _format_change("u", i.u, f.u),
        ]
    )


def _write_pdf(path: Path, params: BetaParams | None, n_points: int) -> None:
    lines = ["x,density"]
    if params is not None:
        lines += [f"{engine.fmt_float(x)},{engine.fmt_float(p)}" for x, p in beta_pdf_samples(params, n_points)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def execute_replay(cfg: RunConfig) -> engine.ConfidenceTrace:
    graph = _load_argument(cfg.argument_path)
    claim_id, spec = resolve_spi(graph, cfg)

    try:
        initial = arg_mod.get_claim_opinion(graph, claim_id)
    except SLAssureError as exc:
        raise _fail("resolve-claim", exc)
    if initial is None:
        raise _fail("resolve-claim", f"claim {claim_id} lacks initial opinion")
    if cfg.inject_u is not None:
        try:
            initial = inject_uncertainty(initial, cfg.inject_u)
        except SLAssureError as exc:
            raise _fail("inject-uncertainty", exc)

    if cfg.log_path is not None:
        frames = iter_frame_log(cfg.log_path)
    else:
        scenario = _scenario(cfg.preset, cfg.scenario_path, cfg.seed)
        frames = simgen.generate_log(scenario, spec.object_class)

    try:
        trace, _ = engine.run_replay(
            graph, claim_id, frames, spec, initial=initial, exclude_empty_frames=cfg.exclude_empty_frames
        )
    except (OSError, UnicodeDecodeError, LogFormatError, OrderingError) as exc:
        raise _fail("load-log", exc)
    except SLAssureError as exc:
        raise _fail("replay", f"{type(exc).__name__}: {exc}")

    try:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        if "csv" in cfg.formats:
            (cfg.out_dir / "trace.csv").write_text(engine.trace_to_csv(trace), encoding="utf-8")
        if "json" in cfg.formats:
            (cfg.out_dir / "trace.json").write_text(engine.trace_to_json(trace), encoding="utf-8")
        W = spec.prior_weight
        for name, op in (("initial", trace.initial), ("final", trace.final)):
            params = engine.beta_or_none(op, W)
            _write_pdf(cfg.out_dir / f"beta_{name}.csv", params, cfg.pdf_points)
    except OSError as exc:
        raise _fail("write-output", exc)
    return trace


# -- commands -------------------------------------------------------------

_seed_option = click.option(
    "--seed", type=int, envvar="SL_ASSURE_SEED", default=None,
    help="RNG seed (falls back to $SL_ASSURE_SEED, then the scenario's own seed).",
)


@click.group()
@click.version_option(package_name="artifact", prog_name="sl-assure")
def cli():
    """Runtime confidence updates for subjective-logic assurance arguments."""


@cli.command()
@click.option("--argument", "argument_path", required=True, help="Argument JSON file (or builtin:example).")
def validate(argument_path):
    """Parse an argument file and list findings."""
    graph = _load_argument(argument_path)
    findings = arg_mod.validate_argument(graph)
    for finding in findings:
        click.echo(str(finding))
    if any(f.severity == "ERROR" for f in findings):
        sys.exit(1)


@cli.command()
@click.option("--preset", default=None, help=f"One of: {', '.join(sorted(simgen.preset_scenarios()))}.")
@click.option("--scenario", "scenario_path", default=None, help="Scenario JSON file.")
@_seed_option
@click.option("--out", "out_path", default="-", help="Output JSON-lines file ('-' for stdout).")
def simulate(preset, scenario_path, seed, out_path):
    """Generate a synthetic frame log."""
    spec = _scenario(preset, scenario_path, seed)
    frames = simgen.generate_log(spec)
    try:
        if out_path == "-":
            n = write_frame_log(frames, click.get_text_stream("stdout"))
        else:
            n = write_frame_log(frames, out_path)
    except OSError as exc:
        raise _fail("write-output", exc)
    click.echo(f"frames={n}", err=out_path == "-")


@cli.command()
@click.option("--argument", "argument_path", required=True, help="Argument JSON file (or builtin:example).")
@click.option("--claim", "claim_id", default=None)
@click.option("--spi", "spi_id", default=None)
@click.option("--log", "log_path", default=None, help="JSON-lines frame log.")
@click.option("--preset", default=None)
@click.option("--scenario", "scenario_path", default=None)
@_seed_option
@click.option("--window", "window_size", type=click.IntRange(min=1), default=None)
@click.option("--theta", "threshold", type=click.FloatRange(0.0, 1.0), default=None)
@click.option("--distance", "max_distance", type=float, default=None)
@click.option("--prior-weight", type=float, default=None)
@click.option("--base-rate", type=click.FloatRange(0.0, 1.0), default=None)
@click.option("--inject-uncertainty", "inject_u", type=click.FloatRange(0.0, 1.0), default=None,
              help="Raise the claim's initial uncertainty to this level before replay.")
@click.option("--exclude-empty-frames", is_flag=True, help="Do not count frames without ground truth.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=Path("out"))
@click.option("--format", "formats", type=click.Choice(["csv", "json"]), multiple=True,
              help="Trace formats to write (repeatable; default both).")
@click.option("--pdf-points", type=click.IntRange(min=2), default=201)
def replay(formats, **kwargs):
    """Replay a frame log against a claim and write its confidence trace."""
    cfg = RunConfig(formats=tuple(formats) or ("csv", "json"), **kwargs)
    trace = execute_replay(cfg)
    for finding in trace.findings:
        click.echo(f"WARN {trace.claim_id} {finding}", err=True)
    click.echo(summary_line(trace))


@cli.command("report")
@click.argument("traces", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@click.option("--out", "out_path", default="-")
def report_cmd(traces: Sequence[str], fmt, out_path):
    """Summarise JSON trace files per claim."""
    docs = []
    for path in traces:
        try:
            docs.append((path, engine.load_trace_document(path)))
        except OSError as exc:
            raise _fail("load-trace", exc)
        except SLAssureError as exc:
            raise _fail("load-trace", exc)
    rep = report.build_report(docs)
    text = report.render_json(rep) if fmt == "json" else report.render_text(rep)
    if out_path == "-":
        click.echo(text, nl=False)
    else:
        Path(out_path).write_text(text, encoding="utf-8")


def main(argv=None):
    cli.main(args=argv, prog_name="sl-assure")


if __name__ == "__main__":
    main()
