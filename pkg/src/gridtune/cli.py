"""Command-line interface: tune, sweep, report, demo and presets."""

import argparse
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from gridtune import __version__
from gridtune.analysis import (
    build_report,
    compare,
    comparison_csv,
    coverage,
    coverage_csv,
    exhaustive_sweep,
    pairplot_csv,
    pairplot_export,
    sensitivity,
    sensitivity_csv,
    trajectory_csv,
)
from gridtune.config import (
    DEFAULT_CONFIG,
    ConfigValidator,
    list_presets,
    load_preset,
    override_study,
    parse_study,
    resolve_study,
)
from gridtune.errors import (
    EmptyHistoryError,
    GridTuneError,
    StudyParseError,
    StudyValidationError,
)
from gridtune.history import History
from gridtune.session import TuningSession, create_engine, create_evaluator
from gridtune.space import grid_size
from gridtune.telemetry import TelemetryManager
from gridtune.types import (
    CoverageRow,
    SearchSpace,
    StudyConfig,
    SurfaceName,
    TuningReport,
)
from gridtune.utils import atomic_write_text

logger = logging.getLogger("gridtune")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_RESULT = 2

TUNING_ENGINES = ("bo", "ga", "nms", "random")
DEMO_AXIS_MAX = 20


def _setup_logging(verbose: bool) -> None:
    handler = RichHandler(console=Console(stderr=True), show_path=False)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[handler],
        force=True,
    )


def _coverage_table(title: str, rows: Sequence[CoverageRow]) -> Table:
    table = Table(title=title, box=box.SIMPLE)
    table.add_column("Parameter", style="cyan")
    table.add_column("Sampled", justify="right")
    table.add_column("Tunable", justify="right")
    table.add_column("Span %", justify="right")
    table.add_column("Points %", justify="right")
    for row in rows:
        table.add_row(
            row.param_name,
            f"[{row.sampled_min}, {row.sampled_max}]",
            f"[{row.tunable_min}, {row.tunable_max}]",
            str(row.span_pct),
            str(row.point_pct),
        )
    return table


def _write_tuning_artifacts(
    out: Path, history: History, space: SearchSpace, report: TuningReport
) -> None:
    atomic_write_text(out / "report.json", report.model_dump_json(indent=2) + "\n")
    atomic_write_text(out / "coverage.csv", coverage_csv(report.coverage))
    atomic_write_text(out / "trajectory.csv", trajectory_csv(report.trajectory))
    atomic_write_text(out / "pairplot.csv", pairplot_csv(pairplot_export(history, space)))


def run_tuning(study: StudyConfig, out: Path, console: Console) -> int:
    """Run one study to completion and write its artifacts to ``out``."""
    engine = create_engine(study.engine, study.max_iterations)
    evaluator = create_evaluator(study)
    telemetry = TelemetryManager(study.telemetry) if study.telemetry is not None else None
    session = TuningSession(
        space=study.space,
        engine=engine,
        evaluator=evaluator,
        seed=study.seed,
        history_path=out / "history.jsonl",
        telemetry=telemetry,
    )
    try:
        history = session.run()
    finally:
        if telemetry is not None:
            telemetry.shutdown()

    if history.ok_count == 0:
        console.print(f"[red]No successful evaluation in {len(history)} runs[/red]")
        return EXIT_NO_RESULT

    report = build_report(history, study.space, engine.name, study.seed)
    _write_tuning_artifacts(out, history, study.space, report)

    table = Table(title=f"Best configuration ({engine.name}, seed {study.seed})", box=box.SIMPLE)
    table.add_column("Parameter", style="cyan")
    table.add_column("Value", justify="right")
    for name, value in zip(study.space.names, report.best_config):
        table.add_row(name, str(value))
    table.add_row("metric", f"{report.best_value:.6g}", style="bold")
    table.add_row("evaluations", str(report.total_evaluations))
    table.add_row("cache hits", str(session.stats.cache_hits))
    console.print(table)
    console.print(_coverage_table("Coverage", report.coverage))
    console.print(f"[dim]Results written to {out}[/dim]")
    return EXIT_OK


def _cmd_tune(args: argparse.Namespace, *, console: Console) -> int:
    study = resolve_study(args.config)
    updates: Dict[str, object] = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.max_iterations is not None:
        updates["max_iterations"] = args.max_iterations
    if updates:
        study = override_study(study, updates)
    out = Path(args.out) if args.out else study.output_dir
    return run_tuning(study, out, console)


def _cmd_sweep(args: argparse.Namespace, *, console: Console) -> int:
    study = resolve_study(args.config)
    if study.engine.name != "exhaustive":
        logger.info("sweep ignores engine %r", study.engine.name)
    out = Path(args.out) if args.out else study.output_dir

    history, best = exhaustive_sweep(study.space, create_evaluator(study), args.limit)
    atomic_write_text(out / "history.jsonl", "".join(e.to_json() + "\n" for e in history))
    if best is None:
        console.print("[red]No grid point evaluated successfully[/red]")
        return EXIT_NO_RESULT

    best_entry = history.lookup(best)
    assert best_entry is not None
    summary = {
        "grid_size": grid_size(study.space),
        "evaluations": len(history),
        "best_config": list(best.values),
        "best_value": best_entry.value,
    }
    atomic_write_text(out / "sweep.json", json.dumps(summary, indent=2) + "\n")
    rows = sensitivity(history, study.space)
    atomic_write_text(out / "sensitivity.csv", sensitivity_csv(rows))

    table = Table(title=f"Exhaustive sweep of {summary['grid_size']} points", box=box.SIMPLE)
    table.add_column("Parameter", style="cyan")
    table.add_column("Best", justify="right")
    table.add_column("Levels", justify="right")
    table.add_column("Effect %", justify="right")
    for name, value, row in zip(study.space.names, best.values, rows):
        table.add_row(name, str(value), str(row.levels), f"{row.effect_pct:.1f}")
    console.print(table)
    console.print(f"best metric {best_entry.value:.6g}; results written to {out}")
    return EXIT_OK


def load_space(source: str) -> SearchSpace:
    """A space from a bare space file, a study file or a preset name."""
    path = Path(source)
    if not path.is_file():
        return load_preset(source).space
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise StudyParseError(e.msg, line=e.lineno, column=e.colno) from e
    if not (isinstance(data, dict) and "params" in data):
        return parse_study(path).space
    try:
        space = SearchSpace.model_validate(data)
        ConfigValidator.validate_space(space)
    except (ValidationError, ValueError) as e:
        raise StudyValidationError("space", str(e)) from e
    return space


def history_name(path: Path) -> str:
    """Engine recorded in a sibling report.json, else the history's directory name."""
    report = path.parent / "report.json"
    if report.is_file():
        try:
            return TuningReport.model_validate_json(report.read_text(encoding="utf-8")).engine
        except ValueError:
            logger.warning("ignoring unreadable %s", report)
    return path.parent.name or path.stem


def _unique(name: str, taken: Dict[str, History]) -> str:
    candidate, n = name, 2
    while candidate in taken:
        candidate, n = f"{name}-{n}", n + 1
    return candidate


def _cmd_report(args: argparse.Namespace, *, console: Console) -> int:
    space = load_space(args.space)
    histories: Dict[str, History] = {}
    for raw in args.history:
        path = Path(raw)
        try:
            history = History.load_jsonl(path)
        except (OSError, ValueError, KeyError) as e:
            raise StudyValidationError("history", f"cannot read {path}: {e}") from e
        if history.ok_count == 0:
            raise EmptyHistoryError(f"{path} has no ok evaluation")
        histories[_unique(history_name(path), histories)] = history

    rows = compare(histories, space)
    out = Path(args.out)
    atomic_write_text(out / "comparison.csv", comparison_csv(rows))

    table = Table(title="Engine comparison", box=box.SIMPLE)
    table.add_column("Engine", style="cyan")
    table.add_column("Best", justify="right")
    table.add_column("Iterations to best", justify="right")
    table.add_column("Mean span %", justify="right")
    table.add_column("Evaluations", justify="right")
    table.add_column("Wall time (s)", justify="right")
    for row in rows:
        table.add_row(
            row.engine,
            f"{row.best_value:.6g}",
            str(row.iterations_to_best),
            f"{row.mean_span_pct:.1f}",
            str(row.evaluations),
            f"{row.wall_time_s:.1f}",
        )
    console.print(table)

    for name, history in histories.items():
        cov = coverage(history, space)
        atomic_write_text(out / f"coverage-{name}.csv", coverage_csv(cov))
        console.print(_coverage_table(f"Coverage: {name}", cov))
    console.print(f"[dim]Results written to {out}[/dim]")
    return EXIT_OK


def demo_study(surface: str, engine: str, seed: int, iterations: int, out: Path) -> StudyConfig:
    """A synthetic study: the ResNet50 space for resnet-like, a 21x21 grid otherwise."""
    if surface == SurfaceName.RESNET_LIKE.value:
        space = load_preset("resnet50-int8").space.model_dump()
    else:
        space = {"params": [{"name": f"x{i}", "min": 0, "max": DEMO_AXIS_MAX} for i in range(2)]}
    return StudyConfig.model_validate(
        {
            "space": space,
            "synthetic": {"name": surface},
            "engine": {"name": engine},
            "max_iterations": iterations,
            "seed": seed,
            "output_dir": str(out),
        }
    )


def _cmd_demo(args: argparse.Namespace, *, console: Console) -> int:
    out = Path(args.out) if args.out else Path("results") / f"demo-{args.surface}-{args.engine}"
    study = demo_study(args.surface, args.engine, args.seed, args.iterations, out)
    return run_tuning(study, out, console)


def _cmd_presets(args: argparse.Namespace, *, console: Console) -> int:
    table = Table(title="Shipped presets", box=box.SIMPLE)
    table.add_column("Name", style="cyan")
    table.add_column("Engine")
    table.add_column("Objective")
    table.add_column("Grid size", justify="right")
    for name in list_presets():
        study = load_preset(name)
        objective = study.synthetic.name.value if study.synthetic else "workload"
        table.add_row(name, study.engine.name, objective, f"{grid_size(study.space):,}")
    console.print(table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridtune", description="Gradient-free autotuning over integer parameter grids"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="cmd", required=True)

    tune_p = sub.add_parser("tune", help="Run a tuning study")
    tune_p.add_argument("--config", required=True, help="Study file or preset name")
    tune_p.add_argument("--out", default=None, help="Output directory (default: study output_dir)")
    tune_p.add_argument("--seed", type=int, default=None)
    tune_p.add_argument("--max-iterations", type=int, default=None)

    sweep_p = sub.add_parser("sweep", help="Evaluate every grid point of a study")
    sweep_p.add_argument("--config", required=True, help="Study file or preset name")
    sweep_p.add_argument("--limit", type=int, default=DEFAULT_CONFIG["sweep_limit"])
    sweep_p.add_argument("--out", default=None)

    report_p = sub.add_parser("report", help="Compare tuning histories")
    report_p.add_argument("--space", required=True, help="Space file, study file or preset name")
    report_p.add_argument("--history", required=True, nargs="+", help="history.jsonl files")
    report_p.add_argument("--out", default="report")

    demo_p = sub.add_parser("demo", help="Tune a synthetic surface")
    demo_p.add_argument("--surface", required=True, choices=[s.value for s in SurfaceName])
    demo_p.add_argument("--engine", required=True, choices=TUNING_ENGINES)
    demo_p.add_argument("--seed", type=int, default=0)
    demo_p.add_argument("--iterations", type=int, default=DEFAULT_CONFIG["max_iterations"])
    demo_p.add_argument("--out", default=None)

    sub.add_parser("presets", help="List shipped presets")
    return parser


COMMANDS = {
    "tune": _cmd_tune,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
    "demo": _cmd_demo,
    "presets": _cmd_presets,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    console = Console()
    try:
        return COMMANDS[args.cmd](args, console=console)
    except GridTuneError as e:
        if args.verbose:
            logger.exception("%s failed", args.cmd)
        console.print(f"[red]error:[/red] {e}")
        return EXIT_CONFIG
    except OSError as e:
        if args.verbose:
            logger.exception("%s failed", args.cmd)
        console.print(f"[red]error:[/red] {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
