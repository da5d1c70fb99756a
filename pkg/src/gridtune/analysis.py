"""Analyses over completed histories: coverage, trajectories, pairplots, sweeps, comparisons."""

import csv
import io
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from gridtune.errors import EmptyHistoryError, GridTooLargeError
from gridtune.harness import Evaluator
from gridtune.history import Evaluation, History
from gridtune.space import Configuration, grid_size, iter_grid
from gridtune.types import (
    ComparisonRow,
    CoverageRow,
    SearchSpace,
    SensitivityRow,
    TuningReport,
)

logger = logging.getLogger(__name__)

COVERAGE_HEADER = [
    "param_name",
    "sampled_min",
    "sampled_max",
    "tunable_min",
    "tunable_max",
    "span_pct",
    "point_pct",
]
COMPARISON_HEADER = [
    "engine",
    "best_value",
    "iterations_to_best",
    "mean_span_pct",
    "evaluations",
    "wall_time_s",
]
PAIRPLOT_HEADER = ["param_a", "value_a", "param_b", "value_b", "metric"]
TRAJECTORY_HEADER = ["iteration", "best_so_far"]
SENSITIVITY_HEADER = ["param_name", "levels", "effect", "effect_pct"]

# An engine has reached its best once it is within this fraction of it.
NEAR_BEST_FRACTION = 0.01


@dataclass(frozen=True)
class PairplotRow:
    param_a: str
    value_a: int
    param_b: str
    value_b: int
    metric: float


def _ok_or_raise(history: History) -> List[Evaluation]:
    ok = history.ok_entries()
    if not ok:
        raise EmptyHistoryError("history has no ok evaluation")
    return ok


def span_percent(sampled_min: int, sampled_max: int, tunable_min: int, tunable_max: int) -> int:
    """floor(100 * sampled span / tunable span); 100 for a degenerate tunable range."""
    if tunable_max == tunable_min:
        return 100
    return (100 * (sampled_max - sampled_min)) // (tunable_max - tunable_min)


def coverage(history: History, space: SearchSpace) -> List[CoverageRow]:
    """
    Per-parameter sampled range against the tunable range.

    span_pct truncates, so 18 of 55 reads 32 and 39 of 55 reads 70. point_pct
    is the share of distinct grid values sampled.

    Raises:
        EmptyHistoryError: If there is no ok evaluation
    """
    ok = _ok_or_raise(history)
    rows: List[CoverageRow] = []
    for i, param in enumerate(space.params):
        sampled = {e.config.values[i] for e in ok}
        low, high = min(sampled), max(sampled)
        rows.append(
            CoverageRow(
                param_name=param.name,
                sampled_min=low,
                sampled_max=high,
                tunable_min=param.min,
                tunable_max=param.max,
                span_pct=span_percent(low, high, param.min, param.max),
                point_pct=(100 * len(sampled)) // param.point_count,
            )
        )
    return rows


def mean_span_pct(rows: Sequence[CoverageRow]) -> float:
    return float(np.mean([r.span_pct for r in rows]))


def best_so_far(history: History) -> List[Tuple[int, float]]:
    """
    Running maximum of ok values in iteration order.

    Raises:
        EmptyHistoryError: If there is no ok evaluation
    """
    trajectory: List[Tuple[int, float]] = []
    best = float("-inf")
    for entry in _ok_or_raise(history):
        best = max(best, entry.value)  # type: ignore[type-var]
        trajectory.append((entry.iteration, best))
    return trajectory


def pairplot_export(history: History, space: SearchSpace) -> List[PairplotRow]:
    """One row per ok evaluation and unordered parameter pair."""
    rows: List[PairplotRow] = []
    pairs = list(itertools.combinations(range(space.d), 2))
    for entry in _ok_or_raise(history):
        for a, b in pairs:
            rows.append(
                PairplotRow(
                    param_a=space.params[a].name,
                    value_a=entry.config.values[a],
                    param_b=space.params[b].name,
                    value_b=entry.config.values[b],
                    metric=entry.value,  # type: ignore[arg-type]
                )
            )
    return rows


def exhaustive_sweep(
    space: SearchSpace, evaluator: Evaluator, limit: int
) -> Tuple[History, Optional[Configuration]]:
    """
    Evaluate every grid point once, in lexicographic order.

    Returns:
        The full history and the best configuration (lexicographically smallest
        among ties), or None when no evaluation succeeded

    Raises:
        GridTooLargeError: If the grid holds more than ``limit`` points
    """
    size = grid_size(space)
    if size > limit:
        raise GridTooLargeError(f"grid of {size} points exceeds the sweep limit {limit}")

    history = History()
    best: Optional[Configuration] = None
    best_value = float("-inf")
    for iteration, config in enumerate(iter_grid(space), start=1):
        evaluation = evaluator(config, iteration)
        history.record(evaluation)
        if evaluation.value is not None and (best is None or evaluation.value > best_value):
            best, best_value = config, evaluation.value
    logger.info("sweep evaluated %d points", size)
    return history, best


def sensitivity(history: History, space: SearchSpace) -> List[SensitivityRow]:
    """
    Main effect of each parameter: spread of the mean metric across its sampled values.

    effect_pct relates that spread to the spread of all ok values; parameters with
    a small effect are candidates for removal from the space.

    Raises:
        EmptyHistoryError: If there is no ok evaluation
    """
    ok = _ok_or_raise(history)
    values = np.array([e.value for e in ok], dtype=float)
    overall = float(values.max() - values.min())
    rows: List[SensitivityRow] = []
    for i, param in enumerate(space.params):
        groups: Dict[int, List[float]] = {}
        for entry, value in zip(ok, values):
            groups.setdefault(entry.config.values[i], []).append(value)
        means = [float(np.mean(g)) for g in groups.values()]
        effect = max(means) - min(means)
        rows.append(
            SensitivityRow(
                param_name=param.name,
                levels=len(groups),
                effect=effect,
                effect_pct=100.0 * effect / overall if overall > 0 else 0.0,
            )
        )
    return rows


def iterations_to_best(history: History) -> int:
    """Iteration at which the history first came within 1% of its own best value."""
    best = history.best().value
    assert best is not None
    threshold = best - NEAR_BEST_FRACTION * abs(best)
    for entry in history.ok_entries():
        if entry.value >= threshold:  # type: ignore[operator]
            return entry.iteration
    raise AssertionError("unreachable: the best entry meets its own threshold")


def build_report(history: History, space: SearchSpace, engine: str, seed: int) -> TuningReport:
    """
    Summarize a session.

    Raises:
        EmptyHistoryError: If there is no ok evaluation
    """
    best = history.best()
    trajectory = best_so_far(history)
    return TuningReport(
        engine=engine,
        seed=seed,
        best_config=list(best.config.values),
        best_value=trajectory[-1][1],
        trajectory=trajectory,
        coverage=coverage(history, space),
        total_evaluations=len(history),
        total_wall_time_s=float(sum(e.wall_time_s for e in history)),
    )


def compare(histories: Mapping[str, History], space: SearchSpace) -> List[ComparisonRow]:
    """
    One comparison row per named history.

    Raises:
        EmptyHistoryError: If any history has no ok evaluation
    """
    rows: List[ComparisonRow] = []
    for name, history in histories.items():
        try:
            best = history.best()
        except EmptyHistoryError as e:
            raise EmptyHistoryError(f"{name}: {e}") from e
        rows.append(
            ComparisonRow(
                engine=name,
                best_value=best.value,  # type: ignore[arg-type]
                iterations_to_best=iterations_to_best(history),
                mean_span_pct=mean_span_pct(coverage(history, space)),
                evaluations=len(history),
                wall_time_s=float(sum(e.wall_time_s for e in history)),
            )
        )
    return rows


def _to_csv(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def coverage_csv(rows: Sequence[CoverageRow]) -> str:
    return _to_csv(COVERAGE_HEADER, [[getattr(r, k) for k in COVERAGE_HEADER] for r in rows])


def comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    return _to_csv(COMPARISON_HEADER, [[getattr(r, k) for k in COMPARISON_HEADER] for r in rows])


def pairplot_csv(rows: Sequence[PairplotRow]) -> str:
    return _to_csv(
        PAIRPLOT_HEADER, [[r.param_a, r.value_a, r.param_b, r.value_b, r.metric] for r in rows]
    )


def trajectory_csv(trajectory: Sequence[Tuple[int, float]]) -> str:
    return _to_csv(TRAJECTORY_HEADER, [list(point) for point in trajectory])


def sensitivity_csv(rows: Sequence[SensitivityRow]) -> str:
    return _to_csv(
        SENSITIVITY_HEADER, [[getattr(r, k) for k in SENSITIVITY_HEADER] for r in rows]
    )

