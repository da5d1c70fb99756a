"""Tests for the tuning session loop."""

import json
from pathlib import Path

import numpy as np
import pytest
from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter

from gridtune.config import parse_study_text
from gridtune.engine import Engine
from gridtune.errors import StudyValidationError
from gridtune.history import Evaluation, History
from gridtune.neldermead import NelderMeadEngine
from gridtune.session import TuningSession, create_engine
from gridtune.space import Configuration
from gridtune.telemetry import TelemetryManager
from gridtune.types import EvalStatus, ExhaustiveParams, SearchSpace, StudyConfig
from tests.helpers import make_space, quadratic_study_dict


def _study(engine: str, max_iterations: int = 20, seed: int = 0) -> StudyConfig:
    return parse_study_text(
        json.dumps(quadratic_study_dict(engine, max_iterations=max_iterations, seed=seed))
    )


class _Stuck(Engine):
    """Always proposes the minimum corner."""

    name = "stuck"

    def _propose(
        self, history: History, space: SearchSpace, rng: np.random.Generator
    ) -> Configuration:
        return Configuration.of([p.min for p in space.params])


def _failing(config: Configuration, iteration: int) -> Evaluation:
    return Evaluation(config=config, value=None, status=EvalStatus.FAILED, iteration=iteration)


def test_session_runs_to_budget(tmp_path: Path) -> None:
    """Test that a session stops at its iteration cap and streams every record."""
    path = tmp_path / "out" / "history.jsonl"
    session = TuningSession.from_study(_study("bo"), history_path=path)
    history = session.run()
    assert len(history) == 20
    assert session.stats.evaluations == 20
    assert session.stats.stop_reason == "BudgetExhausted"
    assert [e.iteration for e in history] == list(range(1, 21))
    assert History.load_jsonl(path).entries == history.entries


@pytest.mark.parametrize("engine", ["bo", "ga", "nms", "random"])
def test_session_is_deterministic(engine: str) -> None:
    """Test that a fixed seed reproduces the whole history."""
    first = TuningSession.from_study(_study(engine, seed=7)).run()
    second = TuningSession.from_study(_study(engine, seed=7)).run()
    assert first.entries == second.entries


def test_session_truncates_previous_history(tmp_path: Path) -> None:
    """Test that a rerun replaces an existing history file."""
    path = tmp_path / "history.jsonl"
    path.write_text("stale\n", encoding="utf-8")
    TuningSession.from_study(_study("random", max_iterations=3), history_path=path).run()
    assert len(path.read_text(encoding="utf-8").splitlines()) == 3


def test_cache_hits_cost_no_budget() -> None:
    """Test that Nelder-Mead cache hits are served from history without a new run."""
    session = TuningSession.from_study(_study("nms", max_iterations=60, seed=2))
    history = session.run()
    assert len(history) == 60
    assert session.stats.cache_hits > 0
    assert len({e.config for e in history}) == 60


def test_space_exhausted_stops_session() -> None:
    """Test that a session over a tiny grid ends when every point is evaluated."""
    space = make_space((0, 1, 1), (0, 1, 1))
    session = TuningSession(
        space,
        create_engine(_study("random").engine, 50),
        lambda config, iteration: Evaluation(
            config=config, value=1.0, repeats=(1.0,), iteration=iteration
        ),
    )
    assert len(session.run()) == 4
    assert session.stats.stop_reason == "SpaceExhausted"


def test_cache_hit_limit_stalls() -> None:
    """Test that an engine stuck on one configuration is stopped."""
    space = make_space((0, 5, 1))
    session = TuningSession(
        space,
        _Stuck(),
        lambda config, iteration: Evaluation(
            config=config, value=1.0, repeats=(1.0,), iteration=iteration
        ),
        cache_hit_limit=5,
    )
    history = session.run()
    assert len(history) == 1
    assert session.stats.cache_hits == 5
    assert session.stats.stop_reason == "EngineStalled"


def test_failures_consume_budget() -> None:
    """Test that failed evaluations are recorded and count against the cap."""
    space = make_space((0, 20, 1))
    session = TuningSession(space, create_engine(_study("random").engine, 5), _failing)
    history = session.run()
    assert len(history) == 5
    assert history.ok_count == 0


def test_exhaustive_engine_cannot_tune() -> None:
    """Test that the exhaustive engine is refused by the tuning loop."""
    with pytest.raises(StudyValidationError, match="use sweep"):
        create_engine(ExhaustiveParams())


def test_session_spans() -> None:
    """Test that the session and each evaluation are traced."""
    exporter = InMemorySpanExporter()
    telemetry = TelemetryManager(span_exporter=exporter)
    session = TuningSession.from_study(_study("random", max_iterations=4), telemetry=telemetry)
    session.run()
    telemetry.shutdown()

    spans = exporter.get_finished_spans()
    names = [s.name for s in spans]
    assert names.count("tuning.evaluation") == 4
    (root,) = [s for s in spans if s.name == "tuning.session"]
    assert root.attributes["tuning.evaluations"] == 4
    assert root.attributes["tuning.stop_reason"] == "BudgetExhausted"
    assert root.attributes["tuning.session.id"] == telemetry.session_id
    evaluation = next(s for s in spans if s.name == "tuning.evaluation")
    assert evaluation.parent is not None
    assert evaluation.parent.span_id == root.context.span_id
    assert evaluation.attributes["tuning.status"] == "ok"


def test_restart_events() -> None:
    """Test that each simplex restart is recorded on the session span."""
    exporter = InMemorySpanExporter()
    telemetry = TelemetryManager(span_exporter=exporter)
    session = TuningSession.from_study(
        _study("nms", max_iterations=200, seed=1), telemetry=telemetry
    )
    session.run()
    telemetry.shutdown()

    assert isinstance(session.engine, NelderMeadEngine)
    (root,) = [s for s in exporter.get_finished_spans() if s.name == "tuning.session"]
    restarts = [e for e in root.events if e.name == "tuning.engine.restart"]
    assert len(restarts) == session.engine.restarts
    assert session.engine.restarts >= 1
