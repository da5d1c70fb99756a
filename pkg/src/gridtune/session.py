"""The tuning loop: propose, evaluate or serve from cache, record, observe."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np

from gridtune.bayes import BayesianEngine
from gridtune.engine import Engine, RandomEngine
from gridtune.errors import EngineStalled, EngineStop, StudyValidationError
from gridtune.genetic import GeneticEngine
from gridtune.harness import Evaluator, SubprocessEvaluator, SyntheticEvaluator
from gridtune.history import Evaluation, History, append_jsonl
from gridtune.neldermead import NelderMeadEngine
from gridtune.telemetry import TelemetryManager
from gridtune.types import (
    BOParams,
    EngineParams,
    GAParams,
    NMSParams,
    RandomParams,
    SearchSpace,
    StudyConfig,
)

logger = logging.getLogger(__name__)

# Consecutive cache hits after which a session gives up on its engine.
CACHE_HIT_LIMIT = 10_000


def create_engine(params: EngineParams, max_iterations: Optional[int] = None) -> Engine:
    """
    Build the engine selected by an engine parameter block.

    Raises:
        StudyValidationError: For the exhaustive engine, which only ``sweep`` runs
    """
    if isinstance(params, BOParams):
        return BayesianEngine(params, max_iterations)
    if isinstance(params, GAParams):
        return GeneticEngine(params, max_iterations)
    if isinstance(params, NMSParams):
        return NelderMeadEngine(params, max_iterations)
    if isinstance(params, RandomParams):
        return RandomEngine(max_iterations)
    raise StudyValidationError("engine", f"engine {params.name!r} cannot tune; use sweep")


def create_evaluator(study: StudyConfig) -> Evaluator:
    """Evaluator for the study's workload or synthetic surface."""
    if study.workload is not None:
        return SubprocessEvaluator(study.workload, study.space)
    assert study.synthetic is not None
    return SyntheticEvaluator(study.synthetic, study.space)


@dataclass
class SessionStats:
    evaluations: int = 0
    cache_hits: int = 0
    stop_reason: str = ""


class TuningSession:
    """
    Drives one engine against one evaluator until the engine stops.

    Every fresh evaluation is recorded in the history and, when a history path
    is given, appended to it as one JSON line. Proposals that already have an ok
    evaluation are answered from the history and cost no budget.
    """

    def __init__(
        self,
        space: SearchSpace,
        engine: Engine,
        evaluator: Evaluator,
        seed: int = 0,
        history_path: Optional[Path] = None,
        telemetry: Optional[TelemetryManager] = None,
        cache_hit_limit: int = CACHE_HIT_LIMIT,
    ):
        self.space = space
        self.engine = engine
        self.evaluator = evaluator
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.history = History()
        self.history_path = history_path
        self.telemetry = telemetry
        self.cache_hit_limit = cache_hit_limit
        self.stats = SessionStats()
        self._cache_streak = 0
        self._restarts_seen = 0

        self._count_evaluation: Optional[Callable[..., None]] = None
        self._count_cache_hit: Optional[Callable[..., None]] = None
        self._record_duration: Optional[Callable[..., None]] = None
        if telemetry is not None:
            self._count_evaluation = telemetry.get_increment_counter(
                "tuning.evaluations", "Workload evaluations", "1"
            )
            self._count_cache_hit = telemetry.get_increment_counter(
                "tuning.cache_hits", "Proposals answered from history", "1"
            )
            self._record_duration = telemetry.get_histogram(
                "tuning.evaluation.duration", "Workload evaluation wall time", "s"
            )

    @classmethod
    def from_study(
        cls,
        study: StudyConfig,
        history_path: Optional[Path] = None,
        telemetry: Optional[TelemetryManager] = None,
    ) -> "TuningSession":
        return cls(
            space=study.space,
            engine=create_engine(study.engine, study.max_iterations),
            evaluator=create_evaluator(study),
            seed=study.seed,
            history_path=history_path,
            telemetry=telemetry,
        )

    def run(self) -> History:
        """Run to completion and return the history."""
        if self.history_path is not None:
            self.history_path.parent.mkdir(parents=True, exist_ok=True)
            self.history_path.write_text("", encoding="utf-8")

        if self.telemetry is None:
            self._loop(None)
        else:
            with self.telemetry.start_span(
                "tuning.session",
                {"tuning.engine": self.engine.name, "tuning.seed": self.seed},
            ) as span:
                self._loop(span)
                span.set_attribute("tuning.evaluations", self.stats.evaluations)
                span.set_attribute("tuning.cache_hits", self.stats.cache_hits)
                span.set_attribute("tuning.stop_reason", self.stats.stop_reason)

        logger.info(
            "%s stopped (%s) after %d evaluations, %d cache hits",
            self.engine.name,
            self.stats.stop_reason,
            self.stats.evaluations,
            self.stats.cache_hits,
        )
        return self.history

    def _loop(self, span: Any) -> None:
        while True:
            try:
                self.step(span)
            except EngineStop as e:
                self.stats.stop_reason = type(e).__name__
                logger.debug("engine stop: %s", e)
                return

    def step(self, span: Any = None) -> Evaluation:
        """
        One propose/observe exchange.

        Raises:
            EngineStop: When the engine has nothing left to propose
        """
        config = self.engine.propose(self.history, self.space, self.rng)
        self._note_restarts(span)

        cached = self.history.lookup(config)
        if cached is not None:
            self.stats.cache_hits += 1
            self._cache_streak += 1
            if self._count_cache_hit is not None:
                self._count_cache_hit(1, {"tuning.engine": self.engine.name})
            self.engine.observe(cached, cached=True)
            if self._cache_streak >= self.cache_hit_limit:
                raise EngineStalled(f"{self._cache_streak} consecutive cache hits")
            return cached

        self._cache_streak = 0
        evaluation = self._evaluate(config)
        self.history.record(evaluation)
        self.stats.evaluations += 1
        if self.history_path is not None:
            append_jsonl(self.history_path, evaluation)
        self.engine.observe(evaluation)
        return evaluation

    def _evaluate(self, config: Any) -> Evaluation:
        iteration = self.history.next_iteration
        if self.telemetry is None:
            evaluation = self.evaluator(config, iteration)
        else:
            with self.telemetry.start_span(
                "tuning.evaluation",
                {
                    "tuning.engine": self.engine.name,
                    "tuning.iteration": iteration,
                    "tuning.config": list(config.values),
                },
            ) as span:
                evaluation = self.evaluator(config, iteration)
                span.set_attribute("tuning.status", evaluation.status.value)
                if evaluation.value is not None:
                    span.set_attribute("tuning.metric", evaluation.value)
            self._emit_metrics(evaluation)

        logger.debug(
            "iteration %d %s -> %s (%s)",
            iteration,
            config.values,
            evaluation.value,
            evaluation.status.value,
        )
        return evaluation

    def _emit_metrics(self, evaluation: Evaluation) -> None:
        attributes: Dict[str, Any] = {
            "tuning.engine": self.engine.name,
            "tuning.status": evaluation.status.value,
        }
        if self._count_evaluation is not None:
            self._count_evaluation(1, attributes)
        if self._record_duration is not None:
            self._record_duration(evaluation.wall_time_s, attributes)

    def _note_restarts(self, span: Any) -> None:
        restarts = getattr(self.engine, "restarts", 0)
        if restarts > self._restarts_seen:
            self._restarts_seen = restarts
            if span is not None:
                span.add_event(
                    "tuning.engine.restart",
                    {"tuning.restart": restarts, "tuning.iteration": self.history.next_iteration},
                )
