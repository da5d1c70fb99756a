"""Engine contract shared by every search algorithm, plus the uniform random baseline."""

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from gridtune.errors import BudgetExhausted, EngineProtocolError, SpaceExhausted
from gridtune.history import Evaluation, History
from gridtune.space import Configuration, grid_size, iter_grid, random_config
from gridtune.types import SearchSpace

RANDOM_DRAWS = 64


def random_unevaluated(
    space: SearchSpace,
    history: History,
    rng: np.random.Generator,
    max_draws: int = RANDOM_DRAWS,
) -> Configuration:
    """
    Draw a uniform random grid point that has no ok evaluation yet.

    Rejection sampling first; when every draw hits the history the grid is
    enumerated and one of the remaining points is chosen uniformly.

    Raises:
        SpaceExhausted: If every grid point has an ok evaluation
    """
    for _ in range(max_draws):
        config = random_config(space, rng)
        if config not in history:
            return config

    remaining = [c for c in iter_grid(space) if c not in history]
    if not remaining:
        raise SpaceExhausted("every grid point has been evaluated")
    return remaining[int(rng.integers(0, len(remaining)))]


class Engine(ABC):
    """
    Base class for proposal engines.

    Subclasses implement :meth:`_propose` and optionally :meth:`_observe`. The
    base class enforces strict propose/observe alternation and raises
    ``BudgetExhausted`` once the history holds ``max_iterations`` workload runs
    and ``SpaceExhausted`` once every grid point has an ok evaluation.
    """

    name = "engine"

    def __init__(self, max_iterations: Optional[int] = None):
        self.max_iterations = max_iterations
        self._pending: Optional[Configuration] = None

    @property
    def pending(self) -> Optional[Configuration]:
        return self._pending

    def propose(
        self, history: History, space: SearchSpace, rng: np.random.Generator
    ) -> Configuration:
        """
        Select the next configuration to evaluate.

        Args:
            history: All evaluations so far
            space: The search space
            rng: Session random generator

        Returns:
            An on-grid configuration

        Raises:
            EngineProtocolError: If the previous proposal was not observed
            BudgetExhausted: If the iteration cap is reached
            SpaceExhausted: If every grid point has an ok evaluation
        """
        if self._pending is not None:
            raise EngineProtocolError("previous proposal has not been observed")
        if self.max_iterations is not None and len(history) >= self.max_iterations:
            raise BudgetExhausted(f"iteration cap {self.max_iterations} reached")
        if history.ok_count >= grid_size(space):
            raise SpaceExhausted("every grid point has been evaluated")

        config = self._propose(history, space, rng)
        self._pending = config
        return config

    def observe(self, evaluation: Evaluation, cached: bool = False) -> None:
        """
        Feed back the evaluation of the pending proposal.

        Args:
            evaluation: Fresh or cached evaluation of the pending configuration
            cached: True when the evaluation was served from history
        """
        if self._pending is None:
            raise EngineProtocolError("observe called without a pending proposal")
        if evaluation.config != self._pending:
            raise EngineProtocolError(
                f"observed {evaluation.config.values}, pending {self._pending.values}"
            )
        self._pending = None
        self._observe(evaluation, cached)

    @abstractmethod
    def _propose(
        self, history: History, space: SearchSpace, rng: np.random.Generator
    ) -> Configuration: ...

    def _observe(self, evaluation: Evaluation, cached: bool) -> None:
        return None


class RandomEngine(Engine):
    """Uniform random search over unevaluated grid points."""

    name = "random"

    def _propose(
        self, history: History, space: SearchSpace, rng: np.random.Generator
    ) -> Configuration:
        return random_unevaluated(space, history, rng)
