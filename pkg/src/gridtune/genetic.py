"""History-driven genetic engine: breed the two fittest evaluations, then mutate."""

import logging
from typing import Callable, Optional, Tuple

import numpy as np

from gridtune.engine import Engine, random_unevaluated
from gridtune.errors import InsufficientHistoryError
from gridtune.history import History
from gridtune.space import Configuration
from gridtune.types import GAParams, SearchSpace

logger = logging.getLogger(__name__)

Fitness = Callable[[Configuration, float], float]


def raw_metric(config: Configuration, value: float) -> float:
    """Default fitness: the measured metric itself."""
    return value


def default_seed_pool(d: int) -> int:
    return max(4, d)


def select_parents(
    history: History, fitness: Fitness = raw_metric
) -> Tuple[Configuration, Configuration]:
    """
    The two ok evaluations with the highest fitness, fittest first.

    Ties go to the earlier iteration.

    Raises:
        InsufficientHistoryError: If fewer than two ok evaluations exist
    """
    ok = history.ok_entries()
    if len(ok) < 2:
        raise InsufficientHistoryError(f"need 2 ok evaluations to select parents, have {len(ok)}")
    ranked = sorted(
        ok,
        key=lambda e: (-fitness(e.config, e.value), e.iteration),  # type: ignore[arg-type]
    )
    return ranked[0].config, ranked[1].config


def crossover(p1: Configuration, p2: Configuration, rng: np.random.Generator) -> Configuration:
    """
    Single-cut recombination.

    For d >= 2 a cut c is drawn uniformly from 1..d-1 and the child is
    p1[:c] + p2[c:]. For d == 1 the child is one parent chosen with equal odds.
    """
    d = len(p1)
    if d == 1:
        return p1 if rng.random() < 0.5 else p2
    cut = int(rng.integers(1, d))
    return Configuration(p1.values[:cut] + p2.values[cut:])


def mutate(
    child: Configuration, space: SearchSpace, rate: float, rng: np.random.Generator
) -> Configuration:
    """Replace each gene, with probability ``rate``, by a uniform random grid value."""
    mask = rng.random(space.d) < rate
    if not mask.any():
        return child
    values = list(child.values)
    for i in np.flatnonzero(mask):
        param = space.params[i]
        values[i] = param.min + int(rng.integers(0, param.point_count)) * param.step
    return Configuration(tuple(values))


class GeneticEngine(Engine):
    """
    Breeds from the two fittest points of the whole history.

    Until ``seed_pool`` ok evaluations exist, proposals are uniform random. A
    child that was already evaluated is re-mutated up to ``max_retries`` times
    before falling back to a random unevaluated point.
    """

    name = "ga"

    def __init__(
        self,
        params: Optional[GAParams] = None,
        max_iterations: Optional[int] = None,
        fitness: Fitness = raw_metric,
    ):
        super().__init__(max_iterations)
        self.params = params or GAParams()
        self.fitness = fitness

    def seed_pool(self, space: SearchSpace) -> int:
        return self.params.seed_pool or default_seed_pool(space.d)

    def _propose(
        self, history: History, space: SearchSpace, rng: np.random.Generator
    ) -> Configuration:
        if history.ok_count < self.seed_pool(space):
            return random_unevaluated(space, history, rng)

        p1, p2 = select_parents(history, self.fitness)
        offspring = crossover(p1, p2, rng)
        child = mutate(offspring, space, self.params.mutation_rate, rng)
        retries = 0
        while child in history and retries < self.params.max_retries:
            child = mutate(offspring, space, self.params.mutation_rate, rng)
            retries += 1
        if child in history:
            logger.debug("child %s still duplicate after %d retries", child.values, retries)
            return random_unevaluated(space, history, rng)
        return child
