"""Bayesian-optimization engine: GP surrogate plus optimistic-improvement acquisition."""

import logging
from typing import List, Optional

import numpy as np

from gridtune.engine import Engine, random_unevaluated
from gridtune.errors import NotPositiveDefiniteError, SpaceExhausted, SpaceTooSmallError
from gridtune.gp import GPHyper, GPModel, default_hyper_grid, fit, predict_many, select_hypers
from gridtune.history import Evaluation, History
from gridtune.space import (
    Configuration,
    config_from_index,
    grid_size,
    iter_grid,
    neighbors,
    normalize_many,
    random_config,
    random_values,
)
from gridtune.types import BOParams, SearchSpace

logger = logging.getLogger(__name__)

CANDIDATE_RESAMPLES = 5

# Below this many grid points the initial design samples indices without replacement.
_INDEX_SAMPLING_LIMIT = 4096


def default_init_budget(d: int) -> int:
    return max(5, d + 1)


def initial_design(space: SearchSpace, k: int, rng: np.random.Generator) -> List[Configuration]:
    """
    Draw k distinct uniform random grid points.

    Raises:
        SpaceTooSmallError: If k exceeds the grid size
    """
    size = grid_size(space)
    if k > size:
        raise SpaceTooSmallError(f"cannot draw {k} distinct points from a grid of {size}")

    if size <= max(_INDEX_SAMPLING_LIMIT, 4 * k):
        indices = rng.choice(size, size=k, replace=False)
        return [config_from_index(space, int(i)) for i in indices]

    design: List[Configuration] = []
    seen: set[Configuration] = set()
    while len(design) < k:
        config = random_config(space, rng)
        if config not in seen:
            seen.add(config)
            design.append(config)
    return design


def smsego_gain(
    mean: float | np.ndarray,
    stddev: float | np.ndarray,
    best_y: float,
    alpha: float,
    epsilon: float,
) -> float | np.ndarray:
    """Optimistic improvement over the incumbent: (mean + alpha*stddev) - (best_y + epsilon)."""
    return (mean + alpha * stddev) - (best_y + epsilon)


class BayesianEngine(Engine):
    """
    GP-driven search.

    The first ``init_budget`` proposals come from a random initial design. After
    that each proposal refits the GP on every ok evaluation and returns the
    unevaluated candidate with the largest :func:`smsego_gain`. Candidates are
    the whole grid when it holds at most ``candidate_budget`` points, otherwise
    ``candidate_budget`` random points plus the grid neighbours of the incumbent.
    """

    name = "bo"

    def __init__(self, params: Optional[BOParams] = None, max_iterations: Optional[int] = None):
        super().__init__(max_iterations)
        self.params = params or BOParams()
        self._design: Optional[List[Configuration]] = None
        self._design_pos = 0
        self._hyper: Optional[GPHyper] = None
        self._hyper_selected_at = 0
        self.model: Optional[GPModel] = None
        self.last_candidates: Optional[np.ndarray] = None
        self.last_gains: Optional[np.ndarray] = None

    def init_budget(self, space: SearchSpace) -> int:
        return self.params.init_budget or default_init_budget(space.d)

    def _propose(
        self, history: History, space: SearchSpace, rng: np.random.Generator
    ) -> Configuration:
        ok = history.ok_entries()
        budget = self.init_budget(space)
        if len(ok) < budget:
            return self._next_design_point(history, space, rng, budget)

        self.model = self._fit(space, ok)
        incumbent = history.best()
        candidates = self._candidates(space, history, rng, incumbent.config)
        if candidates.size == 0:
            logger.debug("no unevaluated candidates after resampling, falling back to random")
            return random_unevaluated(space, history, rng)

        mean, variance = predict_many(self.model, normalize_many(space, candidates))
        gains = smsego_gain(
            mean,
            np.sqrt(variance),
            float(incumbent.value),  # type: ignore[arg-type]
            self.params.alpha,
            self.params.epsilon,
        )
        self.last_candidates = candidates
        self.last_gains = np.asarray(gains)
        # candidates are sorted, so argmax picks the lexicographically smallest of tied maxima
        return Configuration.of(candidates[int(np.argmax(gains))])

    def _next_design_point(
        self, history: History, space: SearchSpace, rng: np.random.Generator, budget: int
    ) -> Configuration:
        if self._design is None:
            self._design = initial_design(space, min(budget, grid_size(space)), rng)
        while self._design_pos < len(self._design):
            config = self._design[self._design_pos]
            self._design_pos += 1
            if config not in history:
                return config
        return random_unevaluated(space, history, rng)

    def _fit(self, space: SearchSpace, ok: List[Evaluation]) -> GPModel:
        u = normalize_many(space, np.array([e.config.values for e in ok]))
        y = np.array([e.value for e in ok], dtype=float)

        if self._hyper is None or len(ok) - self._hyper_selected_at >= self.params.refit_period:
            self._select(u, y, len(ok))
        assert self._hyper is not None
        try:
            return fit(u, y, self._hyper)
        except NotPositiveDefiniteError:
            self._select(u, y, len(ok))
            return fit(u, y, self._hyper)

    def _select(self, u: np.ndarray, y: np.ndarray, ok_count: int) -> None:
        self._hyper = select_hypers(u, y, default_hyper_grid(u.shape[1]))
        self._hyper_selected_at = ok_count
        logger.debug(
            "selected GP hyperparameters length_scale=%s noise_var=%s at n=%d",
            self._hyper.length_scales[0],
            self._hyper.noise_var,
            ok_count,
        )

    def _candidates(
        self,
        space: SearchSpace,
        history: History,
        rng: np.random.Generator,
        incumbent: Configuration,
    ) -> np.ndarray:
        """Unevaluated candidate grid points, sorted lexicographically, as an (m, d) array."""
        if grid_size(space) <= self.params.candidate_budget:
            rows = [c.values for c in iter_grid(space) if c not in history]
            if not rows:
                raise SpaceExhausted("every grid point has been evaluated")
            return np.array(rows, dtype=np.int64)

        local = {c.values for c in neighbors(space, incumbent)}
        for _ in range(1 + CANDIDATE_RESAMPLES):
            sampled = random_values(space, rng, self.params.candidate_budget)
            pool = {tuple(int(v) for v in row) for row in sampled} | local
            rows = sorted(r for r in pool if Configuration(r) not in history)
            if rows:
                return np.array(rows, dtype=np.int64)
        return np.empty((0, space.d), dtype=np.int64)
