"""
Nelder-Mead simplex engine on the integer grid.

The simplex lives in the continuous unit cube; every point is clamped to
[0, 1]^d and snapped to the grid only when it is proposed, and acceptance
decisions use the snapped point's measured value. The classic sequential
algorithm is unrolled into a state machine so that each workload evaluation is
one propose/observe exchange. Points that snap onto an already evaluated
configuration are answered from history without a new run.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from gridtune.engine import Engine
from gridtune.errors import EngineStalled
from gridtune.history import Evaluation, History
from gridtune.space import Configuration, check_config, normalize, random_config, snap, unit_step
from gridtune.types import NMSParams, SearchSpace

logger = logging.getLogger(__name__)


class Phase(str, Enum):
    """Which evaluation the simplex is waiting for."""

    BUILDING = "building"
    REFLECTED = "reflected"
    EXPANDED = "expanded"
    CONTRACTED = "contracted"
    SHRINKING = "shrinking"


@dataclass(frozen=True)
class Coefficients:
    reflect: float = 1.0
    expand: float = 2.0
    contract: float = 0.5
    shrink: float = 0.5


@dataclass
class SimplexState:
    """
    Vertices with their observed values plus the point awaiting evaluation.

    ``values`` is shorter than ``vertices`` while building. ``pending`` is the
    unsnapped point and its purpose.
    """

    vertices: List[np.ndarray]
    values: List[float] = field(default_factory=list)
    coeffs: Coefficients = field(default_factory=Coefficients)
    phase: Phase = Phase.BUILDING
    pending: Optional[Tuple[np.ndarray, str]] = None
    centroid: Optional[np.ndarray] = None
    reflected: Optional[Tuple[np.ndarray, float]] = None
    shrink_index: int = 0

    @property
    def best_value(self) -> float:
        return max(self.values)


def _clamp(point: np.ndarray) -> np.ndarray:
    return np.clip(point, 0.0, 1.0)


def init_simplex(
    space: SearchSpace,
    start: Configuration,
    rng: Optional[np.random.Generator] = None,
    step: float = 0.25,
) -> List[np.ndarray]:
    """
    Axis-aligned starting simplex.

    Vertex 0 is the normalized start; vertex i displaces coordinate i-1 by
    +step, or by -step when that would leave the unit cube. On axes so coarse
    that ``step`` would snap back to the start value the displacement is one
    grid step instead, so vertices stay distinct unless an axis has one value.
    """
    origin = normalize(space, start)
    vertices = [origin]
    for i, param in enumerate(space.params):
        reach = step
        if param.point_count > 1 and step * (param.point_count - 1) <= 0.5:
            reach = 1.0 / (param.point_count - 1)
        vertex = origin.copy()
        vertex[i] = origin[i] + reach if origin[i] + reach <= 1.0 else origin[i] - reach
        vertices.append(vertex)
    return vertices


def centroid(points: Sequence[np.ndarray]) -> np.ndarray:
    """Per-coordinate mean."""
    return np.mean(np.asarray(points, dtype=float), axis=0)


def reflect(x_c: np.ndarray, x_w: np.ndarray, coeffs: Coefficients) -> np.ndarray:
    return _clamp(x_c + coeffs.reflect * (x_c - x_w))


def expand(x_c: np.ndarray, x_w: np.ndarray, coeffs: Coefficients) -> np.ndarray:
    return _clamp(x_c + coeffs.expand * (x_c - x_w))


def contract_outside(x_c: np.ndarray, x_w: np.ndarray, coeffs: Coefficients) -> np.ndarray:
    return _clamp(x_c + coeffs.contract * (x_c - x_w))


def contract_inside(x_c: np.ndarray, x_w: np.ndarray, coeffs: Coefficients) -> np.ndarray:
    return _clamp(x_c - coeffs.contract * (x_c - x_w))


class NelderMeadEngine(Engine):
    """
    Sequential Nelder-Mead over the unit cube, maximizing the metric.

    A round that sees only cache hits while the simplex is smaller than one
    grid step in every dimension counts as a stall, and so does a long run of
    consecutive cache hits; both restart from a fresh random simplex while the
    global history is kept.
    """

    name = "nms"

    def __init__(self, params: Optional[NMSParams] = None, max_iterations: Optional[int] = None):
        super().__init__(max_iterations)
        self.params = params or NMSParams()
        self.coeffs = Coefficients(
            reflect=self.params.reflect,
            expand=self.params.expand,
            contract=self.params.contract,
            shrink=self.params.shrink,
        )
        self.state: Optional[SimplexState] = None
        self.restarts = 0
        self.transitions: List[Tuple[str, str]] = []
        self.round_best: List[Tuple[int, float]] = []
        self._space: Optional[SearchSpace] = None
        self._round_fresh = False
        self._cache_streak = 0
        self._restart_requested = False

    # proposal side

    def _propose(
        self, history: History, space: SearchSpace, rng: np.random.Generator
    ) -> Configuration:
        if self.state is None:
            self._space = space
            start = None
            if self.params.start is not None:
                start = Configuration.of(self.params.start)
                check_config(space, start)
            self._start(space, rng, start)
        elif self._restart_requested or self._cache_streak >= self._cache_limit(space):
            self._restart(space, rng)

        assert self.state is not None and self.state.pending is not None
        return snap(space, self.state.pending[0])

    def _cache_limit(self, space: SearchSpace) -> int:
        return (space.d + 1) * self.params.cache_hit_factor

    def _start(
        self, space: SearchSpace, rng: np.random.Generator, start: Optional[Configuration] = None
    ) -> None:
        origin = start if start is not None else random_config(space, rng)
        vertices = init_simplex(space, origin, rng, self.params.initial_step)
        self.state = SimplexState(vertices=vertices, coeffs=self.coeffs)
        self.state.pending = (vertices[0], "vertex")
        self._round_fresh = False
        self._cache_streak = 0
        self._restart_requested = False

    def _restart(self, space: SearchSpace, rng: np.random.Generator) -> None:
        if not self.params.restart:
            raise EngineStalled("simplex stalled and restarts are disabled")
        self.restarts += 1
        logger.debug("restarting simplex (restart %d)", self.restarts)
        self.transitions.append(("restart", str(self.restarts)))
        self._start(space, rng)

    # observation side

    def _observe(self, evaluation: Evaluation, cached: bool) -> None:
        value = evaluation.value if evaluation.value is not None else float("-inf")
        if cached:
            self._cache_streak += 1
        else:
            self._cache_streak = 0
            self._round_fresh = True
        self._advance(value)

    def _advance(self, value: float) -> None:
        state = self.state
        assert state is not None and state.pending is not None
        point = state.pending[0]

        if state.phase == Phase.BUILDING:
            state.values.append(value)
            if len(state.values) < len(state.vertices):
                state.pending = (state.vertices[len(state.values)], "vertex")
            else:
                self._begin_round()
            return

        if state.phase == Phase.SHRINKING:
            state.values[state.shrink_index] = value
            if state.shrink_index < len(state.vertices) - 1:
                state.shrink_index += 1
                state.pending = (state.vertices[state.shrink_index], "shrink")
            else:
                self._end_round("shrink")
            return

        assert state.centroid is not None
        worst = state.vertices[-1]
        f_best, f_second_worst, f_worst = state.values[0], state.values[-2], state.values[-1]

        if state.phase == Phase.REFLECTED:
            state.reflected = (point, value)
            if value > f_best:
                state.phase = Phase.EXPANDED
                state.pending = (expand(state.centroid, worst, self.coeffs), "expand")
            elif value > f_second_worst:
                self._replace_worst(point, value)
                self._end_round("accept_reflect")
            elif value > f_worst:
                state.phase = Phase.CONTRACTED
                state.pending = (
                    contract_outside(state.centroid, worst, self.coeffs),
                    "contract_outside",
                )
            else:
                state.phase = Phase.CONTRACTED
                state.pending = (
                    contract_inside(state.centroid, worst, self.coeffs),
                    "contract_inside",
                )
            return

        assert state.reflected is not None
        reflected_point, f_reflected = state.reflected

        if state.phase == Phase.EXPANDED:
            if value > f_reflected:
                self._replace_worst(point, value)
                self._end_round("accept_expand")
            else:
                self._replace_worst(reflected_point, f_reflected)
                self._end_round("accept_reflect")
            return

        # Phase.CONTRACTED
        outside = state.pending[1] == "contract_outside"
        accepted = value >= f_reflected if outside else value > f_worst
        if accepted:
            self._replace_worst(point, value)
            self._end_round("accept_" + state.pending[1])
        else:
            self._begin_shrink()

    def _begin_round(self) -> None:
        state = self.state
        assert state is not None
        order = sorted(range(len(state.values)), key=lambda i: -state.values[i])
        state.vertices = [state.vertices[i] for i in order]
        state.values = [state.values[i] for i in order]
        state.centroid = centroid(state.vertices[:-1])
        state.reflected = None
        state.phase = Phase.REFLECTED
        state.pending = (reflect(state.centroid, state.vertices[-1], self.coeffs), "reflect")
        self._round_fresh = False

    def _replace_worst(self, point: np.ndarray, value: float) -> None:
        state = self.state
        assert state is not None
        state.vertices[-1] = point
        state.values[-1] = value

    def _begin_shrink(self) -> None:
        state = self.state
        assert state is not None
        best = state.vertices[0]
        sigma = self.coeffs.shrink
        state.vertices = [best] + [best + sigma * (v - best) for v in state.vertices[1:]]
        state.phase = Phase.SHRINKING
        state.shrink_index = 1
        state.pending = (state.vertices[1], "shrink")
        self.transitions.append((Phase.CONTRACTED.value, "shrink"))

    def _end_round(self, outcome: str) -> None:
        state = self.state
        assert state is not None and self._space is not None
        if outcome != "shrink":
            self.transitions.append((state.phase.value, outcome))
        self.round_best.append((self.restarts, state.best_value))

        if not self._round_fresh and self._diameter_below_step(self._space):
            logger.debug("simplex stalled: round of cache hits below one grid step")
            self._restart_requested = True
        self._begin_round()

    def _diameter_below_step(self, space: SearchSpace) -> bool:
        assert self.state is not None
        coords = np.asarray(self.state.vertices)
        extent = coords.max(axis=0) - coords.min(axis=0)
        return bool(np.all(extent < unit_step(space)))
