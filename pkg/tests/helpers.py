"""Builders shared by the test modules."""

from typing import Callable, List, Optional, Tuple

import numpy as np

from gridtune.engine import Engine
from gridtune.errors import EngineStop
from gridtune.history import Evaluation, History
from gridtune.space import Configuration
from gridtune.types import EvalStatus, ParameterSpec, SearchSpace


def make_space(*ranges: Tuple[int, int, int]) -> SearchSpace:
    """A space with parameters p0, p1, ... over the given (min, max, step) ranges."""
    return SearchSpace(
        params=[
            ParameterSpec(name=f"p{i}", min=lo, max=hi, step=step)
            for i, (lo, hi, step) in enumerate(ranges)
        ]
    )


def ok(values: List[int], value: float, iteration: int) -> Evaluation:
    return Evaluation(
        config=Configuration.of(values),
        value=value,
        repeats=(value,),
        status=EvalStatus.OK,
        iteration=iteration,
    )


def failed(
    values: List[int], iteration: int, status: EvalStatus = EvalStatus.FAILED
) -> Evaluation:
    return Evaluation(
        config=Configuration.of(values), value=None, status=status, iteration=iteration
    )


def quadratic_study_dict(
    engine: str,
    target: Optional[List[int]] = None,
    max_iterations: int = 50,
    seed: int = 0,
) -> dict:
    return {
        "space": {
            "params": [
                {"name": "x", "min": 0, "max": 20, "step": 1},
                {"name": "y", "min": 0, "max": 20, "step": 1},
            ]
        },
        "synthetic": {"name": "quadratic", "target": target or [10, 10]},
        "engine": {"name": engine},
        "max_iterations": max_iterations,
        "seed": seed,
    }


def drive(
    engine: Engine,
    space: SearchSpace,
    objective: Callable[[Tuple[int, ...]], float],
    seed: int = 0,
    max_cache_hits: int = 10_000,
) -> History:
    """Run the propose/observe loop against an in-process objective until the engine stops."""
    history = History()
    rng = np.random.default_rng(seed)
    hits = 0
    while True:
        try:
            config = engine.propose(history, space, rng)
        except EngineStop:
            return history
        cached = history.lookup(config)
        if cached is not None:
            engine.observe(cached, cached=True)
            hits += 1
            if hits >= max_cache_hits:
                return history
            continue
        entry = ok(list(config.values), objective(config.values), history.next_iteration)
        history.record(entry)
        engine.observe(entry)
