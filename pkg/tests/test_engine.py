"""Tests for the engine contract and the random baseline."""

import numpy as np
import pytest

from gridtune.engine import RandomEngine, random_unevaluated
from gridtune.errors import BudgetExhausted, EngineProtocolError, SpaceExhausted
from gridtune.history import History
from gridtune.space import Configuration, is_valid
from gridtune.types import SearchSpace
from tests.helpers import make_space, ok


def _run(engine: RandomEngine, space: SearchSpace, seed: int, steps: int) -> History:
    history = History()
    rng = np.random.default_rng(seed)
    for iteration in range(1, steps + 1):
        config = engine.propose(history, space, rng)
        entry = ok(list(config.values), float(sum(config.values)), iteration)
        history.record(entry)
        engine.observe(entry)
    return history


def test_single_point_grid_exhausts() -> None:
    """Test that a one-point grid is proposed once and then reports SpaceExhausted."""
    space = make_space((7, 7, 1))
    engine = RandomEngine()
    history = History()
    rng = np.random.default_rng(0)
    config = engine.propose(history, space, rng)
    assert config.values == (7,)
    entry = ok([7], 1.0, 1)
    history.record(entry)
    engine.observe(entry)
    with pytest.raises(SpaceExhausted):
        engine.propose(history, space, rng)


def test_budget_exhausted_at_cap() -> None:
    """Test that the default cap of 50 workload runs ends the session."""
    space = make_space((0, 99, 1))
    engine = RandomEngine(max_iterations=50)
    history = _run(engine, space, seed=0, steps=50)
    with pytest.raises(BudgetExhausted):
        engine.propose(history, space, np.random.default_rng(0))


def test_strict_alternation() -> None:
    """Test that propose twice without observe is a protocol error."""
    space = make_space((0, 9, 1))
    engine = RandomEngine()
    rng = np.random.default_rng(0)
    engine.propose(History(), space, rng)
    with pytest.raises(EngineProtocolError, match="not been observed"):
        engine.propose(History(), space, rng)


def test_observe_requires_pending_config() -> None:
    """Test that observing a different configuration is rejected."""
    space = make_space((0, 9, 1))
    engine = RandomEngine()
    with pytest.raises(EngineProtocolError):
        engine.observe(ok([1], 1.0, 1))
    config = engine.propose(History(), space, np.random.default_rng(0))
    other = (config.values[0] + 1) % 10
    with pytest.raises(EngineProtocolError, match="pending"):
        engine.observe(ok([other], 1.0, 1))


def test_random_engine_reproducible() -> None:
    """Test that a fixed seed reproduces the proposal sequence."""
    space = make_space((0, 20, 1), (0, 200, 10))
    first = _run(RandomEngine(), space, seed=5, steps=30)
    second = _run(RandomEngine(), space, seed=5, steps=30)
    assert [e.config for e in first] == [e.config for e in second]


def test_random_engine_never_repeats() -> None:
    """Test that the random baseline covers a small grid without duplicates."""
    space = make_space((0, 3, 1), (0, 2, 1))
    history = _run(RandomEngine(), space, seed=1, steps=12)
    assert len({e.config for e in history}) == 12
    assert all(is_valid(space, e.config) for e in history)


def test_random_unevaluated_falls_back_to_enumeration() -> None:
    """Test that the last free point is found even when rejection sampling misses it."""
    space = make_space((0, 9, 1))
    history = History()
    for i, value in enumerate(range(9), start=1):
        history.record(ok([value], 0.0, i))
    config = random_unevaluated(space, history, np.random.default_rng(0), max_draws=0)
    assert config == Configuration.of([9])
