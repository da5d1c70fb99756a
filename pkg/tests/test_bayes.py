"""Tests for the Bayesian-optimization engine."""

import numpy as np
import pytest

from gridtune.bayes import BayesianEngine, default_init_budget, initial_design, smsego_gain
from gridtune.errors import SpaceTooSmallError
from gridtune.gp import predict_many
from gridtune.history import History
from gridtune.space import grid_size, is_valid, iter_grid, normalize_many
from gridtune.types import BOParams, SearchSpace
from tests.helpers import drive, make_space, ok


def _peak_at_13(values: tuple) -> float:
    return -float((values[0] - 13) ** 2)


def test_gain_examples() -> None:
    """Test the optimistic-improvement acquisition on the incumbent."""
    assert smsego_gain(10.0, 0.0, 10.0, alpha=2.0, epsilon=0.0) == 0.0
    assert smsego_gain(10.0, 1.0, 10.0, alpha=2.0, epsilon=0.0) == 2.0
    assert smsego_gain(10.0, 1.0, 10.0, alpha=0.0, epsilon=0.5) == -0.5


def test_default_init_budget() -> None:
    """Test the initial design size for one- and five-parameter spaces."""
    assert default_init_budget(1) == 5
    assert default_init_budget(5) == 6
    assert default_init_budget(9) == 10


def test_initial_design_full_grid() -> None:
    """Test that a design as large as the grid covers it exactly."""
    space = make_space((1, 4, 1), (0, 20, 10))
    design = initial_design(space, grid_size(space), np.random.default_rng(0))
    assert sorted(design, key=lambda c: c.values) == list(iter_grid(space))


def test_initial_design_single_point() -> None:
    """Test a one-point design."""
    space = make_space((0, 200, 10))
    (config,) = initial_design(space, 1, np.random.default_rng(3))
    assert is_valid(space, config)


def test_initial_design_large_grid_is_distinct(resnet_space: SearchSpace) -> None:
    """Test that rejection sampling on a large grid yields distinct valid points."""
    design = initial_design(resnet_space, 50, np.random.default_rng(0))
    assert len(set(design)) == 50
    assert all(is_valid(resnet_space, c) for c in design)


def test_initial_design_too_small() -> None:
    """Test that asking for more points than the grid holds fails."""
    with pytest.raises(SpaceTooSmallError):
        initial_design(make_space((0, 2, 1)), 4, np.random.default_rng(0))


def test_first_proposal_is_first_design_point() -> None:
    """Test that an empty history gets the first initial-design point."""
    space = make_space((0, 20, 1), (0, 20, 1))
    engine = BayesianEngine()
    config = engine.propose(History(), space, np.random.default_rng(11))
    expected = initial_design(space, 5, np.random.default_rng(11))[0]
    assert config == expected


def test_finds_one_dimensional_maximum() -> None:
    """Test that the maximizer of a 21-point unimodal curve is found within 15 runs."""
    space = make_space((0, 20, 1))
    found = 0
    for seed in range(10):
        engine = BayesianEngine(max_iterations=15)
        history = drive(engine, space, _peak_at_13, seed=seed)
        assert len(history) == 15
        found += history.best().config.values == (13,)
    assert found >= 9


def test_proposal_maximizes_logged_gains() -> None:
    """Test that a post-design proposal is the argmax of its candidate gains."""
    space = make_space((0, 20, 1))
    engine = BayesianEngine(max_iterations=8)
    history = drive(engine, space, _peak_at_13, seed=4)

    previous = History()
    for entry in history.entries[:-1]:
        previous.record(entry)
    assert engine.model is not None
    assert engine.last_candidates is not None and engine.last_gains is not None
    candidates = engine.last_candidates
    assert history.entries[-1].config.values == tuple(
        candidates[int(np.argmax(engine.last_gains))]
    )
    assert not any(tuple(row) in {e.config.values for e in previous} for row in candidates)

    mean, variance = predict_many(engine.model, normalize_many(space, candidates))
    incumbent = float(previous.best().value)  # type: ignore[arg-type]
    gains = smsego_gain(mean, np.sqrt(variance), incumbent, 2.0, 0.0)
    np.testing.assert_allclose(gains, engine.last_gains)


def test_all_but_one_returns_remaining_point() -> None:
    """Test that the only unevaluated grid point is proposed."""
    space = make_space((0, 20, 1))
    history = History()
    iteration = 1
    for x in range(21):
        if x != 7:
            history.record(ok([x], _peak_at_13((x,)), iteration))
            iteration += 1
    engine = BayesianEngine()
    assert engine.propose(history, space, np.random.default_rng(0)).values == (7,)


def test_never_repeats_until_exhausted() -> None:
    """Test that a small grid is covered without duplicates before SpaceExhausted."""
    space = make_space((0, 3, 1), (0, 20, 10))
    history = drive(BayesianEngine(), space, lambda v: float(v[0] * v[1]), seed=2)
    assert len(history) == grid_size(space)
    assert len({e.config for e in history}) == grid_size(space)


def test_sampled_candidate_regime() -> None:
    """Test that proposals stay valid and distinct when candidates are sampled."""
    space = make_space((0, 99, 1), (0, 99, 1), (0, 99, 1))
    engine = BayesianEngine(BOParams(candidate_budget=16), max_iterations=12)
    history = drive(engine, space, lambda v: -float(sum((x - 50) ** 2 for x in v)), seed=0)
    assert len(history) == 12
    assert len({e.config for e in history}) == 12
    assert all(is_valid(space, e.config) for e in history)
    assert engine.last_candidates is not None
    assert len(engine.last_candidates) <= 16 + 2 * space.d
