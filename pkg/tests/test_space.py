"""Tests for search-space grid operations."""

import numpy as np
import pytest

from gridtune.errors import (
    DimensionMismatchError,
    DuplicateNameError,
    EmptySpaceError,
    GridOverflowError,
    InvalidRangeError,
    MisalignedStepError,
    OffGridError,
)
from gridtune.space import (
    Configuration,
    config_from_index,
    grid_size,
    is_valid,
    iter_grid,
    neighbors,
    normalize,
    random_config,
    snap,
    unit_step,
    validate_space,
)
from gridtune.types import ParameterSpec, SearchSpace
from tests.helpers import make_space


def test_validate_table_ranges() -> None:
    """Test that the model preset ranges validate with the expected point counts."""
    space = make_space((1, 56, 1), (0, 200, 10))
    validate_space(space)
    assert [p.point_count for p in space.params] == [56, 21]


def test_validate_inverted_range() -> None:
    """Test that min > max raises InvalidRangeError."""
    with pytest.raises(InvalidRangeError, match="min 5 > max 3"):
        validate_space(make_space((5, 3, 1)))


def test_validate_misaligned_step() -> None:
    """Test that a range that is not a multiple of the step is rejected."""
    with pytest.raises(MisalignedStepError, match="not a multiple"):
        validate_space(make_space((0, 200, 13)))


def test_validate_duplicate_name() -> None:
    """Test that parameter names must be unique."""
    space = SearchSpace(
        params=[
            ParameterSpec(name="a", min=0, max=1),
            ParameterSpec(name="a", min=0, max=2),
        ]
    )
    with pytest.raises(DuplicateNameError, match="a"):
        validate_space(space)


def test_validate_empty_space() -> None:
    """Test that a space needs at least one parameter."""
    with pytest.raises(EmptySpaceError):
        validate_space(SearchSpace(params=[]))


def test_space_errors_are_value_errors() -> None:
    """Test that space validation errors can be caught as ValueError."""
    with pytest.raises(ValueError):
        validate_space(make_space((5, 3, 1)))


def test_grid_size_examples() -> None:
    """Test grid sizes of single, degenerate and product spaces."""
    assert grid_size(make_space((0, 200, 10))) == 21
    assert grid_size(make_space((7, 7, 1))) == 1
    space = make_space((1, 4, 1), (0, 200, 10))
    assert grid_size(space) == 84
    assert len(list(iter_grid(space))) == 84


def test_grid_size_overflow() -> None:
    """Test that a grid beyond a signed 64-bit count raises GridOverflowError."""
    space = make_space(*[(0, 99_999, 1)] * 10)
    with pytest.raises(GridOverflowError):
        grid_size(space)


def test_resnet_preset_grid(resnet_space: SearchSpace) -> None:
    """Test the dimensions of the ResNet50 preset grid."""
    assert [p.point_count for p in resnet_space.params] == [4, 56, 16, 21, 56]
    assert grid_size(resnet_space) == 4 * 56 * 16 * 21 * 56


def test_normalize_examples() -> None:
    """Test normalization of minimum, maximum and interior values."""
    inter = make_space((1, 4, 1))
    assert normalize(inter, Configuration.of([1]))[0] == 0.0
    assert normalize(inter, Configuration.of([4]))[0] == 1.0
    assert normalize(make_space((0, 200, 10)), Configuration.of([100]))[0] == 0.5


def test_normalize_degenerate_dimension() -> None:
    """Test that a single-point parameter normalizes to 0."""
    u = normalize(make_space((7, 7, 1), (0, 10, 1)), Configuration.of([7, 5]))
    assert u.tolist() == [0.0, 0.5]


def test_normalize_off_grid() -> None:
    """Test that unaligned or out-of-range values raise OffGridError."""
    space = make_space((0, 200, 10))
    with pytest.raises(OffGridError, match="not aligned"):
        normalize(space, Configuration.of([105]))
    with pytest.raises(OffGridError, match="outside"):
        normalize(space, Configuration.of([210]))


def test_normalize_dimension_mismatch() -> None:
    """Test that a configuration of the wrong length is rejected."""
    with pytest.raises(DimensionMismatchError):
        normalize(make_space((0, 10, 1)), Configuration.of([1, 2]))


def test_snap_examples() -> None:
    """Test exact hits, low midpoint ties and clamping."""
    assert snap(make_space((0, 200, 10)), [0.5]).values == (100,)
    assert snap(make_space((1, 4, 1)), [0.5]).values == (2,)
    assert snap(make_space((1, 56, 1)), [1.3]).values == (56,)
    assert snap(make_space((1, 56, 1)), [-0.2]).values == (1,)


def test_snap_midpoint_ties_low_with_steps() -> None:
    """Test that a midpoint between two stepped grid points resolves to the lower one."""
    space = make_space((0, 200, 10))
    assert snap(space, [0.025]).values == (0,)
    assert snap(space, [0.075]).values == (10,)
    assert snap(space, [0.0751]).values == (20,)


def test_snap_normalize_roundtrip() -> None:
    """Test that snap inverts normalize on every grid point."""
    space = make_space((1, 4, 1), (0, 200, 10), (64, 256, 64), (3, 3, 1))
    for config in iter_grid(space):
        assert snap(space, normalize(space, config)) == config


def test_random_config_degenerate_space() -> None:
    """Test that a space of single-point parameters always yields its unique point."""
    space = make_space((7, 7, 1), (3, 3, 2))
    rng = np.random.default_rng(0)
    assert random_config(space, rng).values == (7, 3)


def test_random_config_deterministic() -> None:
    """Test that fresh generators with the same seed draw the same configuration."""
    space = make_space((1, 56, 1), (0, 200, 10))
    first = random_config(space, np.random.default_rng(42))
    second = random_config(space, np.random.default_rng(42))
    assert first == second


def test_random_config_uniform() -> None:
    """Test that each value of [1,4,1] is drawn with frequency 0.25 +- 0.02."""
    space = make_space((1, 4, 1))
    rng = np.random.default_rng(123)
    draws = np.array([random_config(space, rng).values[0] for _ in range(10_000)])
    for value in range(1, 5):
        assert abs(np.mean(draws == value) - 0.25) <= 0.02


def test_iter_grid_lexicographic() -> None:
    """Test that the grid is enumerated with the last parameter varying fastest."""
    space = make_space((0, 1, 1), (0, 20, 10))
    values = [c.values for c in iter_grid(space)]
    assert values == [(0, 0), (0, 10), (0, 20), (1, 0), (1, 10), (1, 20)]
    assert values == sorted(values)


def test_config_from_index_matches_iteration_order() -> None:
    """Test that mixed-radix decoding agrees with grid enumeration."""
    space = make_space((1, 4, 1), (0, 200, 10), (64, 256, 64))
    for index, config in enumerate(iter_grid(space)):
        assert config_from_index(space, index) == config


def test_neighbors_inside_and_at_corner() -> None:
    """Test single-step neighbours in the interior and at a corner."""
    space = make_space((0, 4, 1), (0, 20, 10))
    assert set(neighbors(space, Configuration.of([2, 10]))) == {
        Configuration.of([1, 10]),
        Configuration.of([3, 10]),
        Configuration.of([2, 0]),
        Configuration.of([2, 20]),
    }
    assert set(neighbors(space, Configuration.of([0, 0]))) == {
        Configuration.of([1, 0]),
        Configuration.of([0, 10]),
    }


def test_is_valid() -> None:
    """Test grid validity checks."""
    space = make_space((0, 200, 10))
    assert is_valid(space, Configuration.of([30]))
    assert not is_valid(space, Configuration.of([35]))
    assert not is_valid(space, Configuration.of([30, 1]))


def test_unit_step() -> None:
    """Test one grid step in unit-cube coordinates."""
    step = unit_step(make_space((0, 200, 10), (5, 5, 1)))
    assert step.tolist() == pytest.approx([0.05, 1.0])
