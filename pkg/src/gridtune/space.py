"""Search-space grid operations.

Every engine works in the unit cube [0, 1]^d and maps points back to the integer
grid with :func:`snap`. :func:`normalize` is its inverse on grid points.
"""

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Sequence

import numpy as np

from gridtune.errors import (
    DimensionMismatchError,
    DuplicateNameError,
    EmptySpaceError,
    GridOverflowError,
    InvalidRangeError,
    MisalignedStepError,
    OffGridError,
)
from gridtune.types import SearchSpace

INT64_MAX = 2**63 - 1

# Snapping rounds the fractional step index to this many decimals first so that
# midpoints produced by float arithmetic tie exactly.
_TIE_DECIMALS = 9


@dataclass(frozen=True, order=True)
class Configuration:
    """One grid point, values in parameter declaration order."""

    values: tuple[int, ...]

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def as_dict(self, space: SearchSpace) -> Dict[str, int]:
        """Map parameter names to values."""
        return dict(zip(space.names, self.values))

    @classmethod
    def of(cls, values: Iterable[int]) -> "Configuration":
        return cls(tuple(int(v) for v in values))


def validate_space(space: SearchSpace) -> None:
    """
    Check every parameter invariant of a search space.

    Args:
        space: The space to validate

    Raises:
        EmptySpaceError: If the space has no parameters
        InvalidRangeError: If a parameter has min > max
        MisalignedStepError: If (max - min) is not divisible by step
        DuplicateNameError: If two parameters share a name
    """
    if not space.params:
        raise EmptySpaceError("search space must declare at least one parameter")

    seen: set[str] = set()
    for param in space.params:
        if param.min > param.max:
            raise InvalidRangeError(f"{param.name}: min {param.min} > max {param.max}")
        if param.step <= 0:
            raise MisalignedStepError(f"{param.name}: step must be positive")
        if (param.max - param.min) % param.step != 0:
            raise MisalignedStepError(
                f"{param.name}: range {param.max - param.min} is not a multiple of step "
                f"{param.step}"
            )
        if param.name in seen:
            raise DuplicateNameError(f"duplicate parameter name: {param.name}")
        seen.add(param.name)


def grid_size(space: SearchSpace) -> int:
    """
    Number of points in the grid.

    Raises:
        GridOverflowError: If the count exceeds a signed 64-bit integer
    """
    size = 1
    for param in space.params:
        size *= param.point_count
        if size > INT64_MAX:
            raise GridOverflowError(f"grid size exceeds {INT64_MAX}")
    return size


def _bounds(space: SearchSpace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mins = np.array([p.min for p in space.params], dtype=float)
    maxs = np.array([p.max for p in space.params], dtype=float)
    steps = np.array([p.step for p in space.params], dtype=float)
    return mins, maxs, steps


def is_valid(space: SearchSpace, config: Configuration) -> bool:
    """Whether a configuration is in range and grid-aligned."""
    if len(config) != space.d:
        return False
    return all(
        p.min <= v <= p.max and (v - p.min) % p.step == 0
        for p, v in zip(space.params, config.values)
    )


def check_config(space: SearchSpace, config: Configuration) -> None:
    """Raise if a configuration does not lie on the grid."""
    if len(config) != space.d:
        raise DimensionMismatchError(
            f"configuration has {len(config)} values, space has {space.d} parameters"
        )
    for param, value in zip(space.params, config.values):
        if not param.min <= value <= param.max:
            raise OffGridError(f"{param.name}={value} outside [{param.min}, {param.max}]")
        if (value - param.min) % param.step != 0:
            raise OffGridError(f"{param.name}={value} not aligned to step {param.step}")


def normalize(space: SearchSpace, config: Configuration) -> np.ndarray:
    """
    Map a grid point to the unit cube.

    Degenerate parameters (min == max) map to 0.

    Raises:
        OffGridError: If the configuration is not a grid point
    """
    check_config(space, config)
    mins, maxs, _ = _bounds(space)
    values = np.asarray(config.values, dtype=float)
    spans = maxs - mins
    return np.divide(values - mins, spans, out=np.zeros(space.d), where=spans > 0)


def normalize_many(space: SearchSpace, values: np.ndarray) -> np.ndarray:
    """Vectorized :func:`normalize` for an (n, d) array of grid values; no grid check."""
    mins, maxs, _ = _bounds(space)
    spans = maxs - mins
    values = np.asarray(values, dtype=float)
    return np.divide(
        values - mins, spans, out=np.zeros_like(values, dtype=float), where=spans > 0
    )


def snap(space: SearchSpace, u: Sequence[float] | np.ndarray) -> Configuration:
    """
    Map a point of the unit cube to the nearest grid point.

    Components are clamped to [0, 1] first. Exact midpoints between two grid
    points resolve to the lower one.

    Raises:
        DimensionMismatchError: If u does not have one component per parameter
    """
    point = np.asarray(u, dtype=float)
    if point.shape != (space.d,):
        raise DimensionMismatchError(f"point has shape {point.shape}, expected ({space.d},)")
    point = np.clip(point, 0.0, 1.0)
    mins, maxs, steps = _bounds(space)
    fractional = np.round(point * (maxs - mins) / steps, _TIE_DECIMALS)
    index = np.ceil(fractional - 0.5)
    counts = np.array([p.point_count for p in space.params], dtype=float)
    index = np.clip(index, 0, counts - 1)
    return Configuration.of(int(p.min + int(k) * p.step) for p, k in zip(space.params, index))


def random_config(space: SearchSpace, rng: np.random.Generator) -> Configuration:
    """Draw each parameter independently and uniformly over its grid points."""
    return Configuration.of(
        p.min + int(rng.integers(0, p.point_count)) * p.step for p in space.params
    )


def random_values(space: SearchSpace, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` uniform grid points as an integer (count, d) array."""
    counts = np.array([p.point_count for p in space.params], dtype=np.int64)
    mins = np.array([p.min for p in space.params], dtype=np.int64)
    steps = np.array([p.step for p in space.params], dtype=np.int64)
    index = rng.integers(0, counts, size=(count, space.d))
    return mins + index * steps


def iter_grid(space: SearchSpace) -> Iterator[Configuration]:
    """Enumerate the grid in lexicographic order of value vectors."""
    axes = [range(p.min, p.max + 1, p.step) for p in space.params]
    for values in itertools.product(*axes):
        yield Configuration(tuple(values))


def config_from_index(space: SearchSpace, index: int) -> Configuration:
    """Decode a lexicographic grid index (last parameter varies fastest)."""
    values: List[int] = []
    for param in reversed(space.params):
        index, offset = divmod(index, param.point_count)
        values.append(param.min + offset * param.step)
    return Configuration(tuple(reversed(values)))


def neighbors(space: SearchSpace, config: Configuration) -> List[Configuration]:
    """Grid points one step away along exactly one parameter."""
    result: List[Configuration] = []
    for i, param in enumerate(space.params):
        for delta in (-param.step, param.step):
            value = config.values[i] + delta
            if param.min <= value <= param.max:
                values = list(config.values)
                values[i] = value
                result.append(Configuration(tuple(values)))
    return result


def unit_step(space: SearchSpace) -> np.ndarray:
    """One grid step per dimension, measured in the unit cube (1.0 for degenerate ranges)."""
    mins, maxs, steps = _bounds(space)
    spans = maxs - mins
    return np.divide(steps, spans, out=np.ones(space.d), where=spans > 0)
