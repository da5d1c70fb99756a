"""Deterministic synthetic objective surfaces used in place of real workloads."""

import hashlib
from typing import List

import numpy as np

from gridtune.errors import DimensionMismatchError, UnboundParameterError
from gridtune.space import Configuration, normalize, snap
from gridtune.types import SearchSpace, SurfaceName, SyntheticSurface

INTER_OP = "inter_op_parallelism_threads"
INTRA_OP = "intra_op_parallelism_threads"
BATCH_SIZE = "batch_size"
KMP_BLOCKTIME = "KMP_BLOCKTIME"
OMP_NUM_THREADS = "OMP_NUM_THREADS"

THREADING_PARAMS = (INTER_OP, INTRA_OP, BATCH_SIZE, KMP_BLOCKTIME, OMP_NUM_THREADS)

PLATEAU_BINS = 4


def resnet_like(inter: int, omp: int, kmp: int, batch: int) -> float:
    """
    Noise-free throughput model shaped after an INT8 ResNet50 sweep.

    Rises with OMP threads, falls with block time, barely moves with batch size
    and inter-op threads, and ignores intra-op threads entirely.
    """
    return (
        100.0
        * (omp / (omp + 14.0))
        * (1.0 - kmp / 800.0)
        * (1.0 + batch / 8192.0)
        * (1.0 - 0.01 * (inter - 1))
    )


def default_target(space: SearchSpace) -> Configuration:
    """Grid point nearest the centre of the space."""
    return snap(space, np.full(space.d, 0.5))


def surface_target(surface: SyntheticSurface, space: SearchSpace) -> Configuration:
    if surface.target is None:
        return default_target(space)
    if len(surface.target) != space.d:
        raise DimensionMismatchError(
            f"target has {len(surface.target)} values, space has {space.d} parameters"
        )
    return Configuration.of(surface.target)


def check_bindings(surface: SyntheticSurface, space: SearchSpace) -> None:
    """
    Raise if a surface cannot be evaluated on a space.

    Raises:
        UnboundParameterError: If resnet-like is used without the five threading parameters
    """
    if surface.name == SurfaceName.RESNET_LIKE:
        missing = [name for name in THREADING_PARAMS if name not in space.names]
        if missing:
            raise UnboundParameterError(f"resnet-like surface needs parameters {missing}")
    elif surface.name in (SurfaceName.QUADRATIC, SurfaceName.PLATEAU):
        surface_target(surface, space)


def noise(surface: SyntheticSurface, config: Configuration, repeat_index: int) -> float:
    """Gaussian noise seeded by (noise_seed, configuration, repeat index)."""
    if surface.noise_std == 0:
        return 0.0
    key = f"{surface.noise_seed}|{','.join(map(str, config.values))}|{repeat_index}"
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    return float(surface.noise_std * rng.standard_normal())


def _plateau_cells(space: SearchSpace, config: Configuration) -> List[int]:
    u = normalize(space, config)
    return [min(int(x * PLATEAU_BINS), PLATEAU_BINS - 1) for x in u]


def synthetic_eval(
    surface: SyntheticSurface, space: SearchSpace, config: Configuration, repeat_index: int = 0
) -> float:
    """
    Evaluate a synthetic surface.

    - resnet-like: :func:`resnet_like` over the five threading parameters
    - quadratic: -sum (v_i - t_i)^2 for the target t
    - separable-sum: sum v_i
    - plateau: -sum |cell_i(v) - cell_i(t)| over a 4-bin partition of each axis,
      a single strict maximum cell containing the target

    Raises:
        UnboundParameterError: If resnet-like is used on a space without its parameters
    """
    if surface.name == SurfaceName.RESNET_LIKE:
        check_bindings(surface, space)
        values = config.as_dict(space)
        base = resnet_like(
            inter=values[INTER_OP],
            omp=values[OMP_NUM_THREADS],
            kmp=values[KMP_BLOCKTIME],
            batch=values[BATCH_SIZE],
        )
    elif surface.name == SurfaceName.QUADRATIC:
        target = surface_target(surface, space)
        base = -float(sum((v - t) ** 2 for v, t in zip(config.values, target.values)))
    elif surface.name == SurfaceName.SEPARABLE_SUM:
        base = float(sum(config.values))
    else:
        target = surface_target(surface, space)
        cells = _plateau_cells(space, config)
        target_cells = _plateau_cells(space, target)
        base = -float(sum(abs(a - b) for a, b in zip(cells, target_cells)))
    return base + noise(surface, config, repeat_index)
