"""
Gaussian-process regression surrogate.

Exact GP regression with a squared-exponential kernel with one length scale per
dimension. Training standardizes targets to zero mean and unit standard
deviation, factorizes ``K + (noise_var + jitter) I`` with a Cholesky
decomposition, and keeps ``alpha = (K + (noise_var + jitter) I)^-1 y``.
Inputs are expected in the unit cube produced by :func:`gridtune.space.normalize`.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from gridtune.errors import (
    AllFitsFailedError,
    DegenerateInputError,
    DimensionMismatchError,
    InvalidHyperError,
    NotPositiveDefiniteError,
)

SIGNAL_VAR_BOUNDS = (1e-6, 1e6)
LENGTH_SCALE_BOUNDS = (1e-3, 1e3)
NOISE_VAR_BOUNDS = (0.0, 1e2)

# Jitter is 1e-9 * signal_var, escalated x10 up to 1e-3 * signal_var.
JITTER_START = 1e-9
JITTER_STEPS = 7

DEFAULT_LENGTH_SCALES = (0.1, 0.3, 1.0)
DEFAULT_NOISE_VARS = (1e-6, 1e-2)


@dataclass(frozen=True)
class GPHyper:
    """Kernel hyperparameters: signal variance, per-dimension length scales, noise variance."""

    signal_var: float
    length_scales: Tuple[float, ...]
    noise_var: float = 0.0

    def validate(self, d: int) -> None:
        """
        Check bounds and dimension.

        Raises:
            DimensionMismatchError: If there is not one length scale per dimension
            InvalidHyperError: If a component is non-finite or out of bounds
        """
        if len(self.length_scales) != d:
            raise DimensionMismatchError(
                f"{len(self.length_scales)} length scales for {d} dimensions"
            )
        values = (self.signal_var, self.noise_var, *self.length_scales)
        if not all(math.isfinite(v) for v in values):
            raise InvalidHyperError(f"non-finite hyperparameter in {self}")
        if not SIGNAL_VAR_BOUNDS[0] <= self.signal_var <= SIGNAL_VAR_BOUNDS[1]:
            raise InvalidHyperError(f"signal_var {self.signal_var} out of bounds")
        if not NOISE_VAR_BOUNDS[0] <= self.noise_var <= NOISE_VAR_BOUNDS[1]:
            raise InvalidHyperError(f"noise_var {self.noise_var} out of bounds")
        for scale in self.length_scales:
            if not LENGTH_SCALE_BOUNDS[0] <= scale <= LENGTH_SCALE_BOUNDS[1]:
                raise InvalidHyperError(f"length scale {scale} out of bounds")


@dataclass(frozen=True)
class GPModel:
    """
    A fitted GP. Immutable; arrays are read-only.

    Attributes:
        train_u: (n, d) normalized training inputs
        train_y_raw: (n,) metric values as measured
        train_y: (n,) standardized targets
        y_mean: Target mean used for standardization
        y_std: Target standard deviation (1.0 when the targets are constant)
        hyper: Kernel hyperparameters
        chol: Lower Cholesky factor of K + (noise_var + jitter) I
        alpha: Solution of (K + (noise_var + jitter) I) alpha = train_y
        jitter: Diagonal jitter that made the factorization succeed
    """

    train_u: np.ndarray
    train_y_raw: np.ndarray
    train_y: np.ndarray
    y_mean: float
    y_std: float
    hyper: GPHyper
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float

    @property
    def n(self) -> int:
        return int(self.train_u.shape[0])


def default_hyper_grid(d: int) -> List[GPHyper]:
    """Shared length scales {0.1, 0.3, 1.0} x noise {1e-6, 1e-2}, signal variance 1."""
    return [
        GPHyper(signal_var=1.0, length_scales=(scale,) * d, noise_var=noise)
        for scale in DEFAULT_LENGTH_SCALES
        for noise in DEFAULT_NOISE_VARS
    ]


def kernel(
    u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray, hyper: GPHyper
) -> float:
    """
    Squared-exponential covariance of two points.

    Returns signal_var * exp(-0.5 * sum_i (u_i - v_i)^2 / l_i^2).

    Raises:
        DimensionMismatchError: If u, v and the length scales disagree in size
    """
    a = np.asarray(u, dtype=float)
    b = np.asarray(v, dtype=float)
    if a.shape != b.shape or a.shape != (len(hyper.length_scales),):
        raise DimensionMismatchError(
            f"kernel inputs {a.shape} and {b.shape} for {len(hyper.length_scales)} length scales"
        )
    scaled = (a - b) / np.asarray(hyper.length_scales)
    return float(hyper.signal_var * np.exp(-0.5 * np.dot(scaled, scaled)))


def kernel_matrix(a: np.ndarray, b: np.ndarray, hyper: GPHyper) -> np.ndarray:
    """Covariance matrix between the rows of ``a`` (n, d) and ``b`` (m, d)."""
    scales = np.asarray(hyper.length_scales, dtype=float)
    if a.shape[1] != scales.size or b.shape[1] != scales.size:
        raise DimensionMismatchError(
            f"inputs with {a.shape[1]} and {b.shape[1]} columns for {scales.size} length scales"
        )
    sq = cdist(a / scales, b / scales, "sqeuclidean")
    return hyper.signal_var * np.exp(-0.5 * sq)


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def fit(train_u: np.ndarray, train_y_raw: np.ndarray, hyper: GPHyper) -> GPModel:
    """
    Train a GP in closed form.

    Args:
        train_u: (n, d) distinct normalized inputs, n >= 1
        train_y_raw: (n,) finite metric values
        hyper: Kernel hyperparameters

    Returns:
        The fitted model

    Raises:
        DegenerateInputError: If there are no rows, duplicate rows or non-finite targets
        NotPositiveDefiniteError: If factorization fails at the largest jitter
    """
    u = np.array(train_u, dtype=float, ndmin=2)
    y = np.array(train_y_raw, dtype=float).ravel()
    n = u.shape[0]
    if n == 0 or y.size != n:
        raise DegenerateInputError(f"{n} inputs for {y.size} targets")
    if not np.all(np.isfinite(y)):
        raise DegenerateInputError("training targets must be finite")
    if np.unique(u, axis=0).shape[0] != n:
        raise DegenerateInputError("training inputs contain duplicate rows")
    hyper.validate(u.shape[1])

    y_mean = float(np.mean(y))
    y_std = float(np.std(y))
    if not y_std > 0:
        y_std = 1.0
    y_standard = (y - y_mean) / y_std

    k = kernel_matrix(u, u, hyper)
    identity = np.eye(n)
    for attempt in range(JITTER_STEPS):
        jitter = JITTER_START * 10.0**attempt * hyper.signal_var
        try:
            chol = cholesky(k + (hyper.noise_var + jitter) * identity, lower=True)
        except LinAlgError:
            continue
        if np.all(np.diag(chol) > 0):
            break
    else:
        raise NotPositiveDefiniteError(
            f"covariance not positive definite at jitter {jitter:.1e} (n={n})"
        )

    alpha = cho_solve((chol, True), y_standard)
    return GPModel(
        train_u=_readonly(u),
        train_y_raw=_readonly(y),
        train_y=_readonly(y_standard),
        y_mean=y_mean,
        y_std=y_std,
        hyper=hyper,
        chol=_readonly(chol),
        alpha=_readonly(alpha),
        jitter=jitter,
    )


def predict_many(model: GPModel, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Posterior mean and variance, in metric units, at the rows of ``points``.

    Variances are clamped below at zero.
    """
    points = np.array(points, dtype=float, ndmin=2)
    cross = kernel_matrix(points, model.train_u, model.hyper)
    mean = cross @ model.alpha * model.y_std + model.y_mean
    v = solve_triangular(model.chol, cross.T, lower=True)
    variance = model.hyper.signal_var - np.sum(v * v, axis=0)
    return mean, np.maximum(variance, 0.0) * model.y_std**2


def predict(model: GPModel, u: Sequence[float] | np.ndarray) -> Tuple[float, float]:
    """Posterior (mean, variance) at one point of the unit cube."""
    point = np.asarray(u, dtype=float)
    if point.shape != (model.train_u.shape[1],):
        raise DimensionMismatchError(
            f"point has shape {point.shape}, model has {model.train_u.shape[1]} dimensions"
        )
    mean, variance = predict_many(model, point[np.newaxis, :])
    return float(mean[0]), float(variance[0])


def log_marginal_likelihood(model: GPModel) -> float:
    """Log evidence of the standardized targets under the fitted model."""
    return float(
        -0.5 * np.dot(model.train_y, model.alpha)
        - np.sum(np.log(np.diag(model.chol)))
        - 0.5 * model.n * math.log(2.0 * math.pi)
    )


def select_hypers(
    train_u: np.ndarray, train_y: np.ndarray, grid: Sequence[GPHyper]
) -> GPHyper:
    """
    Pick the grid element with the highest log marginal likelihood.

    Earlier grid entries win ties; candidates that cannot be factorized are skipped.

    Raises:
        AllFitsFailedError: If no candidate could be fitted
    """
    if not grid:
        raise ValueError("hyperparameter grid is empty")

    best: GPHyper | None = None
    best_lml = -math.inf
    for hyper in grid:
        try:
            model = fit(train_u, train_y, hyper)
        except NotPositiveDefiniteError:
            continue
        lml = log_marginal_likelihood(model)
        if math.isfinite(lml) and (best is None or lml > best_lml):
            best, best_lml = hyper, lml

    if best is None:
        raise AllFitsFailedError(f"none of {len(grid)} hyperparameter candidates could be fitted")
    return best
