"""Type definitions for gridtune."""

from enum import Enum
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field


class Binding(str, Enum):
    """How a parameter value reaches the workload."""

    ENV_VAR = "env-var"
    COMMAND_ARG = "command-arg"
    BOTH = "both"


class Aggregation(str, Enum):
    """Reduction applied to repeated measurements of one configuration."""

    MEDIAN = "median"
    MEAN = "mean"
    MAX = "max"


class EvalStatus(str, Enum):
    """Outcome of one evaluation."""

    OK = "ok"
    FAILED = "failed"
    TIMEOUT = "timeout"


class SurfaceName(str, Enum):
    """Deterministic synthetic objective surfaces."""

    RESNET_LIKE = "resnet-like"
    QUADRATIC = "quadratic"
    SEPARABLE_SUM = "separable-sum"
    PLATEAU = "plateau"


class ParameterSpec(BaseModel):
    """One tunable integer parameter: the grid min, min+step, ..., max."""

    model_config = ConfigDict(extra="forbid")

    name: str
    min: int
    max: int
    step: int = Field(default=1, gt=0)
    binding: Binding = Binding.COMMAND_ARG

    @property
    def point_count(self) -> int:
        """Number of grid points along this parameter."""
        return (self.max - self.min) // self.step + 1

    @property
    def span(self) -> int:
        return self.max - self.min


class SearchSpace(BaseModel):
    """Ordered list of parameters spanning the tunable grid."""

    model_config = ConfigDict(extra="forbid")

    params: List[ParameterSpec]

    @property
    def d(self) -> int:
        return len(self.params)

    @property
    def names(self) -> List[str]:
        return [p.name for p in self.params]

    def index_of(self, name: str) -> int:
        """Position of a parameter by name."""
        for i, param in enumerate(self.params):
            if param.name == name:
                return i
        raise KeyError(name)


class WorkloadSpec(BaseModel):
    """A subprocess workload whose output reports the metric to maximize."""

    model_config = ConfigDict(extra="forbid")

    command_template: List[str]
    env_template: Dict[str, str] = Field(default_factory=dict)
    metric_pattern: str
    repeats: int = Field(default=1, ge=1)
    aggregation: Aggregation = Aggregation.MEDIAN
    timeout_s: float = Field(default=600.0, gt=0)
    working_dir: Path = Path(".")
    inherit_env: bool = True


class SyntheticSurface(BaseModel):
    """A deterministic stand-in for a real workload."""

    model_config = ConfigDict(extra="forbid")

    name: SurfaceName
    noise_std: float = Field(default=0.0, ge=0)
    noise_seed: int = 0
    repeats: int = Field(default=1, ge=1)
    aggregation: Aggregation = Aggregation.MEDIAN
    target: Optional[List[int]] = None


class BOParams(BaseModel):
    """Bayesian optimization engine parameters."""

    model_config = ConfigDict(extra="forbid")

    name: Literal["bo"] = "bo"
    alpha: float = Field(default=2.0, ge=0)
    epsilon: float = Field(default=0.0, ge=0)
    init_budget: Optional[int] = Field(default=None, ge=1)
    candidate_budget: int = Field(default=2048, ge=1)
    refit_period: int = Field(default=5, ge=1)


class GAParams(BaseModel):
    """Genetic engine parameters."""

    model_config = ConfigDict(extra="forbid")

    name: Literal["ga"] = "ga"
    mutation_rate: float = Field(default=0.1, ge=0, le=1)
    seed_pool: Optional[int] = Field(default=None, ge=2)
    max_retries: int = Field(default=8, ge=1)


class NMSParams(BaseModel):
    """Nelder-Mead simplex engine parameters."""

    model_config = ConfigDict(extra="forbid")

    name: Literal["nms"] = "nms"
    reflect: float = Field(default=1.0, gt=0)
    expand: float = Field(default=2.0, gt=1)
    contract: float = Field(default=0.5, gt=0, lt=1)
    shrink: float = Field(default=0.5, gt=0, lt=1)
    initial_step: float = Field(default=0.25, gt=0, le=1)
    restart: bool = True
    cache_hit_factor: int = Field(default=20, ge=1)
    start: Optional[List[int]] = None


class RandomParams(BaseModel):
    """Uniform random baseline."""

    model_config = ConfigDict(extra="forbid")

    name: Literal["random"] = "random"


class ExhaustiveParams(BaseModel):
    """Full grid sweep."""

    model_config = ConfigDict(extra="forbid")

    name: Literal["exhaustive"] = "exhaustive"


EngineParams = Annotated[
    Union[BOParams, GAParams, NMSParams, RandomParams, ExhaustiveParams],
    Field(discriminator="name"),
]


class AuthConfig(BaseModel):
    """Authentication configuration for the OTLP exporter."""

    model_config = ConfigDict(extra="forbid")

    type: Literal["bearer", "apiKey", "basic"]
    token: Optional[str] = None
    api_key: Optional[str] = None
    username: Optional[str] = None
    password: Optional[str] = None


class TelemetryConfig(BaseModel):
    """Configuration for tuning-session traces and metrics."""

    model_config = ConfigDict(extra="forbid")

    service_name: str = "gridtune"
    exporter_type: Literal["none", "console", "otlp-http"] = "none"
    exporter_endpoint: Optional[str] = None
    exporter_auth: Optional[AuthConfig] = None
    sampling_rate: float = 1.0
    metric_export_interval_ms: int = 60000
    batch_timeout_ms: int = 30000


class StudyConfig(BaseModel):
    """A complete tuning study: what to tune, how to measure it, and with which engine."""

    model_config = ConfigDict(extra="forbid")

    space: SearchSpace
    workload: Optional[WorkloadSpec] = None
    synthetic: Optional[SyntheticSurface] = None
    engine: EngineParams
    max_iterations: int = Field(default=50, ge=1)
    seed: int = 0
    output_dir: Path = Path("results")
    telemetry: Optional[TelemetryConfig] = None


class CoverageRow(BaseModel):
    """Sampled versus tunable range of one parameter."""

    param_name: str
    sampled_min: int
    sampled_max: int
    tunable_min: int
    tunable_max: int
    span_pct: int
    point_pct: int


class SensitivityRow(BaseModel):
    """Main effect of one parameter on the metric."""

    param_name: str
    levels: int
    effect: float
    effect_pct: float


class ComparisonRow(BaseModel):
    """One engine's line in a comparison table."""

    engine: str
    best_value: float
    iterations_to_best: int
    mean_span_pct: float
    evaluations: int
    wall_time_s: float


class TuningReport(BaseModel):
    """Summary of a finished tuning session."""

    engine: str
    seed: int
    best_config: List[int]
    best_value: float
    trajectory: List[Tuple[int, float]]
    coverage: List[CoverageRow]
    total_evaluations: int
    total_wall_time_s: float
