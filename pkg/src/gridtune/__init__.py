"""gridtune - gradient-free autotuning of workloads over integer parameter grids."""

__version__ = "0.1.0"

from gridtune.analysis import build_report, compare, coverage, exhaustive_sweep  # noqa: E402
from gridtune.bayes import BayesianEngine  # noqa: E402
from gridtune.config import ConfigValidator, load_preset, parse_study  # noqa: E402
from gridtune.engine import Engine, RandomEngine  # noqa: E402
from gridtune.errors import GridTuneError  # noqa: E402
from gridtune.genetic import GeneticEngine  # noqa: E402
from gridtune.history import Evaluation, History  # noqa: E402
from gridtune.neldermead import NelderMeadEngine  # noqa: E402
from gridtune.session import TuningSession, create_engine  # noqa: E402
from gridtune.space import Configuration  # noqa: E402
from gridtune.telemetry import TelemetryManager  # noqa: E402
from gridtune.types import ParameterSpec, SearchSpace, StudyConfig, TelemetryConfig  # noqa: E402

__all__ = [
    "BayesianEngine",
    "Configuration",
    "ConfigValidator",
    "Engine",
    "Evaluation",
    "GeneticEngine",
    "GridTuneError",
    "History",
    "NelderMeadEngine",
    "ParameterSpec",
    "RandomEngine",
    "SearchSpace",
    "StudyConfig",
    "TelemetryConfig",
    "TelemetryManager",
    "TuningSession",
    "build_report",
    "compare",
    "coverage",
    "create_engine",
    "exhaustive_sweep",
    "load_preset",
    "parse_study",
]
