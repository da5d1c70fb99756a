"""Study configuration: parsing, validation and shipped presets."""

import json
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List

from pydantic import ValidationError

from gridtune.errors import StudyParseError, StudyValidationError
from gridtune.harness import check_workload
from gridtune.space import Configuration, check_config, grid_size, validate_space
from gridtune.surfaces import check_bindings
from gridtune.types import NMSParams, SearchSpace, StudyConfig, TelemetryConfig, WorkloadSpec

DEFAULT_CONFIG: Dict[str, Any] = {
    "max_iterations": 50,
    "sweep_limit": 100_000,
    "candidate_budget": 2048,
    "output_dir": "results",
    "exporter_type": "none",
    "sampling_rate": 1.0,
    "metric_export_interval_ms": 60000,
    "batch_timeout_ms": 30000,
}

PRESET_DIR = "presets"


class ConfigValidator:
    """Semantic checks that go beyond the field types of the study models."""

    @staticmethod
    def validate_space(space: SearchSpace) -> None:
        """
        Validate a search space.

        Raises:
            SpaceError: If a parameter invariant does not hold or the grid overflows
        """
        validate_space(space)
        grid_size(space)

    @staticmethod
    def validate_workload(workload: WorkloadSpec, space: SearchSpace) -> None:
        """
        Validate a workload against the space it renders.

        Raises:
            HarnessError: If placeholders, bindings or the metric pattern are unusable
        """
        check_workload(workload, space)

    @staticmethod
    def validate_study(study: StudyConfig) -> None:
        """
        Validate a complete study.

        Raises:
            StudyValidationError: Naming the offending field
        """
        if (study.workload is None) == (study.synthetic is None):
            raise StudyValidationError(
                "workload", "exactly one of workload and synthetic must be present"
            )

        try:
            ConfigValidator.validate_space(study.space)
        except ValueError as e:
            raise StudyValidationError("space", str(e)) from e

        if study.workload is not None:
            try:
                ConfigValidator.validate_workload(study.workload, study.space)
            except ValueError as e:
                raise StudyValidationError("workload", str(e)) from e
        else:
            assert study.synthetic is not None
            try:
                check_bindings(study.synthetic, study.space)
                if study.synthetic.target is not None:
                    check_config(study.space, Configuration.of(study.synthetic.target))
            except ValueError as e:
                raise StudyValidationError("synthetic", str(e)) from e

        if isinstance(study.engine, NMSParams) and study.engine.start is not None:
            try:
                check_config(study.space, Configuration.of(study.engine.start))
            except ValueError as e:
                raise StudyValidationError("engine.start", str(e)) from e

        if study.telemetry is not None:
            try:
                ConfigValidator.validate_telemetry(study.telemetry)
            except ValueError as e:
                raise StudyValidationError("telemetry", str(e)) from e

    @staticmethod
    def validate_telemetry(config: TelemetryConfig) -> None:
        """
        Validate the telemetry configuration.

        Raises:
            ValueError: If the configuration is invalid
        """
        if not config.service_name:
            raise ValueError("service_name is required")

        if not 0.0 <= config.sampling_rate <= 1.0:
            raise ValueError("sampling_rate must be between 0.0 and 1.0")

        if config.exporter_type == "otlp-http" and not config.exporter_endpoint:
            raise ValueError("exporter_endpoint is required for otlp-http export")

        if config.exporter_auth:
            auth = config.exporter_auth
            if auth.type == "bearer" and not auth.token:
                raise ValueError("token is required for bearer auth")
            elif auth.type == "apiKey" and not auth.api_key:
                raise ValueError("api_key is required for apiKey auth")
            elif auth.type == "basic" and (not auth.username or not auth.password):
                raise ValueError("username and password are required for basic auth")


def _field_name(error: Dict[str, Any]) -> str:
    loc = [str(part) for part in error.get("loc", ())]
    return ".".join(loc) if loc else "study"


def parse_study_text(text: str) -> StudyConfig:
    """
    Parse and validate a study from JSON text.

    Raises:
        StudyParseError: If the text is not JSON, with line and column
        StudyValidationError: Naming the first offending field
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise StudyParseError(e.msg, line=e.lineno, column=e.colno) from e
    if not isinstance(data, dict):
        raise StudyValidationError("study", "top level must be a JSON object")

    try:
        study = StudyConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise StudyValidationError(_field_name(first), first["msg"]) from e

    ConfigValidator.validate_study(study)
    return study


def override_study(study: StudyConfig, updates: Dict[str, Any]) -> StudyConfig:
    """
    Replace top-level study fields and validate the result as a parsed study would be.

    Raises:
        StudyValidationError: Naming the first offending field
    """
    data = {**study.model_dump(mode="json", exclude_none=True), **updates}
    try:
        updated = StudyConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise StudyValidationError(_field_name(first), first["msg"]) from e
    ConfigValidator.validate_study(updated)
    return updated


def parse_study(path: Path) -> StudyConfig:
    """Parse a UTF-8 JSON study file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise StudyParseError(f"not UTF-8: {e}") from e
    return parse_study_text(text)


def dump_study(study: StudyConfig) -> str:
    """Serialize a study as JSON that :func:`parse_study_text` reads back to an equal value."""
    return study.model_dump_json(indent=2, exclude_none=True) + "\n"


def _preset_root() -> Any:
    return resources.files("gridtune").joinpath(PRESET_DIR)


def list_presets() -> List[str]:
    """Names of the shipped presets, sorted."""
    return sorted(
        entry.name[: -len(".json")]
        for entry in _preset_root().iterdir()
        if entry.name.endswith(".json")
    )


def load_preset(name: str) -> StudyConfig:
    """
    Load a shipped preset by name.

    Raises:
        StudyError: If no preset has that name or it fails validation
    """
    resource = _preset_root().joinpath(f"{name}.json")
    if not resource.is_file():
        raise StudyValidationError("preset", f"unknown preset {name!r}; known: {list_presets()}")
    return parse_study_text(resource.read_text(encoding="utf-8"))


def resolve_study(config: str) -> StudyConfig:
    """Parse ``config`` as a file when it exists, otherwise as a preset name."""
    path = Path(config)
    if path.is_file():
        return parse_study(path)
    return load_preset(config)
