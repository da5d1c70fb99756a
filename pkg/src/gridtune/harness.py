"""Evaluation harness: render configurations into commands, run them, parse the metric."""

import logging
import os
import re
import signal
import subprocess
import time
from dataclasses import dataclass
from typing import Dict, List, Pattern, Protocol, Sequence, Set, Tuple

import numpy as np

from gridtune.errors import (
    InvalidPatternError,
    MissingBindingError,
    SpawnError,
    UnknownPlaceholderError,
)
from gridtune.history import Evaluation, History
from gridtune.space import Configuration, check_config
from gridtune.surfaces import check_bindings, synthetic_eval
from gridtune.types import (
    Aggregation,
    Binding,
    EvalStatus,
    SearchSpace,
    SyntheticSurface,
    WorkloadSpec,
)

logger = logging.getLogger(__name__)

PLACEHOLDER = re.compile(r"\{([^{}]*)\}")

# Characters of workload output kept in failure log messages.
OUTPUT_TAIL = 400

# Seconds to wait for the pipe to drain after the process group is killed.
KILL_GRACE_S = 2.0


class Evaluator(Protocol):
    """Measures one configuration."""

    def __call__(self, config: Configuration, iteration: int) -> Evaluation: ...


def placeholders(template: str) -> List[str]:
    return PLACEHOLDER.findall(template)


def compile_metric_pattern(pattern: str) -> Pattern[str]:
    """
    Compile a metric pattern and check it has exactly one capture group.

    Raises:
        InvalidPatternError: If the pattern does not compile or has another group count
    """
    try:
        compiled = re.compile(pattern)
    except re.error as e:
        raise InvalidPatternError(f"metric_pattern does not compile: {e}") from e
    if compiled.groups != 1:
        raise InvalidPatternError(
            f"metric_pattern must have exactly one capture group, has {compiled.groups}"
        )
    return compiled


def check_workload(workload: WorkloadSpec, space: SearchSpace) -> None:
    """
    Validate a workload against a search space.

    Raises:
        UnknownPlaceholderError: If a template references an undeclared parameter
        MissingBindingError: If a parameter is missing where its binding requires it
        InvalidPatternError: If the metric pattern is unusable
    """
    compile_metric_pattern(workload.metric_pattern)
    declared = set(space.names)

    in_command: Set[str] = set()
    for arg in workload.command_template:
        in_command.update(placeholders(arg))
    in_env: Set[str] = set()
    for value in workload.env_template.values():
        in_env.update(placeholders(value))

    unknown = sorted((in_command | in_env) - declared)
    if unknown:
        raise UnknownPlaceholderError(f"templates reference undeclared parameters {unknown}")

    for param in space.params:
        if param.binding in (Binding.ENV_VAR, Binding.BOTH) and param.name not in in_env:
            raise MissingBindingError(f"{param.name} is bound to env-var but not in env_template")
        if param.binding in (Binding.COMMAND_ARG, Binding.BOTH) and param.name not in in_command:
            raise MissingBindingError(
                f"{param.name} is bound to command-arg but not in command_template"
            )


def render(
    workload: WorkloadSpec, space: SearchSpace, config: Configuration
) -> Tuple[List[str], Dict[str, str]]:
    """
    Substitute configuration values into the command and environment templates.

    Returns:
        (argv, env) with every {param_name} replaced by its decimal value
    """
    check_workload(workload, space)
    check_config(space, config)
    values = {name: str(value) for name, value in config.as_dict(space).items()}

    def substitute(template: str) -> str:
        return PLACEHOLDER.sub(lambda m: values[m.group(1)], template)

    argv = [substitute(arg) for arg in workload.command_template]
    env = {key: substitute(value) for key, value in workload.env_template.items()}
    return argv, env


def aggregate(values: Sequence[float], aggregation: Aggregation) -> float:
    """Reduce repeated measurements to one value."""
    if aggregation == Aggregation.MEDIAN:
        return float(np.median(values))
    if aggregation == Aggregation.MEAN:
        return float(np.mean(values))
    return float(np.max(values))


def last_metric(pattern: Pattern[str], output: str) -> float | None:
    """Finite value of the capture group of the last match in ``output``."""
    last = None
    for match in pattern.finditer(output):
        last = match
    if last is None:
        return None
    try:
        value = float(last.group(1))
    except (TypeError, ValueError):
        return None
    return value if np.isfinite(value) else None


@dataclass(frozen=True)
class RunOutput:
    returncode: int | None
    output: str
    timed_out: bool


def _kill_group(process: subprocess.Popen) -> None:
    try:
        if hasattr(os, "killpg"):
            os.killpg(process.pid, signal.SIGKILL)
        else:
            process.kill()
    except ProcessLookupError:
        pass


def run_once(argv: List[str], env: Dict[str, str], cwd: str, timeout_s: float) -> RunOutput:
    """
    Run one workload process with stdout and stderr combined.

    The process gets its own session so the whole group is killed on timeout.

    Raises:
        SpawnError: If the process cannot be started
    """
    try:
        process = subprocess.Popen(
            argv,
            cwd=cwd,
            env=env,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            start_new_session=True,
        )
    except OSError as e:
        raise SpawnError(f"cannot start {argv[0]!r}: {e}") from e

    try:
        raw, _ = process.communicate(timeout=timeout_s)
        timed_out = False
    except subprocess.TimeoutExpired:
        _kill_group(process)
        try:
            raw, _ = process.communicate(timeout=KILL_GRACE_S)
        except subprocess.TimeoutExpired as e:
            # a detached grandchild still holds the pipe
            raw = e.output or b""
            if process.stdout is not None:
                process.stdout.close()
            process.wait()
        timed_out = True
    return RunOutput(process.returncode, raw.decode("utf-8", errors="replace"), timed_out)


def run_evaluation(
    workload: WorkloadSpec, space: SearchSpace, config: Configuration, iteration: int
) -> Evaluation:
    """
    Measure a configuration by running the workload ``repeats`` times.

    The status is ok only when every repeat exits with 0 and prints a metric
    before the timeout; the first failing repeat ends the evaluation.
    """
    argv, env = render(workload, space, config)
    child_env = {**os.environ, **env} if workload.inherit_env else env
    pattern = compile_metric_pattern(workload.metric_pattern)

    repeats: List[float] = []
    status = EvalStatus.OK
    started = time.monotonic()
    for repeat in range(workload.repeats):
        run = run_once(argv, child_env, str(workload.working_dir), workload.timeout_s)
        if run.timed_out:
            status = EvalStatus.TIMEOUT
            logger.warning("%s timed out after %.1fs", config.values, workload.timeout_s)
            break
        if run.returncode != 0:
            status = EvalStatus.FAILED
            logger.warning(
                "%s exited with %s: %s", config.values, run.returncode, run.output[-OUTPUT_TAIL:]
            )
            break
        metric = last_metric(pattern, run.output)
        if metric is None:
            status = EvalStatus.FAILED
            logger.warning("%s printed no metric: %s", config.values, run.output[-OUTPUT_TAIL:])
            break
        repeats.append(metric)
        logger.debug("%s repeat %d: %s", config.values, repeat, metric)

    wall_time = time.monotonic() - started
    value = aggregate(repeats, workload.aggregation) if status == EvalStatus.OK else None
    return Evaluation(
        config=config,
        value=value,
        repeats=tuple(repeats),
        wall_time_s=wall_time,
        status=status,
        iteration=iteration,
    )


class SubprocessEvaluator:
    """Evaluator running a real workload."""

    def __init__(self, workload: WorkloadSpec, space: SearchSpace):
        check_workload(workload, space)
        self.workload = workload
        self.space = space

    def __call__(self, config: Configuration, iteration: int) -> Evaluation:
        return run_evaluation(self.workload, self.space, config, iteration)


class SyntheticEvaluator:
    """Evaluator backed by a synthetic surface; wall time is reported as zero."""

    def __init__(self, surface: SyntheticSurface, space: SearchSpace):
        check_bindings(surface, space)
        self.surface = surface
        self.space = space

    def __call__(self, config: Configuration, iteration: int) -> Evaluation:
        repeats = tuple(
            synthetic_eval(self.surface, self.space, config, r) for r in range(self.surface.repeats)
        )
        return Evaluation(
            config=config,
            value=aggregate(repeats, self.surface.aggregation),
            repeats=repeats,
            wall_time_s=0.0,
            status=EvalStatus.OK,
            iteration=iteration,
        )


def evaluate_with_cache(
    history: History, config: Configuration, evaluator: Evaluator
) -> Evaluation:
    """
    Return the cached ok evaluation of ``config`` or measure and record a new one.

    Failed evaluations are recorded but never served from cache.
    """
    cached = history.lookup(config)
    if cached is not None:
        return cached
    evaluation = evaluator(config, history.next_iteration)
    history.record(evaluation)
    return evaluation
