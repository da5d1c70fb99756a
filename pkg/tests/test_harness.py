"""Tests for the evaluation harness."""

import sys
from pathlib import Path
from typing import List

import pytest

from gridtune.errors import (
    InvalidPatternError,
    MissingBindingError,
    OffGridError,
    UnknownPlaceholderError,
)
from gridtune.harness import (
    SubprocessEvaluator,
    SyntheticEvaluator,
    aggregate,
    check_workload,
    compile_metric_pattern,
    evaluate_with_cache,
    last_metric,
    render,
    run_evaluation,
)
from gridtune.history import Evaluation, History
from gridtune.space import Configuration, grid_size, iter_grid
from gridtune.types import (
    Aggregation,
    Binding,
    EvalStatus,
    ParameterSpec,
    SearchSpace,
    SurfaceName,
    SyntheticSurface,
    WorkloadSpec,
)
from tests.helpers import make_space

PATTERN = r"Throughput: ([0-9.]+)"


def _threads_space() -> SearchSpace:
    return SearchSpace(
        params=[
            ParameterSpec(name="batch_size", min=64, max=1024, step=64),
            ParameterSpec(
                name="OMP_NUM_THREADS", min=1, max=56, step=1, binding=Binding.ENV_VAR
            ),
        ]
    )


def _python(code: str, tmp_path: Path, **kwargs) -> WorkloadSpec:  # type: ignore[no-untyped-def]
    return WorkloadSpec(
        command_template=[sys.executable, "-c", code, "{p0}"],
        metric_pattern=PATTERN,
        working_dir=tmp_path,
        **kwargs,
    )


def test_render_command_and_env() -> None:
    """Test placeholder substitution in arguments and environment."""
    workload = WorkloadSpec(
        command_template=["run.sh", "--batch-size", "{batch_size}"],
        env_template={"OMP_NUM_THREADS": "{OMP_NUM_THREADS}"},
        metric_pattern=PATTERN,
    )
    argv, env = render(workload, _threads_space(), Configuration.of([64, 28]))
    assert argv == ["run.sh", "--batch-size", "64"]
    assert env == {"OMP_NUM_THREADS": "28"}


def test_render_is_injective() -> None:
    """Test that distinct grid points render to distinct commands or environments."""
    space = SearchSpace(
        params=[
            ParameterSpec(name="batch_size", min=64, max=256, step=64),
            ParameterSpec(name="inter", min=1, max=3),
            ParameterSpec(name="OMP_NUM_THREADS", min=1, max=12, binding=Binding.ENV_VAR),
        ]
    )
    workload = WorkloadSpec(
        command_template=["run.sh", "--batch-size={batch_size}", "--inter", "{inter}"],
        env_template={"OMP_NUM_THREADS": "{OMP_NUM_THREADS}"},
        metric_pattern=PATTERN,
    )
    rendered = set()
    for config in iter_grid(space):
        argv, env = render(workload, space, config)
        rendered.add((tuple(argv), tuple(sorted(env.items()))))
    assert len(rendered) == grid_size(space)


def test_render_rejects_off_grid_config() -> None:
    """Test that rendering checks the configuration against the grid."""
    workload = WorkloadSpec(command_template=["run", "{p0}"], metric_pattern=PATTERN)
    with pytest.raises(OffGridError):
        render(workload, make_space((0, 10, 2)), Configuration.of([3]))


def test_unknown_placeholder() -> None:
    """Test that a template referencing an undeclared parameter is rejected."""
    workload = WorkloadSpec(command_template=["run", "{p0}", "{foo}"], metric_pattern=PATTERN)
    with pytest.raises(UnknownPlaceholderError, match="foo"):
        check_workload(workload, make_space((0, 10, 1)))


def test_missing_binding() -> None:
    """Test that an env-var parameter must appear in the environment template."""
    workload = WorkloadSpec(command_template=["run", "{batch_size}"], metric_pattern=PATTERN)
    with pytest.raises(MissingBindingError, match="OMP_NUM_THREADS"):
        check_workload(workload, _threads_space())


def test_metric_pattern_groups() -> None:
    """Test that metric patterns need exactly one capture group."""
    assert compile_metric_pattern(PATTERN).groups == 1
    with pytest.raises(InvalidPatternError, match="exactly one"):
        compile_metric_pattern(r"(a)(b)")
    with pytest.raises(InvalidPatternError, match="compile"):
        compile_metric_pattern(r"([0-9")


def test_last_metric_wins() -> None:
    """Test that the last matching line provides the metric."""
    pattern = compile_metric_pattern(PATTERN)
    output = "Throughput: 1.0 images/sec\nwarmup\nThroughput: 123.45 images/sec\n"
    assert last_metric(pattern, output) == 123.45
    assert last_metric(pattern, "nothing here") is None


def test_non_finite_metric_is_no_match(tmp_path: Path) -> None:
    """Test that nan and inf captures fail the evaluation instead of recording a value."""
    pattern = compile_metric_pattern(r"Throughput: ([\w.]+)")
    assert last_metric(pattern, "Throughput: nan") is None
    assert last_metric(pattern, "Throughput: 3.5\nThroughput: inf") is None
    workload = WorkloadSpec(
        command_template=[sys.executable, "-c", "print('Throughput: nan')", "{p0}"],
        metric_pattern=r"Throughput: ([\w.]+)",
        working_dir=tmp_path,
    )
    evaluation = run_evaluation(workload, make_space((0, 10, 1)), Configuration.of([1]), 1)
    assert evaluation.status == EvalStatus.FAILED
    assert evaluation.value is None


def test_aggregate() -> None:
    """Test the three aggregations over repeated measurements."""
    assert aggregate([10.0, 50.0, 12.0], Aggregation.MEDIAN) == 12.0
    assert aggregate([10.0, 50.0, 12.0], Aggregation.MEAN) == 24.0
    assert aggregate([10.0, 50.0, 12.0], Aggregation.MAX) == 50.0


def test_run_evaluation_parses_metric(tmp_path: Path) -> None:
    """Test a successful workload run with repeats."""
    code = (
        "import sys; print('Throughput: 1.0'); "
        "print('Throughput: %s.5 images/sec' % sys.argv[1])"
    )
    workload = _python(code, tmp_path, repeats=3)
    evaluation = run_evaluation(workload, make_space((0, 10, 1)), Configuration.of([7]), 4)
    assert evaluation.status == EvalStatus.OK
    assert evaluation.value == 7.5
    assert evaluation.repeats == (7.5, 7.5, 7.5)
    assert evaluation.iteration == 4
    assert evaluation.wall_time_s > 0


def test_run_evaluation_passes_environment(tmp_path: Path) -> None:
    """Test that env-var parameters reach the workload."""
    workload = WorkloadSpec(
        command_template=[
            sys.executable,
            "-c",
            "import os, sys; print('Throughput:', int(sys.argv[1]) + "
            "int(os.environ['OMP_NUM_THREADS']))",
            "{batch_size}",
        ],
        env_template={"OMP_NUM_THREADS": "{OMP_NUM_THREADS}"},
        metric_pattern=PATTERN,
        working_dir=tmp_path,
    )
    evaluation = run_evaluation(workload, _threads_space(), Configuration.of([64, 28]), 1)
    assert evaluation.value == 92.0


def test_nonzero_exit_fails(tmp_path: Path) -> None:
    """Test that a non-zero exit code fails the evaluation even with a metric."""
    workload = _python("import sys; print('Throughput: 5'); sys.exit(3)", tmp_path)
    evaluation = run_evaluation(workload, make_space((0, 10, 1)), Configuration.of([1]), 1)
    assert evaluation.status == EvalStatus.FAILED
    assert evaluation.value is None


def test_missing_metric_fails(tmp_path: Path) -> None:
    """Test that output without a match fails the evaluation."""
    workload = _python("print('done')", tmp_path)
    evaluation = run_evaluation(workload, make_space((0, 10, 1)), Configuration.of([1]), 1)
    assert evaluation.status == EvalStatus.FAILED
    assert evaluation.value is None
    assert evaluation.repeats == ()


def test_timeout(tmp_path: Path) -> None:
    """Test that a workload exceeding its timeout is killed and marked timeout."""
    workload = _python("import time; time.sleep(30)", tmp_path, timeout_s=0.5)
    evaluation = run_evaluation(workload, make_space((0, 10, 1)), Configuration.of([1]), 1)
    assert evaluation.status == EvalStatus.TIMEOUT
    assert evaluation.value is None
    assert evaluation.wall_time_s < 20


def test_timeout_with_detached_grandchild(tmp_path: Path) -> None:
    """Test that a grandchild in its own session holding the pipe does not hang the run."""
    code = (
        "import subprocess, sys, time; "
        "subprocess.Popen([sys.executable, '-c', 'import time; time.sleep(20)'], "
        "start_new_session=True); time.sleep(30)"
    )
    workload = _python(code, tmp_path, timeout_s=0.5)
    evaluation = run_evaluation(workload, make_space((0, 10, 1)), Configuration.of([1]), 1)
    assert evaluation.status == EvalStatus.TIMEOUT
    assert evaluation.wall_time_s < 10


def test_subprocess_evaluator_validates_upfront(tmp_path: Path) -> None:
    """Test that the evaluator checks templates when it is built."""
    workload = WorkloadSpec(command_template=["run"], metric_pattern=PATTERN)
    with pytest.raises(MissingBindingError):
        SubprocessEvaluator(workload, make_space((0, 10, 1)))
    workload = _python("print('Throughput: 2')", tmp_path)
    evaluator = SubprocessEvaluator(workload, make_space((0, 10, 1)))
    assert evaluator(Configuration.of([3]), 1).value == 2.0


def test_synthetic_evaluator_aggregates_repeats() -> None:
    """Test that noisy synthetic repeats are reduced by the configured aggregation."""
    surface = SyntheticSurface(
        name=SurfaceName.SEPARABLE_SUM, noise_std=1.0, repeats=3, aggregation=Aggregation.MAX
    )
    evaluation = SyntheticEvaluator(surface, make_space((0, 10, 1)))(Configuration.of([5]), 2)
    assert len(evaluation.repeats) == 3
    assert evaluation.value == max(evaluation.repeats)
    assert evaluation.wall_time_s == 0.0


class _Counting:
    def __init__(self, status: EvalStatus = EvalStatus.OK):
        self.calls: List[Configuration] = []
        self.status = status

    def __call__(self, config: Configuration, iteration: int) -> Evaluation:
        self.calls.append(config)
        if self.status == EvalStatus.OK:
            return Evaluation(config=config, value=1.0, repeats=(1.0,), iteration=iteration)
        return Evaluation(config=config, value=None, status=self.status, iteration=iteration)


def test_cache_serves_second_request() -> None:
    """Test that a repeated request is answered from history."""
    history = History()
    evaluator = _Counting()
    first = evaluate_with_cache(history, Configuration.of([1]), evaluator)
    assert len(evaluator.calls) == 1
    second = evaluate_with_cache(history, Configuration.of([1]), evaluator)
    assert second is first
    assert len(evaluator.calls) == 1
    assert len(history) == 1


def test_cache_does_not_serve_failures() -> None:
    """Test that a failed evaluation is re-run on the next request."""
    history = History()
    evaluator = _Counting(EvalStatus.FAILED)
    evaluate_with_cache(history, Configuration.of([1]), evaluator)
    evaluate_with_cache(history, Configuration.of([1]), evaluator)
    assert len(evaluator.calls) == 2
    assert [e.iteration for e in history] == [1, 2]
