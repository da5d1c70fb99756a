"""Evaluation records and the append-only evaluation history."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional

from gridtune.errors import DuplicateOkError, EmptyHistoryError, HistoryOrderError
from gridtune.space import Configuration
from gridtune.types import EvalStatus


@dataclass(frozen=True)
class Evaluation:
    """One measurement of a configuration."""

    config: Configuration
    value: Optional[float]
    repeats: tuple[float, ...] = ()
    wall_time_s: float = 0.0
    status: EvalStatus = EvalStatus.OK
    iteration: int = 0

    def __post_init__(self) -> None:
        if self.iteration < 0:
            raise ValueError("iteration must be non-negative")
        if self.wall_time_s < 0:
            raise ValueError("wall_time_s must be non-negative")
        if self.status == EvalStatus.OK:
            if not self.repeats or self.value is None:
                raise ValueError("ok evaluations need repeats and a value")
        elif self.value is not None:
            raise ValueError(f"{self.status.value} evaluations carry no value")

    @property
    def ok(self) -> bool:
        return self.status == EvalStatus.OK

    def to_json(self) -> str:
        """Render as one JSON-lines record with a fixed field order."""
        record = {
            "iteration": self.iteration,
            "values": list(self.config.values),
            "value": self.value,
            "repeats": list(self.repeats),
            "wall_time_s": self.wall_time_s,
            "status": self.status.value,
        }
        return json.dumps(record)

    @classmethod
    def from_json(cls, line: str) -> "Evaluation":
        record = json.loads(line)
        value = record["value"]
        return cls(
            config=Configuration.of(record["values"]),
            value=None if value is None else float(value),
            repeats=tuple(float(r) for r in record["repeats"]),
            wall_time_s=float(record["wall_time_s"]),
            status=EvalStatus(record["status"]),
            iteration=int(record["iteration"]),
        )


@dataclass
class History:
    """Append-only list of evaluations with an index of ok configurations."""

    entries: List[Evaluation] = field(default_factory=list)
    index: Dict[Configuration, int] = field(default_factory=dict)

    def record(self, evaluation: Evaluation) -> None:
        """
        Append an evaluation.

        Raises:
            HistoryOrderError: If the iteration number does not increase
            DuplicateOkError: If the configuration already has an ok evaluation
        """
        if self.entries and evaluation.iteration <= self.entries[-1].iteration:
            raise HistoryOrderError(
                f"iteration {evaluation.iteration} after {self.entries[-1].iteration}"
            )
        if evaluation.ok:
            if evaluation.config in self.index:
                raise DuplicateOkError(f"{evaluation.config.values} already evaluated")
            self.index[evaluation.config] = len(self.entries)
        self.entries.append(evaluation)

    def lookup(self, config: Configuration) -> Optional[Evaluation]:
        """Return the ok evaluation of an identical configuration, if any."""
        position = self.index.get(config)
        return None if position is None else self.entries[position]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Evaluation]:
        return iter(self.entries)

    def __contains__(self, config: object) -> bool:
        return config in self.index

    @property
    def next_iteration(self) -> int:
        return self.entries[-1].iteration + 1 if self.entries else 1

    @property
    def ok_count(self) -> int:
        return len(self.index)

    def ok_entries(self) -> List[Evaluation]:
        return [e for e in self.entries if e.ok]

    def best(self) -> Evaluation:
        """
        Highest-valued ok evaluation; the earliest wins ties.

        Raises:
            EmptyHistoryError: If there is no ok evaluation
        """
        best: Optional[Evaluation] = None
        best_value = float("-inf")
        for entry in self.entries:
            if entry.value is not None and (best is None or entry.value > best_value):
                best, best_value = entry, entry.value
        if best is None:
            raise EmptyHistoryError("history has no ok evaluation")
        return best

    def dump_jsonl(self, path: Path) -> None:
        path.write_text("".join(e.to_json() + "\n" for e in self.entries), encoding="utf-8")

    @classmethod
    def load_jsonl(cls, path: Path) -> "History":
        history = cls()
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                history.record(Evaluation.from_json(line))
        return history


def append_jsonl(path: Path, evaluation: Evaluation) -> None:
    """Append one record and flush, so a crashed session keeps its measurements."""
    with path.open("a", encoding="utf-8") as handle:
        handle.write(evaluation.to_json() + "\n")
        handle.flush()
