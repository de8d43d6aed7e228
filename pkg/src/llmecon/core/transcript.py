"""Dialogue records: transcript turns and per-simulation results.

Transcripts are appended to a JSON-lines file turn by turn so an interrupted campaign
keeps everything said so far. Results are written once, when a simulation ends.
"""

from dataclasses import asdict, dataclass, field
import json
import os
from pathlib import Path
import time
from typing import Any, Literal, Self

from pydantic import BaseModel, Field, model_validator

from ..tasks.budget import ROUNDS_PER_SIMULATION, Allocation
from ..tasks.games import GameDecision
from .conditions import Condition
from .types import INVALID_CLASSES, Case, Validity

Role = Literal["system", "user", "assistant"]


@dataclass
class Turn:
    """One transcript line.

    Args:
        role: system, user or assistant
        text: Message content
        round_index: 1..25 for budget rounds, 0 for the system message and game greetings
        validity: Label of an assistant turn; None for system and user turns
        decision: Parsed decision of a valid assistant turn, one pair per block for single-turn batches
        detail: Parser or transport detail for invalid turns
    """

    role: Role
    text: str
    round_index: int
    validity: Validity | None = None
    decision: list[float] | list[list[float]] | None = None
    detail: str = ""
    timestamp: float = field(default_factory=time.time)

    def to_record(self) -> dict[str, Any]:
        record = asdict(self)
        record["validity"] = self.validity.value if self.validity else None
        return record

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "Turn":
        validity = record.get("validity")
        return cls(
            role=record["role"],
            text=record["text"],
            round_index=int(record["round_index"]),
            validity=Validity(validity) if validity else None,
            decision=record.get("decision"),
            detail=record.get("detail", ""),
            timestamp=float(record["timestamp"]),
        )


class Transcript:
    """
    Ordered turns of one simulation, mirrored to an append-only JSON-lines file.

    The first line of the file is a header with the simulation id and a condition snapshot.
    """

    def __init__(self, simulation_id: str, condition: Condition, path: Path | None = None) -> None:
        self.simulation_id = simulation_id
        self.condition = condition
        self.path = path
        self.turns: list[Turn] = []
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            header = {"simulation_id": simulation_id, "condition": condition.model_dump(mode="json")}
            path.write_text(json.dumps(header) + "\n", encoding="utf-8")

    def append(self, turn: Turn) -> None:
        if not self.turns and turn.role != "system":
            raise ValueError("A transcript starts with the system message")
        if turn.role == "assistant" and turn.validity is None:
            raise ValueError("Assistant turns carry a validity label")
        self.turns.append(turn)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8") as f:
                f.write(json.dumps(turn.to_record()) + "\n")

    @property
    def assistant_turns(self) -> list[Turn]:
        return [t for t in self.turns if t.role == "assistant"]

    def invalid_counts(self) -> dict[Validity, int]:
        counts = dict.fromkeys(INVALID_CLASSES, 0)
        for turn in self.assistant_turns:
            if turn.validity is not None and turn.validity is not Validity.VALID:
                counts[turn.validity] += 1
        return counts

    @classmethod
    def load(cls, path: Path) -> "Transcript":
        lines = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
        if not lines:
            raise ValueError(f"{path} is empty")
        header, *records = lines
        transcript = cls(header["simulation_id"], Condition.model_validate(header["condition"]))
        transcript.path = path
        transcript.turns = [Turn.from_record(r) for r in records]
        return transcript


class SimulationResult(BaseModel):
    """
    Outcome of one simulation.

    Allocations are (points_a, points_b) pairs in round order; game simulations hold a
    single value. Incomplete simulations keep whatever valid decisions were collected.
    """

    simulation_id: str
    condition: Condition
    model_id: str
    seed: int
    allocations: list[tuple[float, float]] = Field(default_factory=list)
    game_values: list[float] = Field(default_factory=list)
    invalid_counts: dict[Validity, int] = Field(default_factory=lambda: dict.fromkeys(INVALID_CLASSES, 0))
    assistant_turns: int = 0
    completed: bool = False
    rounds_file: str | None = None

    @model_validator(mode="after")
    def _complete_means_full(self) -> Self:
        if any(v < 0 for v in self.invalid_counts.values()):
            raise ValueError("Invalid counts are non-negative")
        if not self.completed:
            return self
        case = self.condition.case
        if case is not None and case.is_game and len(self.game_values) != 1:
            raise ValueError("A completed game simulation holds exactly one decision")
        if case is not None and case.is_budgetary and len(self.allocations) != ROUNDS_PER_SIMULATION:
            raise ValueError(f"A completed budget simulation holds exactly {ROUNDS_PER_SIMULATION} decisions")
        return self

    @property
    def case(self) -> Case:
        if self.condition.case is None:
            raise ValueError(f"Simulation {self.simulation_id} has no case")
        return self.condition.case

    @property
    def decisions(self) -> list[Allocation] | list[GameDecision]:
        if self.case.is_game:
            return [GameDecision(self.case, v) for v in self.game_values]
        return [Allocation(a, b) for a, b in self.allocations]

    @property
    def total_invalid(self) -> int:
        return sum(self.invalid_counts.values())

    @property
    def valid_turns(self) -> int:
        return self.assistant_turns - self.total_invalid

    def write(self, path: Path) -> None:
        """Atomic write; a results file exists only for finished simulations."""
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def read(cls, path: Path) -> "SimulationResult":
        return cls.model_validate_json(path.read_text(encoding="utf-8"))
