"""
Budgetary decision tasks for the risk and social preference domains.

Each simulation asks for 25 allocations of a 100-point endowment between two accounts
whose per-point dollar returns vary between rounds. Allocations are converted to
standard (price, quantity) observations normalized to unit expenditure so that the
revealed-preference analysis is scale free.
"""

from collections.abc import Iterable
from dataclasses import dataclass
import json
import math
from pathlib import Path
from typing import Any, Self

from loguru import logger
import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..core.types import Case

ROUNDS_PER_SIMULATION: int = 25
ENDOWMENT: int = 100
SUM_TOLERANCE: float = 1e-6
MAX_REDRAWS: int = 100_000


class InvalidAllocationError(ValueError):
    """Raised when an allocation violates the 100-point budget constraint."""


class TaskGenConfig(BaseModel):
    """
    Parameters of the per-round return draw.

    Returns are drawn uniformly on [return_min, return_max] and redrawn until
    max(r_a, r_b) / min(r_a, r_b) >= min_ratio. When `decimals` is set the draws are
    rounded so that the numbers shown to the model are exactly the ones analysed.
    """

    return_min: float = Field(default=0.1, gt=0)
    return_max: float = Field(default=1.0, gt=0)
    min_ratio: float = Field(default=1.0, ge=1.0)
    seed: int = 42
    decimals: int | None = Field(default=2, ge=0)

    @model_validator(mode="after")
    def _check_range(self) -> Self:
        if self.return_min > self.return_max:
            raise ValueError(f"return_min ({self.return_min}) must not exceed return_max ({self.return_max})")
        low, high = self.representable_range
        if low > high:
            raise ValueError(
                f"No value with {self.decimals} decimals lies in [return_min, return_max] = "
                f"[{self.return_min}, {self.return_max}]"
            )
        reachable = high / low
        if reachable < self.min_ratio:
            raise ValueError(
                f"min_ratio {self.min_ratio} is unreachable with returns in [{self.return_min}, {self.return_max}]"
            )
        if self.decimals is None and self.min_ratio > 1 and reachable == self.min_ratio:
            # continuous draws hit the end points with probability zero
            raise ValueError(
                f"min_ratio {self.min_ratio} is reachable only at the end points of "
                f"[{self.return_min}, {self.return_max}]"
            )
        return self

    @property
    def representable_range(self) -> tuple[float, float]:
        """Smallest and largest return a rounded draw can take."""
        if self.decimals is None:
            return self.return_min, self.return_max
        scale = 10**self.decimals
        # round first so that 0.1 * 100 counts as 10, not 10.000000000000002
        low = math.ceil(round(self.return_min * scale, 6)) / scale
        high = math.floor(round(self.return_max * scale, 6)) / scale
        return low, high


@dataclass(frozen=True)
class BudgetRound:
    domain: Case
    return_a: float
    return_b: float
    round_index: int
    endowment: int = ENDOWMENT

    def __post_init__(self) -> None:
        if not self.domain.is_budgetary:
            raise ValueError(f"Budget rounds exist only for risk and social domains, got {self.domain}")
        if self.return_a <= 0 or self.return_b <= 0:
            raise ValueError(f"Returns must be positive, got ({self.return_a}, {self.return_b})")
        if self.endowment != ENDOWMENT:
            raise ValueError(f"Endowment is fixed at {ENDOWMENT} points")
        if not 1 <= self.round_index <= ROUNDS_PER_SIMULATION:
            raise ValueError(f"round_index must lie in 1..{ROUNDS_PER_SIMULATION}, got {self.round_index}")

    def to_record(self) -> dict[str, object]:
        return {
            "domain": self.domain.value,
            "index": self.round_index,
            "return_a": self.return_a,
            "return_b": self.return_b,
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "BudgetRound":
        return cls(
            domain=Case(str(record["domain"])),
            return_a=float(record["return_a"]),
            return_b=float(record["return_b"]),
            round_index=int(record["index"]),
        )


@dataclass(frozen=True)
class Allocation:
    """Points given to account A (Asset A / yourself) and account B (Asset B / the other one)."""

    points_a: float
    points_b: float

    def __post_init__(self) -> None:
        if self.points_a < 0 or self.points_b < 0:
            raise InvalidAllocationError(f"Points must be non-negative, got ({self.points_a}, {self.points_b})")
        if abs(self.points_a + self.points_b - ENDOWMENT) > SUM_TOLERANCE:
            raise InvalidAllocationError(
                f"Points ({self.points_a}, {self.points_b}) do not sum to {ENDOWMENT}"
            )


@dataclass(frozen=True)
class Observation:
    prices: tuple[float, float]
    quantities: tuple[float, float]

    @property
    def expenditure(self) -> float:
        return float(np.dot(self.prices, self.quantities))


def generate_rounds(domain: Case, config: TaskGenConfig, seed: int | None = None) -> list[BudgetRound]:
    """
    Generate the 25 rounds of one simulation.

    Args:
        domain: Case.RISK or Case.SOCIAL
        config: Return distribution parameters
        seed: Overrides config.seed, used by campaigns to give each simulation its own stream

    Returns:
        list[BudgetRound]: Rounds with round_index 1..25, bit-reproducible for a given seed
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    rounds: list[BudgetRound] = []
    for index in range(1, ROUNDS_PER_SIMULATION + 1):
        return_a, return_b = _draw_returns(rng, config)
        rounds.append(BudgetRound(domain=domain, return_a=return_a, return_b=return_b, round_index=index))
    return rounds


def _draw_returns(rng: np.random.Generator, config: TaskGenConfig) -> tuple[float, float]:
    for _ in range(MAX_REDRAWS):
        draw = rng.uniform(config.return_min, config.return_max, size=2)
        if config.decimals is not None:
            draw = np.round(draw, config.decimals)
            # rounding can step outside a range whose bounds carry more digits
            if draw.min() < config.return_min or draw.max() > config.return_max:
                continue
        if draw.max() / draw.min() >= config.min_ratio:
            return float(draw[0]), float(draw[1])
    raise ValueError(
        f"No returns in [{config.return_min}, {config.return_max}] met min_ratio {config.min_ratio} "
        f"after {MAX_REDRAWS} draws"
    )


def to_observation(round_: BudgetRound, alloc: Allocation) -> Observation:
    """
    Encode an allocation as a revealed-preference observation.

    Quantities are the dollar amounts in each account and prices are chosen so that the
    whole endowment costs exactly one unit: p = (1/(100 r_a), 1/(100 r_b)).
    """
    if abs(alloc.points_a + alloc.points_b - round_.endowment) > SUM_TOLERANCE:
        raise InvalidAllocationError(f"Allocation {alloc} does not exhaust the {round_.endowment}-point endowment")
    quantities = (alloc.points_a * round_.return_a, alloc.points_b * round_.return_b)
    prices = (1.0 / (round_.endowment * round_.return_a), 1.0 / (round_.endowment * round_.return_b))
    return Observation(prices=prices, quantities=quantities)


def write_rounds(path: Path, rounds: Iterable[BudgetRound]) -> None:
    """Write rounds as JSON lines (domain, index, return_a, return_b)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(r.to_record()) for r in rounds]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {len(lines)} rounds to {path}")


def read_rounds(path: Path) -> list[BudgetRound]:
    with path.open(encoding="utf-8") as f:
        return [BudgetRound.from_record(json.loads(line)) for line in f if line.strip()]
