"""
The five one-shot game scenarios: dictator, ultimatum proposer and responder, public goods, bomb risk.

Only first-round decisions are elicited, so the other players are never simulated. Payoff
functions exist for validation, reporting and building scripted agents.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from ..core.types import AnswerType, Case

OPTION_COUNT: int = 21
GRID_TOLERANCE: float = 1e-9
PUBLIC_GOODS_ENDOWMENT: float = 20.0
PUBLIC_GOODS_RETURN_RATE: float = 0.5
PUBLIC_GOODS_GROUP_SIZE: int = 4
BOMB_BOXES: int = 100


@dataclass(frozen=True)
class GameScenario:
    """
    Feasible set and discretization of one decision scenario.

    Attributes:
        id: Scenario identifier
        feasible_min: Lowest admissible decision
        feasible_max: Highest admissible decision
        option_step: Gap between neighbouring options in multiple-choice mode
        unit_label: "$" for money, "boxes" for the bomb game
        whole_units: Decisions are counts, so open answers must be integers
    """

    id: Case
    feasible_min: float
    feasible_max: float
    option_step: float
    unit_label: str
    whole_units: bool = False

    @property
    def interval_length(self) -> float:
        """L_m, the length of the feasible interval used to normalize dispersion."""
        return self.feasible_max - self.feasible_min

    def options(self) -> NDArray[np.float64]:
        return self.feasible_min + self.option_step * np.arange(OPTION_COUNT, dtype=float)

    def on_grid(self, value: float) -> bool:
        steps = (value - self.feasible_min) / self.option_step
        return bool(abs(steps - round(steps)) < GRID_TOLERANCE and 0 <= round(steps) < OPTION_COUNT)


@dataclass(frozen=True)
class GameDecision:
    scenario: Case
    value: float


class DecisionCheck(NamedTuple):
    valid: bool
    reason: str | None = None


SCENARIOS: dict[Case, GameScenario] = {
    Case.DICTATOR: GameScenario(Case.DICTATOR, 0.0, 100.0, 5.0, "$"),
    Case.ULTIMATUM_PROPOSER: GameScenario(Case.ULTIMATUM_PROPOSER, 0.0, 100.0, 5.0, "$"),
    Case.ULTIMATUM_RESPONDER: GameScenario(Case.ULTIMATUM_RESPONDER, 0.0, 100.0, 5.0, "$"),
    Case.PUBLIC_GOODS: GameScenario(Case.PUBLIC_GOODS, 0.0, PUBLIC_GOODS_ENDOWMENT, 1.0, "$"),
    Case.BOMB_RISK: GameScenario(Case.BOMB_RISK, 0.0, float(BOMB_BOXES), 5.0, "boxes", whole_units=True),
}


def scenario_spec(scenario_id: Case) -> GameScenario:
    try:
        return SCENARIOS[scenario_id]
    except KeyError:
        raise ValueError(f"{scenario_id} is not a game scenario") from None


def _check_range(name: str, value: float, low: float, high: float) -> None:
    if not low <= value <= high:
        raise ValueError(f"{name} must lie in [{low:g}, {high:g}], got {value:g}")


def payoff_dictator(given: float) -> tuple[float, float]:
    """Return (self, other) when `given` dollars of $100 go to the other player."""
    _check_range("given", given, 0, 100)
    return 100 - given, given


def payoff_ultimatum(offer: float, min_accept: float) -> tuple[float, float]:
    """Return (proposer, responder); a rejected offer pays both players nothing."""
    _check_range("offer", offer, 0, 100)
    _check_range("min_accept", min_accept, 0, 100)
    if offer >= min_accept:
        return 100 - offer, offer
    return 0.0, 0.0


def payoff_public_goods(own_contribution: float, total_contributions: float) -> float:
    """Kept endowment plus half of the group's total contribution."""
    _check_range("own_contribution", own_contribution, 0, PUBLIC_GOODS_ENDOWMENT)
    others_max = PUBLIC_GOODS_ENDOWMENT * (PUBLIC_GOODS_GROUP_SIZE - 1)
    _check_range("total_contributions", total_contributions, own_contribution, own_contribution + others_max)
    return (PUBLIC_GOODS_ENDOWMENT - own_contribution) + PUBLIC_GOODS_RETURN_RATE * total_contributions


def payoff_bomb(boxes: int, bomb_in_opened: bool) -> float:
    _check_range("boxes", boxes, 0, BOMB_BOXES)
    return 0.0 if bomb_in_opened else float(boxes)


def expected_bomb_payoff(boxes: float) -> float:
    """Expected earnings when the bomb is uniformly placed in one of 100 boxes."""
    _check_range("boxes", boxes, 0, BOMB_BOXES)
    return boxes * (1 - boxes / BOMB_BOXES)


def validate_decision(scenario: GameScenario, value: float, answer_type: AnswerType) -> DecisionCheck:
    if not np.isfinite(value):
        return DecisionCheck(False, f"{value} is not a finite number")
    if not scenario.feasible_min <= value <= scenario.feasible_max:
        return DecisionCheck(
            False,
            f"{value:g} falls outside the specified range [{scenario.feasible_min:g}, {scenario.feasible_max:g}]",
        )
    if answer_type is AnswerType.CHOICE and not scenario.on_grid(value):
        return DecisionCheck(False, f"{value:g} is not on the {OPTION_COUNT}-option grid")
    if scenario.whole_units and not float(value).is_integer():
        return DecisionCheck(False, f"{value:g} is not a whole number of {scenario.unit_label}")
    return DecisionCheck(True)
