"""Decision tasks: 25-round budgetary allocations and the one-shot game scenarios."""

from .budget import (
    ENDOWMENT,
    ROUNDS_PER_SIMULATION,
    Allocation,
    BudgetRound,
    InvalidAllocationError,
    Observation,
    TaskGenConfig,
    generate_rounds,
    read_rounds,
    to_observation,
    write_rounds,
)
from .games import SCENARIOS, GameDecision, GameScenario, scenario_spec, validate_decision

__all__ = [
    "ENDOWMENT",
    "ROUNDS_PER_SIMULATION",
    "SCENARIOS",
    "Allocation",
    "BudgetRound",
    "GameDecision",
    "GameScenario",
    "InvalidAllocationError",
    "Observation",
    "TaskGenConfig",
    "generate_rounds",
    "read_rounds",
    "scenario_spec",
    "to_observation",
    "validate_decision",
    "write_rounds",
]
