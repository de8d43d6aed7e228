"""Tests for condition validation and the standard condition families."""

from pydantic import ValidationError
import pytest

from llmecon.core.conditions import (
    DEMOGRAPHIC_PERSONAS,
    TEMPERATURE_SWEEP,
    Condition,
    PersonaKind,
    PersonaSpec,
    persona_family,
    stake_family,
    standard_conditions,
    temperature_family,
)
from llmecon.core.types import AnswerType, Case, DialogueType


def test_baseline_defaults() -> None:
    condition = Condition(case=Case.RISK)
    assert condition.is_baseline
    assert condition.persona.kind is PersonaKind.NONE
    assert condition.incentive and condition.include_example
    assert condition.stake_multiplier == 1
    assert condition.dialogue is DialogueType.MULTI_TURN
    assert condition.answer_type is AnswerType.OPEN


@pytest.mark.parametrize(
    "fields",
    [
        {"dialogue": DialogueType.SINGLE_TURN},
        {"stake_multiplier": 10},
        {"incentive": False},
    ],
)
def test_budgetary_only_variations_rejected_for_games(fields: dict[str, object]) -> None:
    with pytest.raises(ValidationError):
        Condition(case=Case.DICTATOR, **fields)  # type: ignore[arg-type]
    Condition(case=Case.SOCIAL, **fields)  # type: ignore[arg-type]


@pytest.mark.parametrize("multiplier", [2, 5, 50])
def test_stake_multiplier_is_restricted(multiplier: int) -> None:
    with pytest.raises(ValidationError):
        Condition(case=Case.RISK, stake_multiplier=multiplier)  # type: ignore[arg-type]


def test_negative_temperature_rejected() -> None:
    with pytest.raises(ValidationError):
        Condition(case=Case.RISK, temperature=-0.1)


def test_for_case_binds_and_revalidates() -> None:
    unbound = Condition(name="single_turn", variation="dialogue", dialogue=DialogueType.SINGLE_TURN)
    assert unbound.for_case(Case.RISK).case is Case.RISK
    with pytest.raises(ValidationError):
        unbound.for_case(Case.BOMB_RISK)
    with pytest.raises(ValueError):
        Condition(case=Case.RISK).for_case(Case.SOCIAL)


def test_occupation_persona_fields() -> None:
    persona = PersonaSpec(kind=PersonaKind.OCCUPATION, occupation_name="mathematician")
    assert persona.label == "occupation:mathematician"
    with pytest.raises(ValidationError):
        PersonaSpec(kind=PersonaKind.OCCUPATION)
    with pytest.raises(ValidationError):
        PersonaSpec(kind=PersonaKind.FEMALE, occupation_name="mathematician")


def test_persona_family() -> None:
    tasks = "You core tasks include:\n* Prove theorems\n\nYour supplemental tasks include:\n* Teach"
    conditions = persona_family(Case.DICTATOR, {"mathematician": tasks})
    assert len(conditions) == len(DEMOGRAPHIC_PERSONAS) + 1
    assert {c.variation for c in conditions} == {"persona"}
    assert conditions[-1].name == "persona_mathematician"


def test_temperature_and_stake_families() -> None:
    temperatures = temperature_family(Case.RISK)
    assert [c.temperature for c in temperatures] == list(TEMPERATURE_SWEEP)
    assert TEMPERATURE_SWEEP[0] == 0.0 and TEMPERATURE_SWEEP[-1] == 1.0
    assert [c.stake_multiplier for c in stake_family(Case.SOCIAL)] == [10, 100, 1000]


@pytest.mark.parametrize("case", list(Case))
def test_standard_conditions_have_unique_names_and_one_baseline(case: Case) -> None:
    conditions = standard_conditions(case)
    assert len({c.name for c in conditions}) == len(conditions)
    assert sum(c.is_baseline for c in conditions) == 1
    assert all(c.case is case for c in conditions)
    variations = {c.variation for c in conditions}
    if case.is_budgetary:
        assert variations == {
            "baseline", "persona", "answer_type", "dialogue", "temperature", "incentive", "stake", "example"
        }
    else:
        assert variations == {"baseline", "persona", "answer_type"}
