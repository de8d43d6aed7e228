"""
Experimental conditions.

A condition is the full vector of protocol settings one simulation runs under. Conditions
are grouped by `variation`; every variation except the baseline forms its own family of
hypothesis tests in the analysis.
"""

from enum import StrEnum
from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .types import AnswerType, Case, DialogueType

CORE_TASKS_HEADER = "You core tasks include:"
SUPPLEMENTAL_TASKS_HEADER = "Your supplemental tasks include:"

STAKE_MULTIPLIERS: tuple[int, ...] = (1, 10, 100, 1000)
TEMPERATURE_SWEEP: tuple[float, ...] = tuple(round(0.1 * k, 1) for k in range(11))

BASELINE = "baseline"


class PersonaKind(StrEnum):
    NONE = "none"
    MALE = "male"
    FEMALE = "female"
    YOUNG = "young"
    ELDERLY = "elderly"
    ELEMENTARY = "elementary"
    COLLEGE = "college"
    ASIAN = "asian"
    AFRICAN_AMERICAN = "african_american"
    OCCUPATION = "occupation"


DEMOGRAPHIC_PERSONAS: tuple[PersonaKind, ...] = (
    PersonaKind.MALE,
    PersonaKind.FEMALE,
    PersonaKind.YOUNG,
    PersonaKind.ELDERLY,
    PersonaKind.ELEMENTARY,
    PersonaKind.COLLEGE,
    PersonaKind.ASIAN,
    PersonaKind.AFRICAN_AMERICAN,
)


class PersonaSpec(BaseModel):
    """
    Role assignment placed in the system message.

    Occupation personas carry the occupation name and the task description shown after the
    role sentence. The description may be given inline or as a text file; checking its
    header structure is left to the prompt renderer.
    """

    model_config = ConfigDict(frozen=True)

    kind: PersonaKind = PersonaKind.NONE
    occupation_name: str | None = None
    occupation_tasks: str | None = None
    occupation_tasks_file: str | None = None

    @model_validator(mode="after")
    def _occupation_fields(self) -> Self:
        has_occupation_fields = any(
            v is not None for v in (self.occupation_name, self.occupation_tasks, self.occupation_tasks_file)
        )
        if self.kind is PersonaKind.OCCUPATION and not self.occupation_name:
            raise ValueError("An occupation persona needs occupation_name")
        if self.kind is not PersonaKind.OCCUPATION and has_occupation_fields:
            raise ValueError(f"Occupation fields are only allowed with kind=occupation, got kind={self.kind}")
        return self

    @property
    def label(self) -> str:
        if self.kind is PersonaKind.OCCUPATION:
            return f"occupation:{self.occupation_name}"
        return self.kind.value


class Condition(BaseModel):
    """
    One experimental condition.

    Attributes:
        name: Unique label within a campaign, used in file names and reports
        variation: Family label; conditions sharing it are tested together
        case: Domain or game scenario, filled from the campaign when omitted
        temperature: Overrides the provider temperature when set
        incentive: False drops the random-payment sentence of the system message
        stake_multiplier: Factor applied to the displayed per-point returns
    """

    model_config = ConfigDict(frozen=True)

    name: str = BASELINE
    variation: str = BASELINE
    case: Case | None = None
    persona: PersonaSpec = Field(default_factory=PersonaSpec)
    temperature: float | None = Field(default=None, ge=0)
    incentive: bool = True
    stake_multiplier: Literal[1, 10, 100, 1000] = 1
    include_example: bool = True
    dialogue: DialogueType = DialogueType.MULTI_TURN
    answer_type: AnswerType = AnswerType.OPEN
    keep_invalid_in_context: bool = False

    @model_validator(mode="after")
    def _consistent_with_case(self) -> Self:
        if self.case is None or self.case.is_budgetary:
            return self
        if self.dialogue is DialogueType.SINGLE_TURN:
            raise ValueError(f"Condition {self.name!r}: single-turn dialogue is not available for {self.case}")
        if self.stake_multiplier != 1 or not self.incentive:
            raise ValueError(f"Condition {self.name!r}: stake and incentive variations apply to risk and social only")
        return self

    @property
    def is_baseline(self) -> bool:
        return self.variation == BASELINE

    def for_case(self, case: Case) -> "Condition":
        """Copy bound to `case`, re-running validation."""
        if self.case is not None and self.case != case:
            raise ValueError(f"Condition {self.name!r} is bound to {self.case}, not {case}")
        return Condition.model_validate({**self.model_dump(), "case": case})


def baseline(case: Case) -> Condition:
    return Condition(case=case)


def persona_family(case: Case, occupations: dict[str, str] | None = None) -> list[Condition]:
    """
    One condition per demographic persona, plus one per occupation.

    Args:
        case: Domain or game scenario
        occupations: Occupation name mapped to its core/supplemental task description
    """
    conditions = [
        Condition(name=f"persona_{kind.value}", variation="persona", case=case, persona=PersonaSpec(kind=kind))
        for kind in DEMOGRAPHIC_PERSONAS
    ]
    for name, tasks in (occupations or {}).items():
        persona = PersonaSpec(kind=PersonaKind.OCCUPATION, occupation_name=name, occupation_tasks=tasks)
        conditions.append(Condition(name=f"persona_{name}", variation="persona", case=case, persona=persona))
    return conditions


def temperature_family(case: Case, temperatures: tuple[float, ...] = TEMPERATURE_SWEEP) -> list[Condition]:
    return [
        Condition(name=f"temperature_{t:.1f}", variation="temperature", case=case, temperature=t) for t in temperatures
    ]


def stake_family(case: Case) -> list[Condition]:
    return [
        Condition(name=f"stake_x{m}", variation="stake", case=case, stake_multiplier=m)  # type: ignore[arg-type]
        for m in STAKE_MULTIPLIERS[1:]
    ]


def incentive_family(case: Case) -> list[Condition]:
    return [Condition(name="no_incentive", variation="incentive", case=case, incentive=False)]


def example_family(case: Case) -> list[Condition]:
    return [Condition(name="no_example", variation="example", case=case, include_example=False)]


def dialogue_family(case: Case) -> list[Condition]:
    return [Condition(name="single_turn", variation="dialogue", case=case, dialogue=DialogueType.SINGLE_TURN)]


def answer_type_family(case: Case) -> list[Condition]:
    return [Condition(name="multiple_choice", variation="answer_type", case=case, answer_type=AnswerType.CHOICE)]


def standard_conditions(case: Case, occupations: dict[str, str] | None = None) -> list[Condition]:
    """Baseline followed by every variation studied for `case`."""
    conditions = [baseline(case), *persona_family(case, occupations), *answer_type_family(case)]
    if case.is_budgetary:
        conditions += [
            *dialogue_family(case),
            *temperature_family(case),
            *incentive_family(case),
            *stake_family(case),
            *example_family(case),
        ]
    return conditions
