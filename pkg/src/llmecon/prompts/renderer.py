"""
Prompt rendering for every experimental condition.

Prompt text lives in Jinja2 templates under templates/ (see templates/README.md). This
module only decides which paragraphs appear, in what order, and with which numbers.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any

from jinja2 import Environment, FileSystemLoader, StrictUndefined, TemplateNotFound
from loguru import logger
import yaml

from ..core.conditions import CORE_TASKS_HEADER, SUPPLEMENTAL_TASKS_HEADER, Condition, PersonaKind, PersonaSpec
from ..core.types import AnswerType, Case, DialogueType
from ..tasks.budget import ROUNDS_PER_SIMULATION, BudgetRound
from ..tasks.games import GameScenario, scenario_spec
from ..utils.resources import resolve_path, resource_path

PARAGRAPH_SEPARATOR = "\n\n"

SCHEMA_FIELDS: dict[Case, tuple[str, str]] = {
    Case.RISK: ("Points for investing Asset A", "Points for investing Asset B"),
    Case.SOCIAL: ("Points allocated to yourself", "Points allocated to the other one"),
}

BUDGET_OPTIONS = ", ".join(f"({a},{100 - a})" for a in range(0, 101, 5))


class PromptError(ValueError):
    """Raised when a condition cannot be rendered."""


@dataclass(frozen=True)
class RenderedPrompt:
    """
    System message plus the user turns of one simulation.

    Multi-turn budgetary prompts hold one user turn per round, single-turn prompts hold
    one turn with all 25 questions, and games hold the greeting and the scenario body.
    """

    system: str
    user_turns: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.system:
            raise PromptError("A rendered prompt needs a non-empty system message")


def format_number(value: float) -> str:
    """Shortest decimal with at most two fractional digits: 0.8, 8, 0.25."""
    text = f"{round(value, 2):.2f}".rstrip("0").rstrip(".")
    return "0" if text in ("", "-0") else text


def _with_article(noun: str) -> str:
    return f"{'an' if noun[:1].lower() in 'aeiou' else 'a'} {noun}"


class PromptRenderer:
    """
    Renders system and user messages from a template directory.

    Args:
        template_dir: Directory laid out as templates/<case>/<section>.txt; defaults to the
            repository's templates/
    """

    def __init__(self, template_dir: str | Path | None = None) -> None:
        self.template_dir = Path(template_dir) if template_dir else resource_path("templates")
        self._env = Environment(
            loader=FileSystemLoader(str(self.template_dir)),
            undefined=StrictUndefined,
            keep_trailing_newline=False,
            autoescape=False,
        )
        roles_file = self.template_dir / "personas" / "roles.yaml"
        self._roles: dict[str, dict[str, str]] = yaml.safe_load(roles_file.read_text(encoding="utf-8"))
        logger.debug(f"Prompt templates loaded from {self.template_dir}")

    def _paragraph(self, name: str, **context: Any) -> str:
        try:
            return self._env.get_template(name).render(**context)
        except TemplateNotFound as e:
            raise PromptError(f"Template {name} not found in {self.template_dir}") from e

    @staticmethod
    def _case_of(condition: Condition) -> Case:
        if condition.case is None:
            raise PromptError(f"Condition {condition.name!r} is not bound to a case")
        return condition.case

    def occupation_tasks(self, persona: PersonaSpec) -> str:
        """Load and check the core/supplemental task description of an occupation persona."""
        tasks = persona.occupation_tasks
        if tasks is None and persona.occupation_tasks_file is not None:
            tasks = resolve_path(persona.occupation_tasks_file).read_text(encoding="utf-8")
        if not tasks or not tasks.strip():
            raise PromptError(f"Occupation persona {persona.occupation_name!r} has no task description")
        tasks = tasks.strip()
        core = tasks.find(CORE_TASKS_HEADER)
        supplemental = tasks.find(SUPPLEMENTAL_TASKS_HEADER)
        if core < 0 or supplemental < 0 or supplemental < core:
            raise PromptError(
                f"Occupation tasks for {persona.occupation_name!r} must contain "
                f"{CORE_TASKS_HEADER!r} followed by {SUPPLEMENTAL_TASKS_HEADER!r}"
            )
        return tasks

    def _role_paragraphs(self, persona: PersonaSpec, group: str) -> list[str]:
        template = self._roles[group][persona.kind.value]
        if persona.kind is not PersonaKind.OCCUPATION:
            return [template]
        occupation = _with_article(str(persona.occupation_name))
        role = self._env.from_string(template).render(occupation=occupation)
        return [role, self.occupation_tasks(persona)]

    def render_system(self, condition: Condition) -> str:
        case = self._case_of(condition)
        if case.is_game:
            return PARAGRAPH_SEPARATOR.join(self._role_paragraphs(condition.persona, "games"))

        goal = "maximize your payoff" if case is Case.RISK and condition.incentive else "you like most"
        remainder = self._paragraph("budgetary/system.txt", incentive=condition.incentive, goal=goal)
        role, *tasks = self._role_paragraphs(condition.persona, "budgetary")
        if tasks:
            return PARAGRAPH_SEPARATOR.join([role, *tasks, remainder])
        return f"{role} {remainder}"

    def _question(self, condition: Condition, round_: BudgetRound) -> str:
        case = self._case_of(condition)
        choice = condition.answer_type is AnswerType.CHOICE
        return self._paragraph(
            f"{case}/question_choice.txt" if choice else f"{case}/question.txt",
            return_a=format_number(round_.return_a * condition.stake_multiplier),
            return_b=format_number(round_.return_b * condition.stake_multiplier),
            options=BUDGET_OPTIONS,
        )

    def _preamble(self, condition: Condition) -> list[str]:
        case = self._case_of(condition)
        choice = condition.answer_type is AnswerType.CHOICE
        field_a, field_b = SCHEMA_FIELDS[case]
        paragraphs = [self._paragraph(f"{case}/instructions_choice.txt" if choice else f"{case}/instructions.txt")]
        if condition.include_example:
            paragraphs.append(self._paragraph(f"{case}/example.txt"))
        paragraphs.append(self._paragraph("budgetary/format.txt", field_a=field_a, field_b=field_b))
        return paragraphs

    def _check_budgetary(self, condition: Condition) -> Case:
        case = self._case_of(condition)
        if not case.is_budgetary:
            raise PromptError(f"{case} is a game; use render_game")
        return case

    def render_round_user(self, condition: Condition, round_: BudgetRound, is_first: bool) -> str:
        """
        User message for one round of a multi-turn dialogue.

        The first round carries the instructions, the worked example when enabled, and the
        schema; later rounds carry only the question and the schema reminder.
        """
        case = self._check_budgetary(condition)
        if round_.domain != case:
            raise PromptError(f"Round belongs to {round_.domain}, condition to {case}")
        choice = condition.answer_type is AnswerType.CHOICE
        paragraphs = self._preamble(condition) if is_first else []
        paragraphs.append(self._question(condition, round_))
        paragraphs.append(self._paragraph(f"{case}/reminder_choice.txt" if choice else f"{case}/reminder.txt"))
        return PARAGRAPH_SEPARATOR.join(paragraphs)

    def render_single_turn(self, condition: Condition, rounds: Sequence[BudgetRound]) -> str:
        case = self._check_budgetary(condition)
        if len(rounds) != ROUNDS_PER_SIMULATION:
            raise PromptError(f"Single-turn prompts need {ROUNDS_PER_SIMULATION} rounds, got {len(rounds)}")
        questions = [f"{n}. {self._question(condition, r)}" for n, r in enumerate(rounds, start=1)]
        closing = self._paragraph(f"{case}/closing.txt")
        return PARAGRAPH_SEPARATOR.join([*self._preamble(condition), *questions, closing])

    def render_budgetary(self, condition: Condition, rounds: Sequence[BudgetRound]) -> RenderedPrompt:
        system = self.render_system(condition)
        if condition.dialogue is DialogueType.SINGLE_TURN:
            return RenderedPrompt(system, (self.render_single_turn(condition, rounds),))
        turns = tuple(self.render_round_user(condition, r, is_first=i == 0) for i, r in enumerate(rounds))
        return RenderedPrompt(system, turns)

    def render_game(self, condition: Condition, scenario: GameScenario | Case | None = None) -> RenderedPrompt:
        """
        Greeting plus scenario body for a one-shot game.

        Multiple-choice conditions put the 21-option sentence in front of the question.
        """
        case = self._case_of(condition)
        spec = scenario if isinstance(scenario, GameScenario) else scenario_spec(scenario or case)
        if spec.id != case:
            raise PromptError(f"Condition {condition.name!r} is bound to {case}, not {spec.id}")
        if condition.dialogue is DialogueType.SINGLE_TURN:
            raise PromptError("Single-turn dialogue is not available for games")

        paragraphs = [self._paragraph(f"{case}/body.txt")]
        if condition.include_example:
            paragraphs.append(self._paragraph(f"{case}/example.txt"))
        question = self._paragraph(f"{case}/question.txt")
        if condition.answer_type is AnswerType.CHOICE:
            options = ", ".join(f"({format_number(v)})" for v in spec.options())
            question = f"{self._paragraph(f'{case}/options.txt', options=options)} {question}"
        paragraphs.append(question)

        greeting = self._paragraph("games/greeting.txt")
        return RenderedPrompt(self.render_system(condition), (greeting, PARAGRAPH_SEPARATOR.join(paragraphs)))


@lru_cache(maxsize=1)
def get_renderer() -> PromptRenderer:
    """Shared renderer over the repository's templates."""
    return PromptRenderer()


def render_system(condition: Condition) -> str:
    return get_renderer().render_system(condition)


def render_round_user(condition: Condition, round_: BudgetRound, is_first: bool) -> str:
    return get_renderer().render_round_user(condition, round_, is_first)


def render_single_turn(condition: Condition, rounds: Sequence[BudgetRound]) -> str:
    return get_renderer().render_single_turn(condition, rounds)


def render_game(condition: Condition, scenario: GameScenario | Case | None = None) -> RenderedPrompt:
    return get_renderer().render_game(condition, scenario)
