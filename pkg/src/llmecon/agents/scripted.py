"""
Scripted agents: deterministic stand-ins for a chat endpoint.

An agent reads the rendered prompt (the returns shown in the last user message, or the
game scenario) and answers in the protocol's format, either correctly according to a
fixed policy or deliberately malformed.
"""

from collections.abc import Mapping
from dataclasses import dataclass
from enum import StrEnum
import json
import re

from loguru import logger
import numpy as np

from ..core.types import Case
from ..prompts.renderer import SCHEMA_FIELDS, format_number
from ..tasks.budget import ENDOWMENT, ROUNDS_PER_SIMULATION
from ..tasks.games import GameScenario, scenario_spec

Message = dict[str, str]

GREETING_REPLY = "Sure! Let's play."
REFUSAL_REPLY = "As an AI language model, I cannot participate in surveys nor accept tokens as payment."

EXAMPLE_PATTERN = re.compile(r"\[Suppose.*?\]", re.DOTALL)
RETURNS_PATTERN = re.compile(r"returns (\d+(?:\.\d+)?) dollars, and [^.?]*? returns (\d+(?:\.\d+)?) dollars")
GAME_MARKERS: tuple[tuple[str, Case], ...] = (
    ("the other player simply receives your choice", Case.DICTATOR),
    ("You are the Proposer", Case.ULTIMATUM_PROPOSER),
    ("You are the Responder", Case.ULTIMATUM_RESPONDER),
    ("public good game", Case.PUBLIC_GOODS),
    ("one bomb has been randomly placed", Case.BOMB_RISK),
)


class ScriptedPolicy(StrEnum):
    CORNER_MAXIMIZER = "corner_maximizer"
    UNIFORM_RANDOM = "uniform_random"
    FIXED_MIDPOINT = "fixed_midpoint"
    COBB_DOUGLAS = "cobb_douglas"
    LEONTIEF = "leontief"
    MALFORMED = "malformed"


class MalformedMode(StrEnum):
    NO_FENCE = "no_fence"
    BAD_SUM = "bad_sum"
    REFUSAL = "refusal"
    BAD_JSON = "bad_json"
    WRONG_COUNT = "wrong_count"


class UnparsablePromptError(ValueError):
    """Raised when a scripted agent does not recognize the prompt it was given."""


@dataclass(frozen=True)
class PromptView:
    """What a scripted agent reads off the last user message."""

    case: Case | None
    returns: tuple[tuple[float, float], ...] = ()
    choice: bool = False
    greeting: bool = False

    @property
    def batch(self) -> bool:
        return len(self.returns) > 1


def read_prompt(messages: list[Message]) -> PromptView:
    user_turns = [m["content"] for m in messages if m["role"] == "user"]
    if not user_turns:
        raise UnparsablePromptError("No user message to answer")
    text = user_turns[-1]
    choice = "21 options" in text

    if text.strip() == "Hi, let's play a game.":
        return PromptView(case=None, greeting=True)
    for marker, case in GAME_MARKERS:
        if marker in text:
            return PromptView(case=case, choice=choice)

    returns = tuple((float(a), float(b)) for a, b in RETURNS_PATTERN.findall(EXAMPLE_PATTERN.sub("", text)))
    if not returns:
        raise UnparsablePromptError(f"No returns found in prompt: {text[:120]!r}")
    if "Asset A" in text:
        case = Case.RISK
    elif "yourself" in text:
        case = Case.SOCIAL
    else:
        raise UnparsablePromptError("Prompt matches neither the risk nor the social protocol")
    if len(returns) not in (1, ROUNDS_PER_SIMULATION):
        raise UnparsablePromptError(f"Expected 1 or {ROUNDS_PER_SIMULATION} questions, found {len(returns)}")
    return PromptView(case=case, returns=returns, choice=choice)


def _snap(value: float, step: float, low: float = 0.0) -> float:
    return float(low + step * round((value - low) / step))


def _allocation_block(case: Case, points_a: float) -> str:
    field_a, field_b = SCHEMA_FIELDS[case]
    body = json.dumps({field_a: points_a, field_b: ENDOWMENT - points_a}, indent=4)
    return f"```json\n{body}\n```"


def _bracket(scenario: GameScenario, value: float) -> str:
    currency = "$" if scenario.unit_label == "$" and scenario.id is not Case.PUBLIC_GOODS else ""
    return f"[[{currency}{format_number(value)}]]"


class ScriptedAgent:
    """
    Answers budget rounds and games with a fixed policy.

    Args:
        policy: Decision rule
        share: Cobb-Douglas expenditure share on account A
        mode: Malformation applied by the MALFORMED policy
        seed: Seed of the UNIFORM_RANDOM stream
    """

    def __init__(
        self,
        policy: ScriptedPolicy,
        share: float = 0.5,
        mode: MalformedMode = MalformedMode.NO_FENCE,
        seed: int = 0,
    ) -> None:
        if not 0 <= share <= 1:
            raise ValueError(f"Cobb-Douglas share must lie in [0, 1], got {share}")
        self.policy = policy
        self.share = share
        self.mode = mode
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.calls = 0

    @property
    def model_id(self) -> str:
        if self.policy is ScriptedPolicy.COBB_DOUGLAS:
            return f"scripted:cobb_douglas:{self.share:g}"
        if self.policy is ScriptedPolicy.MALFORMED:
            return f"scripted:malformed:{self.mode}"
        return f"scripted:{self.policy}"

    def points_a(self, return_a: float, return_b: float) -> float:
        match self.policy:
            case ScriptedPolicy.CORNER_MAXIMIZER:
                return float(ENDOWMENT) if return_a >= return_b else 0.0
            case ScriptedPolicy.UNIFORM_RANDOM:
                return float(self.rng.uniform(0.0, ENDOWMENT))
            case ScriptedPolicy.COBB_DOUGLAS:
                return ENDOWMENT * self.share
            case ScriptedPolicy.LEONTIEF:
                # equal dollar amounts in both accounts
                return ENDOWMENT * return_b / (return_a + return_b)
            case _:
                return ENDOWMENT / 2

    def game_value(self, scenario: GameScenario) -> float:
        match self.policy:
            case ScriptedPolicy.CORNER_MAXIMIZER:
                # expected-payoff maximum of the bomb game, selfish corner elsewhere
                return 50.0 if scenario.id is Case.BOMB_RISK else scenario.feasible_min
            case ScriptedPolicy.UNIFORM_RANDOM:
                draw = float(self.rng.uniform(scenario.feasible_min, scenario.feasible_max))
                return float(round(draw)) if scenario.whole_units else round(draw, 2)
            case ScriptedPolicy.COBB_DOUGLAS:
                value = scenario.feasible_min + self.share * scenario.interval_length
                return float(round(value)) if scenario.whole_units else value
            case _:
                return scenario.feasible_min + scenario.interval_length / 2

    def _budget_reply(self, view: PromptView) -> str:
        assert view.case is not None
        blocks: list[str] = []
        for return_a, return_b in view.returns:
            points = self.points_a(return_a, return_b)
            if view.choice:
                points = _snap(points, 5.0)
            blocks.append(_allocation_block(view.case, points))

        if self.policy is ScriptedPolicy.MALFORMED:
            field_a, field_b = SCHEMA_FIELDS[view.case]
            match self.mode:
                case MalformedMode.NO_FENCE:
                    return json.dumps({field_a: 50.0, field_b: 50.0})
                case MalformedMode.BAD_SUM:
                    bad = f"```json\n{json.dumps({field_a: 60.0, field_b: 30.0}, indent=4)}\n```"
                    blocks = [bad] * len(blocks)
                case MalformedMode.REFUSAL:
                    return REFUSAL_REPLY
                case MalformedMode.BAD_JSON:
                    blocks = [f'```json\n{{"{field_a}": 50, "{field_b}": }}\n```'] * len(blocks)
                case MalformedMode.WRONG_COUNT:
                    blocks = blocks[:-1] if view.batch else blocks * 2

        return "\n\n".join(blocks)

    def _game_reply(self, view: PromptView) -> str:
        assert view.case is not None
        scenario = scenario_spec(view.case)
        value = self.game_value(scenario)
        if view.choice:
            value = min(max(_snap(value, scenario.option_step, scenario.feasible_min), 0.0), scenario.feasible_max)

        if self.policy is ScriptedPolicy.MALFORMED:
            match self.mode:
                case MalformedMode.NO_FENCE:
                    return f"My choice is {format_number(value)}."
                case MalformedMode.BAD_SUM:
                    value = scenario.feasible_max + 50
                case MalformedMode.REFUSAL:
                    return "As an AI language model, I am not capable of making decisions on my own."
                case MalformedMode.BAD_JSON:
                    return "My choice is [[about half]]."
                case MalformedMode.WRONG_COUNT:
                    return f"My choice is {_bracket(scenario, value)}, or maybe {_bracket(scenario, value)}."
        return f"My choice is {_bracket(scenario, value)}."

    def chat(self, messages: list[Message], temperature: float | None = None) -> str:
        self.calls += 1
        view = read_prompt(messages)
        if view.greeting:
            return GREETING_REPLY
        if view.case is not None and view.case.is_game:
            return self._game_reply(view)
        return self._budget_reply(view)


class CannedAgent:
    """Returns the same text for every request."""

    def __init__(self, reply: str, model_id: str = "scripted:canned") -> None:
        self.reply = reply
        self.model_id = model_id
        self.calls = 0

    def chat(self, messages: list[Message], temperature: float | None = None) -> str:
        self.calls += 1
        return self.reply


class FaultyAgent:
    """
    Wraps an agent and injects faults on chosen calls.

    Args:
        inner: Agent answering all other calls
        faults: 1-based call number mapped to a reply text or an exception to raise
    """

    def __init__(self, inner: "ScriptedAgent | CannedAgent", faults: Mapping[int, str | Exception]) -> None:
        self.inner = inner
        self.faults = dict(faults)
        self.calls = 0
        self.requests: list[list[Message]] = []

    @property
    def model_id(self) -> str:
        return self.inner.model_id

    def chat(self, messages: list[Message], temperature: float | None = None) -> str:
        self.calls += 1
        self.requests.append([dict(m) for m in messages])
        fault = self.faults.get(self.calls)
        if isinstance(fault, Exception):
            logger.debug(f"Injected fault on call {self.calls}: {fault!r}")
            raise fault
        if fault is not None:
            return fault
        return self.inner.chat(messages, temperature)


def parse_mock(spec: str) -> tuple[ScriptedPolicy, str | None]:
    """Split `policy[:argument]`, e.g. `cobb_douglas:0.3` or `malformed:no_fence`."""
    name, _, argument = spec.partition(":")
    try:
        policy = ScriptedPolicy(name.strip())
    except ValueError:
        valid = ", ".join(p.value for p in ScriptedPolicy)
        raise ValueError(f"Unknown scripted policy {name!r}; expected one of {valid}") from None
    return policy, argument.strip() or None


def scripted_agent(spec: str | ScriptedPolicy, seed: int = 0) -> ScriptedAgent:
    """
    Build a scripted agent from a policy name with an optional argument.

    Raises:
        ValueError: If the policy or its argument is not recognized
    """
    policy, argument = parse_mock(spec) if isinstance(spec, str) else (spec, None)
    if policy is ScriptedPolicy.COBB_DOUGLAS:
        return ScriptedAgent(policy, share=float(argument) if argument else 0.5, seed=seed)
    if policy is ScriptedPolicy.MALFORMED:
        return ScriptedAgent(policy, mode=MalformedMode(argument or MalformedMode.NO_FENCE), seed=seed)
    if argument:
        raise ValueError(f"Policy {policy} takes no argument, got {argument!r}")
    return ScriptedAgent(policy, seed=seed)
