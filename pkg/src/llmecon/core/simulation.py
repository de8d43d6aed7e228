"""
The dialogue loop of one simulation.

Multi-turn budget simulations ask the 25 rounds one at a time, resending the system
message and every earlier valid exchange. An invalid answer is dropped from that context
(unless the condition keeps it) and the round is asked again. Single-turn simulations ask
all 25 questions at once and retry the whole batch. Games send the greeting first and
then the scenario.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

from loguru import logger

from ..prompts.renderer import SCHEMA_FIELDS, PromptRenderer, get_renderer
from ..tasks.budget import BudgetRound
from ..tasks.games import GameDecision
from ..utils.answer_parser import ParseOutcome, extract_bracket_value, extract_json_allocation, summarize_batch
from .conditions import Condition
from .llm_processor import Message, TransportError
from .transcript import SimulationResult, Transcript, Turn
from .types import DialogueType, Validity

if TYPE_CHECKING:
    from ..agents import AgentProtocol

DEFAULT_MAX_RETRIES_PER_ROUND = 10


@dataclass
class Exchange:
    """A user message and the labelled answer it received."""

    user: str
    reply: str
    validity: Validity
    outcomes: list[ParseOutcome]
    detail: str = ""

    @property
    def messages(self) -> list[Message]:
        return [{"role": "user", "content": self.user}, {"role": "assistant", "content": self.reply}]


class SimulationRunner:
    """
    Runs one simulation against one agent and records its transcript.

    Args:
        condition: Condition bound to a case
        agent: Chat client or scripted agent
        simulation_id: Identifier used in the transcript header and results
        seed: Simulation seed, recorded in the result
        max_retries_per_round: Re-asks allowed per round before the simulation is abandoned
        transcript_path: JSON-lines file mirroring the transcript; in memory only when None
    """

    def __init__(
        self,
        condition: Condition,
        agent: "AgentProtocol",
        simulation_id: str,
        seed: int,
        max_retries_per_round: int = DEFAULT_MAX_RETRIES_PER_ROUND,
        transcript_path: Path | None = None,
        renderer: PromptRenderer | None = None,
    ) -> None:
        if condition.case is None:
            raise ValueError(f"Condition {condition.name!r} is not bound to a case")
        if max_retries_per_round < 1:
            raise ValueError("max_retries_per_round must be at least 1")
        self.condition = condition
        self.case = condition.case
        self.agent = agent
        self.simulation_id = simulation_id
        self.seed = seed
        self.max_retries_per_round = max_retries_per_round
        self.renderer = renderer or get_renderer()
        self.transcript = Transcript(simulation_id, condition, transcript_path)
        self._context: list[Message] = []

    def _start(self, system: str) -> None:
        self._context = [{"role": "system", "content": system}]
        self.transcript.append(Turn("system", system, round_index=0))

    def _parse(self, reply: str, expected_count: int) -> list[ParseOutcome]:
        if self.case.is_game:
            return [extract_bracket_value(reply, self.case, self.condition.answer_type)]
        return extract_json_allocation(reply, SCHEMA_FIELDS[self.case], expected_count, self.condition.answer_type)

    def _exchange(self, user: str, round_index: int, expected_count: int = 1, parse: bool = True) -> Exchange:
        """Send `user` after the current context and record both turns."""
        self.transcript.append(Turn("user", user, round_index=round_index))
        try:
            reply = self.agent.chat([*self._context, {"role": "user", "content": user}], self.condition.temperature)
        except TransportError as e:
            logger.warning(f"{self.simulation_id} round {round_index}: transport error after retries: {e}")
            exchange = Exchange(user, "", Validity.TRANSPORT_ERROR, [], detail=str(e))
        else:
            outcomes = self._parse(reply, expected_count) if parse else []
            failure = summarize_batch(outcomes, expected_count) if parse else None
            if failure is None:
                exchange = Exchange(user, reply, Validity.VALID, outcomes)
            else:
                exchange = Exchange(user, reply, failure.status, outcomes, detail=failure.detail)
                logger.warning(f"{self.simulation_id} round {round_index}: {failure.status} answer ({failure.detail})")

        decision: list[float] | list[list[float]] | None = None
        if exchange.validity is Validity.VALID and exchange.outcomes:
            decisions = [_decision_values(o) for o in exchange.outcomes]
            decision = decisions[0] if expected_count == 1 else decisions
        self.transcript.append(
            Turn(
                "assistant",
                exchange.reply,
                round_index=round_index,
                validity=exchange.validity,
                decision=decision,
                detail=exchange.detail,
            )
        )
        return exchange

    def _ask_until_valid(self, user: str, round_index: int, expected_count: int = 1) -> Exchange | None:
        """Ask until a valid answer arrives or the round's retry budget is spent."""
        for attempt in range(self.max_retries_per_round + 1):
            exchange = self._exchange(user, round_index, expected_count)
            if exchange.validity is Validity.VALID:
                self._context += exchange.messages
                return exchange
            if self.condition.keep_invalid_in_context and exchange.validity is not Validity.TRANSPORT_ERROR:
                self._context += exchange.messages
            logger.debug(f"{self.simulation_id} round {round_index}: attempt {attempt + 1} invalid")
        logger.warning(
            f"{self.simulation_id}: round {round_index} still invalid after "
            f"{self.max_retries_per_round} retries, abandoning simulation"
        )
        return None

    def _run_budget(self, rounds: Sequence[BudgetRound]) -> tuple[list[tuple[float, float]], bool]:
        prompt = self.renderer.render_budgetary(self.condition, rounds)
        self._start(prompt.system)
        allocations: list[tuple[float, float]] = []

        if self.condition.dialogue is DialogueType.SINGLE_TURN:
            exchange = self._ask_until_valid(prompt.user_turns[0], round_index=1, expected_count=len(rounds))
            if exchange is None:
                return allocations, False
            return [_allocation_values(o) for o in exchange.outcomes], True

        for round_, user in zip(rounds, prompt.user_turns, strict=True):
            exchange = self._ask_until_valid(user, round_.round_index)
            if exchange is None:
                return allocations, False
            allocations.append(_allocation_values(exchange.outcomes[0]))
        return allocations, True

    def _run_game(self) -> tuple[list[float], bool]:
        prompt = self.renderer.render_game(self.condition)
        self._start(prompt.system)
        greeting, body = prompt.user_turns

        for _ in range(self.max_retries_per_round + 1):
            exchange = self._exchange(greeting, round_index=0, parse=False)
            if exchange.validity is Validity.VALID:
                self._context += exchange.messages
                break
        else:
            logger.warning(
                f"{self.simulation_id}: greeting still unanswered after "
                f"{self.max_retries_per_round} retries, abandoning simulation"
            )
            return [], False

        exchange_or_none = self._ask_until_valid(body, round_index=1)
        if exchange_or_none is None:
            return [], False
        decision = exchange_or_none.outcomes[0].decision
        assert isinstance(decision, GameDecision)
        return [decision.value], True

    def run(self, rounds: Sequence[BudgetRound] | None = None) -> SimulationResult:
        allocations: list[tuple[float, float]] = []
        game_values: list[float] = []
        if self.case.is_game:
            game_values, completed = self._run_game()
        else:
            if not rounds:
                raise ValueError(f"{self.case} simulations need their budget rounds")
            allocations, completed = self._run_budget(rounds)

        result = SimulationResult(
            simulation_id=self.simulation_id,
            condition=self.condition,
            model_id=self.agent.model_id,
            seed=self.seed,
            allocations=allocations,
            game_values=game_values,
            invalid_counts=self.transcript.invalid_counts(),
            assistant_turns=len(self.transcript.assistant_turns),
            completed=completed,
        )
        if completed:
            logger.info(f"{self.simulation_id}: completed with {result.total_invalid} invalid answers")
        else:
            logger.warning(f"{self.simulation_id}: incomplete")
        return result


def _allocation_values(outcome: ParseOutcome) -> tuple[float, float]:
    values = _decision_values(outcome)
    return values[0], values[1]


def _decision_values(outcome: ParseOutcome) -> list[float]:
    decision = outcome.decision
    if decision is None:
        raise ValueError("Only valid outcomes carry decision values")
    if isinstance(decision, GameDecision):
        return [decision.value]
    return [decision.points_a, decision.points_b]


def run_simulation(
    condition: Condition,
    agent: "AgentProtocol",
    seed: int,
    rounds: Sequence[BudgetRound] | None = None,
    simulation_id: str = "sim",
    max_retries_per_round: int = DEFAULT_MAX_RETRIES_PER_ROUND,
    transcript_path: Path | None = None,
) -> tuple[SimulationResult, Transcript]:
    """
    Run one simulation.

    Args:
        condition: Condition bound to a risk, social or game case
        agent: Chat client or scripted agent
        seed: Simulation seed, recorded in the result
        rounds: The 25 budget rounds; ignored for games

    Returns:
        tuple[SimulationResult, Transcript]: Result and full transcript, including invalid turns

    Raises:
        AuthenticationError: If the endpoint rejects the credential
    """
    runner = SimulationRunner(
        condition,
        agent,
        simulation_id=simulation_id,
        seed=seed,
        max_retries_per_round=max_retries_per_round,
        transcript_path=transcript_path,
    )
    result = runner.run(rounds)
    return result, runner.transcript
