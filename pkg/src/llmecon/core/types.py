"""Enumerations shared across the task, prompt, runtime and analysis layers."""

from enum import StrEnum


class Case(StrEnum):
    """An experimental case: one of the two budgetary domains or one of the five game scenarios."""

    RISK = "risk"
    SOCIAL = "social"
    DICTATOR = "dictator"
    ULTIMATUM_PROPOSER = "ultimatum_proposer"
    ULTIMATUM_RESPONDER = "ultimatum_responder"
    PUBLIC_GOODS = "public_goods"
    BOMB_RISK = "bomb_risk"

    @property
    def is_budgetary(self) -> bool:
        return self in (Case.RISK, Case.SOCIAL)

    @property
    def is_game(self) -> bool:
        return not self.is_budgetary


BUDGETARY_CASES: tuple[Case, ...] = (Case.RISK, Case.SOCIAL)
GAME_CASES: tuple[Case, ...] = (
    Case.DICTATOR,
    Case.ULTIMATUM_PROPOSER,
    Case.ULTIMATUM_RESPONDER,
    Case.PUBLIC_GOODS,
    Case.BOMB_RISK,
)


class AnswerType(StrEnum):
    OPEN = "open"
    CHOICE = "choice"


class DialogueType(StrEnum):
    MULTI_TURN = "multi_turn"
    SINGLE_TURN = "single_turn"


class Validity(StrEnum):
    """Label carried by every assistant turn of a transcript."""

    VALID = "valid"
    REFUSAL = "refusal"
    FORMAT = "format"
    CONSTRAINT = "constraint"
    TRANSPORT_ERROR = "transport_error"


INVALID_CLASSES: tuple[Validity, ...] = (
    Validity.REFUSAL,
    Validity.FORMAT,
    Validity.CONSTRAINT,
    Validity.TRANSPORT_ERROR,
)
