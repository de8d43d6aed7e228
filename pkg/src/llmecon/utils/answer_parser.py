"""
Decision extraction from raw completions.

Every completion maps to exactly one status: valid, refusal, format or constraint.
Nothing in this module raises on model output.
"""

from collections.abc import Sequence
from dataclasses import dataclass
import json
import math
import re
from typing import Any

from ..core.types import AnswerType, Case, Validity
from ..tasks.budget import ENDOWMENT, SUM_TOLERANCE, Allocation
from ..tasks.games import GRID_TOLERANCE, GameDecision, GameScenario, scenario_spec, validate_decision

FENCE_PATTERN = re.compile(r"```\s*json\s*(.*?)```", re.IGNORECASE | re.DOTALL)
BRACKET_PATTERN = re.compile(r"\[\[\s*(.*?)\s*\]\]", re.DOTALL)
NUMBER_PATTERN = re.compile(r"^\$?\s*([-+]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|[-+]?\.\d+)$")

REFUSAL_PATTERNS: tuple[re.Pattern[str], ...] = tuple(
    re.compile(p, re.IGNORECASE)
    for p in (
        r"\bas an ai\b",
        r"\bas a (?:large )?language model\b",
        r"\bcannot participate\b",
        r"\bnot capable of making decisions\b",
        r"\bI (?:can ?not|can't|won't|will not|am unable to|am not able to) "
        r"(?:make|provide|participate|choose|answer|decide|play|engage|give)\b",
        r"\bI(?:'m| am) (?:unable|not able) to (?:make|provide|participate|choose|decide)\b",
        r"\bI do(?:n't| not) have (?:personal )?(?:preferences|opinions|feelings|the ability)\b",
        r"\bI(?:'m| am) (?:sorry|afraid),? but I (?:can't|cannot)\b",
    )
)


@dataclass(frozen=True)
class ParseOutcome:
    status: Validity
    decision: Allocation | GameDecision | None = None
    detail: str = ""

    def __post_init__(self) -> None:
        if self.status is Validity.TRANSPORT_ERROR:
            raise ValueError("Parsing never produces transport errors")
        if (self.status is Validity.VALID) != (self.decision is not None):
            raise ValueError("A decision is present exactly when the status is valid")

    @property
    def is_valid(self) -> bool:
        return self.status is Validity.VALID


def _parse_number(raw: str) -> float | None:
    match = NUMBER_PATTERN.match(raw.strip())
    if not match:
        return None
    value = float(match.group(1).replace(",", ""))
    return value if math.isfinite(value) else None


def _has_decision_marker(text: str) -> bool:
    if FENCE_PATTERN.search(text):
        return True
    return any(_parse_number(m) is not None for m in BRACKET_PATTERN.findall(text))


def classify_refusal(text: str) -> bool:
    """
    True when `text` reads as a refusal to decide.

    Conservative: any fenced JSON block or numeric [[...]] marker means the model did
    answer, and empty text is a format problem rather than a refusal.
    """
    if not text.strip() or _has_decision_marker(text):
        return False
    return any(p.search(text) for p in REFUSAL_PATTERNS)


def _missing_marker(text: str, what: str) -> ParseOutcome:
    if classify_refusal(text):
        return ParseOutcome(Validity.REFUSAL, detail="refusal without a decision")
    if not text.strip():
        return ParseOutcome(Validity.FORMAT, detail="empty completion")
    return ParseOutcome(Validity.FORMAT, detail=f"no {what} found")


def _numeric_field(payload: dict[str, Any], name: str) -> float | None:
    value = payload.get(name)
    if isinstance(value, bool) or not isinstance(value, int | float) or not math.isfinite(value):
        return None
    return float(value)


def _parse_block(block: str, field_names: tuple[str, str], answer_type: AnswerType) -> ParseOutcome:
    try:
        payload = json.loads(block)
    except json.JSONDecodeError as e:
        return ParseOutcome(Validity.FORMAT, detail=f"invalid JSON: {e.msg}")
    if not isinstance(payload, dict):
        return ParseOutcome(Validity.FORMAT, detail="JSON content is not an object")

    missing = [name for name in field_names if name not in payload]
    if missing:
        return ParseOutcome(Validity.FORMAT, detail=f"missing fields {missing}")
    points = [_numeric_field(payload, name) for name in field_names]
    if any(p is None for p in points):
        return ParseOutcome(Validity.FORMAT, detail="fields must be numbers")
    points_a, points_b = float(points[0]), float(points[1])  # type: ignore[arg-type]

    for value in (points_a, points_b):
        if not 0 <= value <= ENDOWMENT:
            return ParseOutcome(
                Validity.CONSTRAINT, detail=f"{value:g} falls outside the specified range [0, {ENDOWMENT}]"
            )
    if abs(points_a + points_b - ENDOWMENT) > SUM_TOLERANCE:
        return ParseOutcome(
            Validity.CONSTRAINT, detail=f"points ({points_a:g}, {points_b:g}) do not sum to {ENDOWMENT}"
        )
    if answer_type is AnswerType.CHOICE and abs(points_a / 5 - round(points_a / 5)) > GRID_TOLERANCE:
        return ParseOutcome(Validity.CONSTRAINT, detail=f"({points_a:g}, {points_b:g}) is not one of the 21 options")
    return ParseOutcome(Validity.VALID, decision=Allocation(points_a, points_b))


def extract_json_allocation(
    text: str,
    field_names: tuple[str, str],
    expected_count: int = 1,
    answer_type: AnswerType = AnswerType.OPEN,
) -> list[ParseOutcome]:
    """
    Parse fenced JSON allocations.

    Args:
        text: Raw completion
        field_names: Schema keys for account A and account B
        expected_count: 1 for multi-turn rounds, 25 for single-turn batches
        answer_type: CHOICE additionally requires one of the 21 listed options

    Returns:
        list[ParseOutcome]: One outcome per block, in order, when the block count matches;
        otherwise a single outcome describing why the whole completion fails
    """
    if expected_count < 1:
        raise ValueError("expected_count must be at least 1")
    blocks = FENCE_PATTERN.findall(text)
    if not blocks:
        return [_missing_marker(text, "```json block")]
    if len(blocks) != expected_count:
        return [ParseOutcome(Validity.FORMAT, detail=f"expected {expected_count} json blocks, found {len(blocks)}")]
    return [_parse_block(block, field_names, answer_type) for block in blocks]


def extract_bracket_value(
    text: str,
    scenario: GameScenario | Case,
    answer_type: AnswerType = AnswerType.OPEN,
) -> ParseOutcome:
    """Parse the first [[v]] marker; extra markers are noted in the detail and ignored."""
    spec = scenario if isinstance(scenario, GameScenario) else scenario_spec(scenario)
    matches = BRACKET_PATTERN.findall(text)
    if not matches:
        return _missing_marker(text, "[[...]] marker")

    note = f"; ignored {len(matches) - 1} further [[...]] markers" if len(matches) > 1 else ""
    value = _parse_number(matches[0])
    if value is None:
        return ParseOutcome(Validity.FORMAT, detail=f"[[{matches[0]}]] is not a number{note}")
    check = validate_decision(spec, value, answer_type)
    if not check.valid:
        return ParseOutcome(Validity.CONSTRAINT, detail=f"{check.reason}{note}")
    return ParseOutcome(Validity.VALID, decision=GameDecision(spec.id, value), detail=note.lstrip("; "))


def summarize_batch(outcomes: Sequence[ParseOutcome], expected_count: int) -> ParseOutcome | None:
    """First failing outcome of a batch, or None when all `expected_count` entries are valid."""
    if len(outcomes) != expected_count:
        return next((o for o in outcomes if not o.is_valid), ParseOutcome(Validity.FORMAT, detail="wrong count"))
    return next((o for o in outcomes if not o.is_valid), None)
