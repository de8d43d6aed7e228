"""Tests for decision extraction, driven by the labelled completions in tests/fixtures/completions."""

import math
from pathlib import Path
from typing import Any

import pandas as pd
import pytest

from llmecon.core.types import AnswerType, Case, Validity
from llmecon.prompts import SCHEMA_FIELDS
from llmecon.tasks.budget import Allocation
from llmecon.tasks.games import GameDecision
from llmecon.utils.answer_parser import (
    ParseOutcome,
    classify_refusal,
    extract_bracket_value,
    extract_json_allocation,
    summarize_batch,
)

COMPLETIONS = Path(__file__).parent / "fixtures" / "completions"
LABELS = pd.read_csv(COMPLETIONS / "labels.csv", dtype={"expected_value": float})


def parse(text: str, case: Case, answer_type: AnswerType) -> ParseOutcome:
    if case.is_budgetary:
        outcomes = extract_json_allocation(text, SCHEMA_FIELDS[case], answer_type=answer_type)
        assert len(outcomes) == 1
        return outcomes[0]
    return extract_bracket_value(text, case, answer_type)


def decision_value(outcome: ParseOutcome) -> float:
    if isinstance(outcome.decision, Allocation):
        return outcome.decision.points_a
    assert isinstance(outcome.decision, GameDecision)
    return outcome.decision.value


def test_corpus_covers_every_case_and_status() -> None:
    assert len(LABELS) >= 60
    assert set(LABELS["case"]) == {c.value for c in Case}
    assert set(LABELS["expected_status"]) == {"valid", "refusal", "format", "constraint"}


@pytest.mark.parametrize("row", LABELS.to_dict("records"), ids=list(LABELS["file"]))
def test_labelled_completion(row: dict[str, Any]) -> None:
    """Each completion parses to its labelled status, and valid ones to the labelled value."""
    text = (COMPLETIONS / row["file"]).read_text(encoding="utf-8")
    outcome = parse(text, Case(row["case"]), AnswerType(row["answer_type"]))

    assert outcome.status == Validity(row["expected_status"]), outcome.detail
    if outcome.is_valid:
        assert decision_value(outcome) == pytest.approx(row["expected_value"])
    else:
        assert math.isnan(row["expected_value"])
        assert outcome.decision is None
        assert outcome.detail


def _block(a: float, b: float) -> str:
    return f'```json\n{{"Points allocated to yourself": {a}, "Points allocated to the other one": {b}}}\n```'


def test_single_turn_batch_of_25() -> None:
    text = "\n\n".join(f"Round {k}:\n{_block(4 * k, 100 - 4 * k)}" for k in range(1, 26))
    outcomes = extract_json_allocation(text, SCHEMA_FIELDS[Case.SOCIAL], expected_count=25)
    assert len(outcomes) == 25
    assert [o.decision.points_a for o in outcomes if isinstance(o.decision, Allocation)] == [
        4 * k for k in range(1, 26)
    ]
    assert summarize_batch(outcomes, 25) is None


def test_single_turn_batch_with_wrong_count_fails_as_a_whole() -> None:
    text = "\n".join(_block(50, 50) for _ in range(24))
    outcomes = extract_json_allocation(text, SCHEMA_FIELDS[Case.SOCIAL], expected_count=25)
    assert len(outcomes) == 1
    assert outcomes[0].status is Validity.FORMAT
    assert "expected 25" in outcomes[0].detail


def test_single_turn_batch_reports_first_failure() -> None:
    blocks = [_block(50, 50)] * 25
    blocks[3] = _block(70, 40)
    blocks[9] = "```json\n{}\n```"
    outcomes = extract_json_allocation("\n".join(blocks), SCHEMA_FIELDS[Case.SOCIAL], expected_count=25)
    failure = summarize_batch(outcomes, 25)
    assert failure is not None
    assert failure.status is Validity.CONSTRAINT


@pytest.mark.parametrize(
    "text,expected",
    [
        ("As an AI, I do not have personal preferences.", True),
        ("I'm afraid, but I cannot choose for you.", True),
        ("I won't participate in gambling games.", True),
        ("", False),
        ("I give [[$40]]. As an AI I have no preferences, though.", False),
        ("As an AI language model:\n```json\n{}\n```", False),
        ("I would rather keep everything for myself.", False),
    ],
)
def test_classify_refusal(text: str, expected: bool) -> None:
    assert classify_refusal(text) is expected


def test_extra_markers_are_noted() -> None:
    outcome = extract_bracket_value("[[$40]] or [[$50]] or [[$60]]", Case.DICTATOR)
    assert outcome.is_valid
    assert "ignored 2 further" in outcome.detail


def test_parse_outcome_invariants() -> None:
    with pytest.raises(ValueError):
        ParseOutcome(Validity.VALID)
    with pytest.raises(ValueError):
        ParseOutcome(Validity.FORMAT, decision=GameDecision(Case.DICTATOR, 10))
    with pytest.raises(ValueError):
        ParseOutcome(Validity.TRANSPORT_ERROR)


def test_expected_count_must_be_positive() -> None:
    with pytest.raises(ValueError):
        extract_json_allocation("", SCHEMA_FIELDS[Case.RISK], expected_count=0)
