"""Tests for the one-shot game scenarios and their payoffs."""

import numpy as np
import pytest

from llmecon.core.types import GAME_CASES, AnswerType, Case
from llmecon.tasks.games import (
    OPTION_COUNT,
    expected_bomb_payoff,
    payoff_bomb,
    payoff_dictator,
    payoff_public_goods,
    payoff_ultimatum,
    scenario_spec,
    validate_decision,
)


@pytest.mark.parametrize(
    "case, low, high, step, length",
    [
        (Case.DICTATOR, 0, 100, 5, 100),
        (Case.ULTIMATUM_PROPOSER, 0, 100, 5, 100),
        (Case.ULTIMATUM_RESPONDER, 0, 100, 5, 100),
        (Case.PUBLIC_GOODS, 0, 20, 1, 20),
        (Case.BOMB_RISK, 0, 100, 5, 100),
    ],
)
def test_scenario_spec(case: Case, low: float, high: float, step: float, length: float) -> None:
    scenario = scenario_spec(case)
    assert (scenario.feasible_min, scenario.feasible_max, scenario.option_step) == (low, high, step)
    assert scenario.interval_length == length


@pytest.mark.parametrize("case", GAME_CASES)
def test_option_grid(case: Case) -> None:
    scenario = scenario_spec(case)
    options = scenario.options()
    assert len(options) == OPTION_COUNT
    assert options[0] == scenario.feasible_min
    assert options[-1] == scenario.feasible_max
    assert np.all(np.diff(options) > 0)
    assert all(scenario.on_grid(float(v)) for v in options)


@pytest.mark.parametrize("case", [Case.RISK, Case.SOCIAL])
def test_budget_domains_have_no_scenario(case: Case) -> None:
    with pytest.raises(ValueError):
        scenario_spec(case)


@pytest.mark.parametrize("given, expected", [(40, (60, 40)), (0, (100, 0)), (100, (0, 100))])
def test_payoff_dictator(given: float, expected: tuple[float, float]) -> None:
    assert payoff_dictator(given) == expected


@pytest.mark.parametrize(
    "offer, min_accept, expected",
    [(40, 40, (60, 40)), (0, 0, (100, 0)), (30, 35, (0, 0))],
)
def test_payoff_ultimatum(offer: float, min_accept: float, expected: tuple[float, float]) -> None:
    assert payoff_ultimatum(offer, min_accept) == expected


def test_ultimatum_payoffs_over_grid() -> None:
    grid = scenario_spec(Case.ULTIMATUM_PROPOSER).options()
    for offer in grid:
        for threshold in grid:
            proposer, responder = payoff_ultimatum(float(offer), float(threshold))
            assert proposer + responder == (100 if offer >= threshold else 0)


@pytest.mark.parametrize("own, total, expected", [(12, 20, 18), (0, 0, 20), (20, 80, 40)])
def test_payoff_public_goods(own: float, total: float, expected: float) -> None:
    assert payoff_public_goods(own, total) == expected


@pytest.mark.parametrize("own, total", [(25, 30), (10, 5), (5, 70)])
def test_public_goods_rejects_inconsistent_totals(own: float, total: float) -> None:
    with pytest.raises(ValueError):
        payoff_public_goods(own, total)


@pytest.mark.parametrize("boxes, bomb, expected", [(60, True, 0), (0, False, 0), (35, False, 35)])
def test_payoff_bomb(boxes: int, bomb: bool, expected: float) -> None:
    assert payoff_bomb(boxes, bomb) == expected


def test_expected_bomb_payoff_matches_enumeration() -> None:
    assert expected_bomb_payoff(50) == 25
    for boxes in range(0, 101, 5):
        # the bomb sits in box k = 1..100; the first `boxes` boxes are opened
        enumerated = np.mean([payoff_bomb(boxes, k <= boxes) for k in range(1, 101)])
        assert expected_bomb_payoff(boxes) == pytest.approx(enumerated)


@pytest.mark.parametrize(
    "case, value, answer_type, valid",
    [
        (Case.DICTATOR, 50, AnswerType.OPEN, True),
        (Case.DICTATOR, 52, AnswerType.OPEN, True),
        (Case.DICTATOR, 52, AnswerType.CHOICE, False),
        (Case.DICTATOR, 55, AnswerType.CHOICE, True),
        (Case.PUBLIC_GOODS, 25, AnswerType.OPEN, False),
        (Case.PUBLIC_GOODS, 13, AnswerType.CHOICE, True),
        (Case.BOMB_RISK, -5, AnswerType.OPEN, False),
        (Case.BOMB_RISK, 37, AnswerType.OPEN, True),
        (Case.BOMB_RISK, 37.5, AnswerType.OPEN, False),
        (Case.DICTATOR, 37.5, AnswerType.OPEN, True),
        (Case.ULTIMATUM_RESPONDER, float("nan"), AnswerType.OPEN, False),
    ],
)
def test_validate_decision(case: Case, value: float, answer_type: AnswerType, valid: bool) -> None:
    check = validate_decision(scenario_spec(case), value, answer_type)
    assert check.valid is valid
    assert (check.reason is None) is valid
