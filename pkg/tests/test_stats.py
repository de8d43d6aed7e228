"""Tests for the hypothesis tests, p-value grids and dispersion measures."""

from collections.abc import Iterator
from pathlib import Path
import random

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from llmecon.analysis.stats import (
    IncompleteGridError,
    PValueGrid,
    empirical_cdf,
    fdr_adjust,
    mean_difference_ci,
    normalized_std,
    proportion_test,
    sensitivity,
    t_test,
    turing_test,
)
from llmecon.core.types import Case

HUMAN_REFERENCE = Path(__file__).parent / "fixtures" / "human_reference.csv"


class TestTTest:
    @pytest.mark.parametrize("variant,equal_var", [("pooled", True), ("welch", False)])
    def test_matches_scipy(self, variant: str, equal_var: bool) -> None:
        rng = np.random.default_rng(1)
        for n_a, n_b, shift in [(10, 10, 0.0), (25, 40, 0.5), (8, 30, -1.2)]:
            a = rng.normal(0.9, 0.05, n_a)
            b = rng.normal(0.9 + shift * 0.05, 0.08, n_b)
            ours = t_test(a, b, variant)  # type: ignore[arg-type]
            reference = stats.ttest_ind(a, b, equal_var=equal_var)
            assert ours.t_statistic == pytest.approx(reference.statistic)
            assert ours.p_value == pytest.approx(reference.pvalue)

    def test_textbook_example(self) -> None:
        result = t_test([1, 2, 3, 4, 5], [3, 4, 5, 6, 7])
        assert result.t_statistic == pytest.approx(-2.0)
        assert result.degrees_of_freedom == 8
        assert result.p_value == pytest.approx(0.0805, abs=1e-4)

    def test_calibrated_under_the_null(self) -> None:
        """About 5% of tests between samples of one distribution reject at 0.05."""
        rng = np.random.default_rng(2024)
        rejections = sum(t_test(rng.normal(size=30), rng.normal(size=30)).p_value < 0.05 for _ in range(1000))
        assert 0.03 <= rejections / 1000 <= 0.07

    def test_zero_variance(self) -> None:
        equal = t_test([1.0, 1.0, 1.0], [1.0, 1.0])
        assert equal.p_value == 1.0
        assert equal.detail
        different = t_test([1.0, 1.0], [0.5, 0.5])
        assert different.p_value == 0.0
        assert different.t_statistic == np.inf

    @pytest.mark.parametrize("a,b", [([1.0], [1.0, 2.0]), ([1.0, np.nan], [1.0, 2.0]), ([], [])])
    def test_rejects_bad_samples(self, a: list[float], b: list[float]) -> None:
        with pytest.raises(ValueError):
            t_test(a, b)

    def test_confidence_interval_agrees_with_test(self) -> None:
        rng = np.random.default_rng(5)
        for shift in np.linspace(0, 1, 11):
            a, b = rng.normal(shift, 1, 20), rng.normal(0, 1, 20)
            ci = mean_difference_ci(a, b)
            assert ci.ci_low <= ci.difference <= ci.ci_high
            assert (ci.ci_low > 0 or ci.ci_high < 0) == (t_test(a, b).p_value < 0.05)


class TestProportionTest:
    def test_equal_proportions(self) -> None:
        assert proportion_test(5, 10, 5, 10) == pytest.approx(1.0)

    def test_extreme_difference(self) -> None:
        assert proportion_test(100, 112, 0, 112) < 0.01

    def test_matches_uncorrected_chi_square(self) -> None:
        expected = stats.chi2_contingency([[44, 36], [21, 59]], correction=False)[1]
        assert proportion_test(44, 80, 21, 80) == pytest.approx(expected, rel=1e-9)

    def test_close_to_exact_tests(self) -> None:
        table = [[44, 36], [21, 59]]
        z_p = proportion_test(44, 80, 21, 80)
        assert z_p == pytest.approx(stats.fisher_exact(table, alternative="two-sided").pvalue, abs=0.01)
        assert z_p == pytest.approx(stats.barnard_exact(table, alternative="two-sided").pvalue, abs=0.01)

    def test_no_spread(self) -> None:
        assert proportion_test(0, 10, 0, 12) == 1.0
        assert proportion_test(10, 10, 12, 12) == 1.0

    @pytest.mark.parametrize("k1,n1,k2,n2", [(1, 0, 1, 1), (5, 4, 1, 2), (-1, 3, 1, 3)])
    def test_rejects_impossible_counts(self, k1: int, n1: int, k2: int, n2: int) -> None:
        with pytest.raises(ValueError):
            proportion_test(k1, n1, k2, n2)


def brute_force_bh(p: np.ndarray) -> np.ndarray:
    m = len(p)
    rank = np.array([np.sum(p <= value) for value in p])
    return np.array([min(1.0, min(m * p[k] / rank[k] for k in range(m) if p[k] >= p[i])) for i in range(m)])


class TestFdrAdjust:
    def test_matches_brute_force(self) -> None:
        rng = np.random.default_rng(7)
        for size in rng.integers(1, 30, size=50):
            p = rng.uniform(size=size) ** 3
            if size > 3:
                p = np.round(p, 2)  # force ties
            np.testing.assert_allclose(fdr_adjust(p), brute_force_bh(p))

    def test_known_vector(self) -> None:
        np.testing.assert_allclose(fdr_adjust([0.01, 0.02, 0.03, 0.04]), [0.04] * 4)
        np.testing.assert_allclose(fdr_adjust([0.04, 0.01]), [0.04, 0.02])

    def test_properties(self) -> None:
        p = np.array([0.2, 0.001, 0.9, 0.04, 0.04, 0.5])
        adjusted = fdr_adjust(p)
        assert np.all(adjusted >= p)
        assert np.all(adjusted <= 1)
        order = np.argsort(p)
        assert np.all(np.diff(adjusted[order]) >= 0)

    def test_empty_and_invalid(self) -> None:
        assert fdr_adjust([]).size == 0
        with pytest.raises(ValueError):
            fdr_adjust([0.5, 1.5])


def grid_cells(significant: set[tuple[str, str, str]]) -> Iterator[tuple[str, str, str, float, str]]:
    for model in ("model_a", "model_b"):
        for measure in ("risk", "social"):
            for condition in ("persona_female", "stake_x10"):
                p = 0.001 if (model, measure, condition) in significant else 0.6
                yield model, measure, condition, p, condition


class TestSensitivity:
    def test_share_of_significant_cells(self) -> None:
        everything = set(grid_cells(set()))
        keys = sorted((m, s, c) for m, s, c, _, _ in everything)
        grid = PValueGrid.from_raw(grid_cells(set(keys[:6])))

        report = sensitivity(grid, use_adjusted=False)
        assert report.lambda_ == pytest.approx(0.75)
        assert report.significant == 6
        assert report.cells == 8
        assert report.counts == (2, 2, 2)

    @pytest.mark.parametrize("share,expected", [(0, 0.0), (8, 1.0)])
    def test_bounds(self, share: int, expected: float) -> None:
        keys = sorted((m, s, c) for m, s, c, _, _ in grid_cells(set()))
        report = sensitivity(PValueGrid.from_raw(grid_cells(set(keys[:share]))))
        assert report.lambda_ == expected

    def test_adjustment_is_per_family(self) -> None:
        cells = [("m", "risk", "persona_male", 0.03, "persona"), ("m", "risk", "persona_female", 0.04, "persona")]
        cells += [("m", "risk", "stake_x10", 0.04, "stake")]
        grid = PValueGrid.from_raw(cells)
        adjusted = {e.condition: e.adjusted_p for e in grid.entries}
        assert adjusted == pytest.approx({"persona_male": 0.04, "persona_female": 0.04, "stake_x10": 0.04})

    def test_order_invariant(self) -> None:
        cells = list(grid_cells({("model_a", "risk", "stake_x10"), ("model_b", "social", "persona_female")}))
        reference = sensitivity(PValueGrid.from_raw(cells))
        shuffled = cells[:]
        random.Random(3).shuffle(shuffled)
        permuted = sensitivity(PValueGrid.from_raw(shuffled))
        assert permuted == reference

    def test_per_measure(self) -> None:
        grid = PValueGrid.from_raw(grid_cells({("model_a", "risk", "stake_x10"), ("model_b", "risk", "stake_x10")}))
        report = sensitivity(grid, use_adjusted=False)
        assert report.lambda_by_measure == {"risk": 0.5, "social": 0.0}

    def test_incomplete_grid(self) -> None:
        cells = list(grid_cells(set()))
        with pytest.raises(IncompleteGridError):
            sensitivity(PValueGrid.from_raw(cells[:-1]))
        with pytest.raises(IncompleteGridError):
            sensitivity(PValueGrid.from_raw([*cells, cells[0]]))
        with pytest.raises(IncompleteGridError):
            sensitivity(PValueGrid())


class TestTuringTest:
    @pytest.fixture(scope="class")
    def human(self) -> np.ndarray:
        frame = pd.read_csv(HUMAN_REFERENCE)
        return frame.loc[frame["case"] == "dictator", "value"].to_numpy()

    def test_humans_pass_against_themselves(self, human: np.ndarray) -> None:
        for seed in range(20):
            outcome = turing_test(human, human, rng=seed)
            assert outcome.passed
            assert outcome.p_llm_more_likely + outcome.p_equal + outcome.p_human_more_likely == pytest.approx(1.0)

    def test_outside_support(self, human: np.ndarray) -> None:
        outcome = turing_test(np.full(30, 50.0), human, rng=0)
        assert outcome.p_human_more_likely == 1.0
        assert not outcome.passed

    def test_matches_product_space(self) -> None:
        human = np.array([0, 0, 0, 10, 10, 50, 50, 50, 50, 100], dtype=float)
        llm = np.array([50, 50, 10, 100, 30], dtype=float)
        frequency = {v: np.mean(human == v) for v in np.unique(human)}
        llm_f = np.array([frequency.get(v, 0.0) for v in llm])
        human_f = np.array([frequency[v] for v in human])
        expected_more = np.mean(llm_f[:, None] > human_f[None, :])
        expected_equal = np.mean(llm_f[:, None] == human_f[None, :])

        outcome = turing_test(llm, human, n_draws=20_000, rng=11)
        assert outcome.p_llm_more_likely == pytest.approx(expected_more, abs=0.015)
        assert outcome.p_equal == pytest.approx(expected_equal, abs=0.015)

    def test_deterministic_for_a_seed(self, human: np.ndarray) -> None:
        llm = np.linspace(20, 80, 25)
        assert turing_test(llm, human, rng=5) == turing_test(llm, human, rng=5)

    def test_values_compared_after_rounding(self) -> None:
        outcome = turing_test([0.12341, 0.12339], [0.1234, 0.1234], n_draws=100, rng=0, decimals=3)
        assert outcome.p_equal == 1.0

    def test_rejects_empty_samples(self) -> None:
        with pytest.raises(ValueError):
            turing_test([], [1.0])


class TestNormalizedStd:
    def test_constant_decisions(self) -> None:
        assert normalized_std({Case.DICTATOR: [30.0] * 10, Case.PUBLIC_GOODS: [4.0] * 10}) == 0.0

    def test_human_reference(self) -> None:
        frame = pd.read_csv(HUMAN_REFERENCE)
        decisions = {Case(case): group["value"].tolist() for case, group in frame.groupby("case")}
        assert normalized_std(decisions) == pytest.approx(0.231)

    def test_synthetic(self) -> None:
        assert normalized_std({Case.DICTATOR: [40.0, 60.0] * 5}) == pytest.approx(0.1)
        assert normalized_std({Case.PUBLIC_GOODS: [8.0, 12.0] * 5}) == pytest.approx(0.1)

    def test_needs_decisions(self) -> None:
        with pytest.raises(ValueError):
            normalized_std({})
        with pytest.raises(ValueError):
            normalized_std({Case.BOMB_RISK: [50.0]})


def test_empirical_cdf() -> None:
    cdf = empirical_cdf([2.0, 1.0, 3.0, 2.0])
    assert cdf["value"].tolist() == [1.0, 2.0, 3.0]
    assert cdf["cumulative_fraction"].tolist() == pytest.approx([0.25, 0.75, 1.0])
