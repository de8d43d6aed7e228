"""
Hypothesis tests and summary statistics used by the analysis reports.

Two-sample t-tests, the two-proportion z-test, Benjamini-Hochberg adjustment, sensitivity
scores over a grid of p values, the resampling Turing test and normalized dispersion.
"""

from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
import pandas as pd
from scipy import stats

from ..core.types import Case
from ..tasks.games import GameScenario, scenario_spec

TTestVariant = Literal["pooled", "welch"]

DEFAULT_ALPHA: float = 0.05
TURING_DRAWS: int = 10_000
TURING_DECIMALS: int = 3


class IncompleteGridError(ValueError):
    """Raised when a p-value grid misses (model, measure, condition) cells."""


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    variant: TTestVariant
    detail: str = ""


def _sample(values: ArrayLike, name: str) -> NDArray[np.float64]:
    array = np.asarray(values, dtype=float).ravel()
    if array.size < 2:
        raise ValueError(f"{name} needs at least two values, got {array.size}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite values")
    return array


def _difference_spread(
    a: NDArray[np.float64], b: NDArray[np.float64], variant: TTestVariant
) -> tuple[float, float]:
    """Standard error of mean(a) - mean(b) and its degrees of freedom."""
    n_a, n_b = a.size, b.size
    var_a, var_b = a.var(ddof=1), b.var(ddof=1)
    if variant == "pooled":
        dof = n_a + n_b - 2
        pooled = ((n_a - 1) * var_a + (n_b - 1) * var_b) / dof
        return float(np.sqrt(pooled * (1 / n_a + 1 / n_b))), float(dof)
    if variant == "welch":
        se_a, se_b = var_a / n_a, var_b / n_b
        spread = se_a + se_b
        if spread == 0:
            return 0.0, float(n_a + n_b - 2)
        dof = spread**2 / (se_a**2 / (n_a - 1) + se_b**2 / (n_b - 1))
        return float(np.sqrt(spread)), float(dof)
    raise ValueError(f"Unknown t-test variant {variant!r}")


def t_test(sample_a: ArrayLike, sample_b: ArrayLike, variant: TTestVariant = "pooled") -> TTestResult:
    """
    Two-sided two-sample t-test.

    Args:
        sample_a: First sample, at least two finite values
        sample_b: Second sample, at least two finite values
        variant: "pooled" (equal variances) or "welch"

    Returns:
        TTestResult: Degenerate samples with zero spread give p = 1 for equal means and
        p = 0 otherwise, with the case named in `detail`
    """
    a, b = _sample(sample_a, "sample_a"), _sample(sample_b, "sample_b")
    diff = float(a.mean() - b.mean())
    std_err, dof = _difference_spread(a, b, variant)
    if std_err == 0:
        if diff == 0:
            return TTestResult(0.0, dof, 1.0, variant, detail="zero variance, equal means")
        return TTestResult(float(np.copysign(np.inf, diff)), dof, 0.0, variant, detail="zero variance, unequal means")
    t_stat = diff / std_err
    p_value = float(min(1.0, 2 * stats.t.sf(abs(t_stat), dof)))
    return TTestResult(t_stat, dof, p_value, variant)


@dataclass(frozen=True)
class MeanDifference:
    difference: float
    ci_low: float
    ci_high: float
    confidence: float


def mean_difference_ci(
    sample_a: ArrayLike, sample_b: ArrayLike, confidence: float = 0.95, variant: TTestVariant = "pooled"
) -> MeanDifference:
    """mean(a) - mean(b) with a t-based confidence interval."""
    a, b = _sample(sample_a, "sample_a"), _sample(sample_b, "sample_b")
    diff = float(a.mean() - b.mean())
    std_err, dof = _difference_spread(a, b, variant)
    half = float(stats.t.ppf(0.5 + confidence / 2, dof)) * std_err
    return MeanDifference(diff, diff - half, diff + half, confidence)


def proportion_test(k1: int, n1: int, k2: int, n2: int) -> float:
    """Two-sided two-proportion z-test with pooled success probability; returns the p value."""
    if n1 < 1 or n2 < 1:
        raise ValueError(f"Both groups need at least one trial, got n1={n1}, n2={n2}")
    if not (0 <= k1 <= n1 and 0 <= k2 <= n2):
        raise ValueError(f"Successes must lie within [0, n], got {k1}/{n1} and {k2}/{n2}")
    pooled = (k1 + k2) / (n1 + n2)
    spread = np.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    if spread == 0:
        return 1.0
    z = (k1 / n1 - k2 / n2) / spread
    return float(min(1.0, 2 * stats.norm.sf(abs(z))))


def fdr_adjust(raw_p: ArrayLike) -> NDArray[np.float64]:
    """
    Benjamini-Hochberg step-up adjustment.

    Args:
        raw_p: p values of one test family

    Returns:
        Adjusted p values in the input order: min over j >= i of (m / j) * p_(j), clipped to 1
    """
    p = np.asarray(raw_p, dtype=float).ravel()
    if p.size == 0:
        return p
    if np.any(np.isnan(p)) or np.any((p < 0) | (p > 1)):
        raise ValueError("p values must lie in [0, 1]")

    order = np.argsort(p, kind="stable")
    m = p.size
    q = p[order] * m / np.arange(1, m + 1)
    q = np.minimum.accumulate(q[::-1])[::-1]

    adjusted = np.empty(m)
    adjusted[order] = np.minimum(q, 1.0)
    return adjusted


@dataclass(frozen=True)
class GridEntry:
    model: str
    measure: str
    condition: str
    raw_p: float
    adjusted_p: float
    family: str


@dataclass
class PValueGrid:
    """
    p values indexed by (model, measure, condition), adjusted within each family.

    Use `from_raw` to build a grid; each entry's family names the variation it belongs to.
    """

    entries: list[GridEntry] = field(default_factory=list)

    @classmethod
    def from_raw(cls, cells: Iterable[tuple[str, str, str, float, str]]) -> "PValueGrid":
        """Adjust (model, measure, condition, raw_p, family) cells family by family."""
        cells = list(cells)
        adjusted = [0.0] * len(cells)
        families: dict[str, list[int]] = {}
        for index, cell in enumerate(cells):
            families.setdefault(cell[4], []).append(index)
        for indices in families.values():
            for index, q in zip(indices, fdr_adjust([cells[i][3] for i in indices]), strict=True):
                adjusted[index] = float(q)
        return cls(
            [
                GridEntry(model, measure, condition, float(raw), adjusted[i], family)
                for i, (model, measure, condition, raw, family) in enumerate(cells)
            ]
        )

    def models(self) -> list[str]:
        return sorted({e.model for e in self.entries})

    def measures(self) -> list[str]:
        return sorted({e.measure for e in self.entries})

    def conditions(self) -> list[str]:
        return sorted({e.condition for e in self.entries})

    def check_complete(self) -> None:
        keys = Counter((e.model, e.measure, e.condition) for e in self.entries)
        repeated = [k for k, count in keys.items() if count > 1]
        if repeated:
            raise IncompleteGridError(f"Grid cells appear more than once: {repeated[:3]}")
        expected = len(self.models()) * len(self.measures()) * len(self.conditions())
        if len(keys) != expected:
            raise IncompleteGridError(f"Grid holds {len(keys)} of {expected} (model, measure, condition) cells")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [vars(e) for e in self.entries],
            columns=["model", "measure", "condition", "raw_p", "adjusted_p", "family"],
        )


@dataclass(frozen=True)
class SensitivityReport:
    lambda_: float
    lambda_by_measure: dict[str, float]
    alpha: float
    counts: tuple[int, int, int]
    significant: int

    @property
    def cells(self) -> int:
        models, measures, conditions = self.counts
        return models * measures * conditions


def sensitivity(grid: PValueGrid, alpha: float = DEFAULT_ALPHA, use_adjusted: bool = True) -> SensitivityReport:
    """
    Share of grid cells significant at `alpha`, overall and per measure.

    Raises:
        IncompleteGridError: If the grid is empty or misses cells
    """
    if not grid.entries:
        raise IncompleteGridError("Cannot score an empty grid")
    grid.check_complete()
    frame = grid.to_frame()
    frame["significant"] = frame["adjusted_p" if use_adjusted else "raw_p"] < alpha
    by_measure = frame.groupby("measure")["significant"].mean()
    return SensitivityReport(
        lambda_=float(frame["significant"].mean()),
        lambda_by_measure={str(m): float(v) for m, v in by_measure.items()},
        alpha=alpha,
        counts=(len(grid.models()), len(grid.measures()), len(grid.conditions())),
        significant=int(frame["significant"].sum()),
    )


@dataclass(frozen=True)
class TuringOutcome:
    p_llm_more_likely: float
    p_equal: float
    p_human_more_likely: float
    n_draws: int

    @property
    def passed(self) -> bool:
        """The LLM draw is at least as likely human as the human draw in more than half the draws."""
        return self.p_llm_more_likely + self.p_equal > 0.5


def turing_test(
    llm_sample: ArrayLike,
    human_sample: ArrayLike,
    n_draws: int = TURING_DRAWS,
    rng: np.random.Generator | int | None = None,
    decimals: int = TURING_DECIMALS,
) -> TuringOutcome:
    """
    Resampling Turing test.

    Each draw pairs one LLM value with one human value, both picked uniformly. A value's
    likelihood is its frequency in the human sample after rounding to `decimals`; the draw
    counts for whichever value is more likely, or as equal.
    """
    llm = np.round(np.asarray(llm_sample, dtype=float).ravel(), decimals)
    human = np.round(np.asarray(human_sample, dtype=float).ravel(), decimals)
    if llm.size == 0 or human.size == 0:
        raise ValueError("Turing test needs non-empty LLM and human samples")
    if n_draws < 1:
        raise ValueError("n_draws must be positive")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    frequency = pd.Series(human).value_counts(normalize=True)
    llm_likelihood = frequency.reindex(llm, fill_value=0.0).to_numpy()
    human_likelihood = frequency.reindex(human, fill_value=0.0).to_numpy()

    llm_draws = llm_likelihood[rng.integers(0, llm.size, size=n_draws)]
    human_draws = human_likelihood[rng.integers(0, human.size, size=n_draws)]
    llm_more = int(np.count_nonzero(llm_draws > human_draws))
    human_more = int(np.count_nonzero(llm_draws < human_draws))
    equal = n_draws - llm_more - human_more
    return TuringOutcome(llm_more / n_draws, equal / n_draws, human_more / n_draws, n_draws)


def normalized_std(
    decisions: Mapping[Case, Sequence[float]],
    scenarios: Mapping[Case, GameScenario] | None = None,
) -> float:
    """
    Population standard deviation of each scenario's decisions divided by the length of its
    feasible interval, averaged over scenarios.
    """
    if not decisions:
        raise ValueError("normalized_std needs decisions for at least one scenario")
    ratios = []
    for case, values in decisions.items():
        array = np.asarray(values, dtype=float)
        if array.size < 2:
            raise ValueError(f"{case} needs at least two decisions, got {array.size}")
        scenario = scenarios[case] if scenarios and case in scenarios else scenario_spec(case)
        ratios.append(array.std(ddof=0) / scenario.interval_length)
    return float(np.mean(ratios))


def empirical_cdf(values: ArrayLike) -> pd.DataFrame:
    """(value, cumulative_fraction) at each distinct value."""
    series = pd.Series(np.asarray(values, dtype=float).ravel())
    counts = series.value_counts().sort_index()
    return pd.DataFrame(
        {"value": counts.index.to_numpy(dtype=float), "cumulative_fraction": counts.cumsum().to_numpy() / len(series)}
    )
