"""
Revealed-preference analysis: GARP at efficiency level e, Afriat's critical cost efficiency
index (CCEI) and the Bronars random-agent power benchmark.

Conventions: with E[i, j] = p^i . x^j, bundle i is directly revealed preferred to j at level e
when e * E[i, i] >= E[i, j], and strictly so when the inequality is strict. GARP(e) fails when
x^i is (transitively) revealed preferred to x^j while e * E[j, j] > E[j, i].
"""

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from loguru import logger
import numpy as np
from numpy.typing import NDArray
import pandas as pd

from ..tasks.budget import Allocation, BudgetRound, Observation, to_observation

BoolMatrix = NDArray[np.bool_]

# relative slack on expenditure comparisons, keeps breakpoint ratios on the satisfied side
COMPARISON_TOLERANCE: float = 1e-12
BISECTION_TOLERANCE: float = 1e-6
CSV_COLUMNS: tuple[str, ...] = ("round", "price_a", "price_b", "qty_a", "qty_b")


class ChoiceDataset:
    """
    A sequence of (price, quantity) observations.

    Attributes:
        prices: (n, k) array of strictly positive prices
        quantities: (n, k) array of non-negative quantities
    """

    def __init__(self, prices: NDArray[np.float64], quantities: NDArray[np.float64]) -> None:
        prices = np.atleast_2d(np.asarray(prices, dtype=float))
        quantities = np.atleast_2d(np.asarray(quantities, dtype=float))
        if prices.size == 0:
            raise ValueError("A choice dataset needs at least one observation")
        if prices.shape != quantities.shape:
            raise ValueError(f"Price shape {prices.shape} does not match quantity shape {quantities.shape}")
        if np.any(prices <= 0):
            raise ValueError("All prices must be positive")
        if np.any(quantities < 0):
            raise ValueError("Quantities must be non-negative")
        self.prices = prices
        self.quantities = quantities

    def __len__(self) -> int:
        return int(self.prices.shape[0])

    @property
    def expenditures(self) -> NDArray[np.float64]:
        """E[i, j] = p^i . x^j."""
        return self.prices @ self.quantities.T

    def scaled(self, factor: float) -> "ChoiceDataset":
        return ChoiceDataset(self.prices * factor, self.quantities)

    @classmethod
    def from_observations(cls, observations: Sequence[Observation]) -> "ChoiceDataset":
        return cls(
            np.array([o.prices for o in observations], dtype=float),
            np.array([o.quantities for o in observations], dtype=float),
        )

    @classmethod
    def from_allocations(cls, rounds: Sequence[BudgetRound], allocations: Sequence[Allocation]) -> "ChoiceDataset":
        if len(rounds) != len(allocations):
            raise ValueError(f"{len(rounds)} rounds but {len(allocations)} allocations")
        return cls.from_observations([to_observation(r, a) for r, a in zip(rounds, allocations, strict=True)])

    def to_frame(self) -> pd.DataFrame:
        if self.prices.shape[1] != 2:
            raise ValueError("CSV export covers the two-good case only")
        return pd.DataFrame(
            {
                "round": np.arange(1, len(self) + 1),
                "price_a": self.prices[:, 0],
                "price_b": self.prices[:, 1],
                "qty_a": self.quantities[:, 0],
                "qty_b": self.quantities[:, 1],
            }
        )

    def to_csv(self, path: Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def read_csv(cls, path: Path) -> "ChoiceDataset":
        frame = pd.read_csv(path)
        missing = set(CSV_COLUMNS) - set(frame.columns)
        if missing:
            raise ValueError(f"{path} is missing columns {sorted(missing)}")
        frame = frame.sort_values("round")
        return cls(
            frame[["price_a", "price_b"]].to_numpy(dtype=float),
            frame[["qty_a", "qty_b"]].to_numpy(dtype=float),
        )


@dataclass(frozen=True)
class RelationMatrices:
    n: int
    r0: BoolMatrix
    p0: BoolMatrix
    r: BoolMatrix


@dataclass(frozen=True)
class CceiResult:
    value: float
    garp_at_one: bool
    violation_witness: tuple[int, int] | None = None


def _transitive_closure(relation: BoolMatrix) -> BoolMatrix:
    """Warshall's all-pairs closure, made reflexive."""
    closure = relation.copy()
    np.fill_diagonal(closure, True)
    for k in range(closure.shape[0]):
        closure |= np.outer(closure[:, k], closure[k, :])
    return closure


def direct_relations(data: ChoiceDataset, e: float) -> RelationMatrices:
    if not 0 <= e <= 1:
        raise ValueError(f"Efficiency must lie in [0, 1], got {e}")
    expend = data.expenditures
    own = np.diag(expend)[:, None]
    slack = COMPARISON_TOLERANCE * own
    r0 = e * own >= expend - slack
    p0 = e * own > expend + slack
    return RelationMatrices(n=len(data), r0=r0, p0=p0, r=_transitive_closure(r0))


def _garp_violation(data: ChoiceDataset, e: float) -> tuple[int, int] | None:
    relations = direct_relations(data, e)
    # x^i R x^j and x^j strictly revealed preferred to x^i at level e
    violations = relations.r & relations.p0.T
    if not violations.any():
        return None
    i, j = np.argwhere(violations)[0]
    return int(i), int(j)


def garp_satisfied(data: ChoiceDataset, e: float = 1.0) -> bool:
    return _garp_violation(data, e) is None


def ccei_candidates(data: ChoiceDataset) -> NDArray[np.float64]:
    """Sorted breakpoints {E[i, j] / E[i, i]} within [0, 1], together with 0 and 1."""
    expend = data.expenditures
    ratios = expend / np.diag(expend)[:, None]
    inside = ratios[(ratios >= 0) & (ratios <= 1)]
    return np.unique(np.concatenate([inside, [0.0, 1.0]]))


def ccei(data: ChoiceDataset) -> CceiResult:
    """
    Exact CCEI by searching the candidate breakpoints.

    The relations are constant on the open interval between consecutive candidates, and at a
    breakpoint c the weak relation gains its new edges while the strict one keeps those of the
    interval below. GARP can therefore hold on (c_prev, c) and fail at c itself, so each interval
    is tested at its midpoint and the upper end of the last satisfied interval is the supremum.
    Feasibility is monotone in the interval index, so the search bisects over intervals.
    """
    witness = _garp_violation(data, 1.0)
    if witness is None:
        return CceiResult(value=1.0, garp_at_one=True)

    candidates = ccei_candidates(data)
    midpoints = (candidates[:-1] + candidates[1:]) / 2
    if not garp_satisfied(data, float(midpoints[0])):
        return CceiResult(value=0.0, garp_at_one=False, violation_witness=witness)

    lo, hi = 0, len(midpoints)  # GARP holds at midpoints[lo]; hi is the first failing interval or past the end
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if garp_satisfied(data, float(midpoints[mid])):
            lo = mid
        else:
            hi = mid
    return CceiResult(value=float(candidates[lo + 1]), garp_at_one=False, violation_witness=witness)


def ccei_bisection(data: ChoiceDataset, tolerance: float = BISECTION_TOLERANCE) -> float:
    """Plain bisection on e; agrees with `ccei` within `tolerance`."""
    if garp_satisfied(data, 1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if garp_satisfied(data, mid):
            lo = mid
        else:
            hi = mid
    return lo


def agent_rng(seed: int, agent_index: int) -> np.random.Generator:
    """Independent stream per simulated agent, stable regardless of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence([seed, agent_index]))


def random_allocations(rounds: Sequence[BudgetRound], rng: np.random.Generator) -> list[Allocation]:
    points_a = rng.uniform(0.0, 100.0, size=len(rounds))
    return [Allocation(float(a), 100.0 - float(a)) for a in points_a]


def bronars_power(
    n_agents: int,
    rounds: Sequence[BudgetRound] | Sequence[Sequence[BudgetRound]],
    seed: int,
) -> list[CceiResult]:
    """
    CCEI of uniformly random agents, the benchmark for a design's power to detect violations.

    Each agent draws points_a ~ U[0, 100] independently per round.

    Args:
        n_agents: Number of simulated agents
        rounds: One shared round list, or one round list per agent
        seed: Base seed; agent k uses the substream (seed, k)
    """
    if n_agents < 0:
        raise ValueError("n_agents must be non-negative")
    if n_agents == 0:
        return []
    if len(rounds) == 0:
        raise ValueError("Cannot simulate random agents on an empty round list")

    per_agent = isinstance(rounds[0], Sequence)
    results: list[CceiResult] = []
    for k in range(n_agents):
        agent_rounds: Sequence[BudgetRound] = (
            rounds[k % len(rounds)] if per_agent else rounds  # type: ignore[assignment]
        )
        allocations = random_allocations(agent_rounds, agent_rng(seed, k))
        results.append(ccei(ChoiceDataset.from_allocations(agent_rounds, allocations)))
    logger.debug(f"Bronars benchmark: {n_agents} agents, mean CCEI {np.mean([r.value for r in results]):.3f}")
    return results
