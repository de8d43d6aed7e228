"""
Campaign analysis: turns persisted results into a machine-readable report, a markdown
rendering of it and CDF tables.

Risk and social campaigns are measured by the CCEI of each completed simulation, game
campaigns by the decision value. Every non-baseline condition is tested against the
baseline of the same model and measure, with p values adjusted within its variation.
"""

from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass
import json
from pathlib import Path
from typing import Any

from loguru import logger
import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
import yaml

from ..core.conditions import BASELINE
from ..core.engine import AnalysisSettings, load_results
from ..core.transcript import SimulationResult
from ..core.types import INVALID_CLASSES, Case
from ..tasks.budget import BudgetRound, read_rounds
from ..utils.resources import resolve_path
from .revealed_pref import ChoiceDataset, bronars_power, ccei
from .stats import (
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

HUMAN = "human"


class MissingBaselineError(ValueError):
    """Raised when conditions of a model and measure have no baseline to compare against."""


class ConditionSummary(BaseModel):
    model: str
    measure: str
    condition: str
    variation: str
    n: int
    mean: float | None
    std: float | None
    simulations: int
    incomplete: int


class InvalidRateRow(BaseModel):
    model: str
    measure: str
    condition: str
    assistant_turns: int
    counts: dict[str, int]
    invalid_rate: float


class Comparison(BaseModel):
    model: str
    measure: str
    condition: str
    reference: str
    family: str
    mean_difference: float
    ci_low: float
    ci_high: float
    t_statistic: float
    raw_p: float
    adjusted_p: float
    detail: str = ""


class LambdaRow(BaseModel):
    variation: str
    lambda_: float
    lambda_by_measure: dict[str, float]
    significant: int
    cells: int


class LambdaComparison(BaseModel):
    variation_a: str
    variation_b: str
    lambda_a: float
    lambda_b: float
    p_value: float


class TuringRow(BaseModel):
    model: str
    measure: str
    p_llm_more_likely: float
    p_equal: float
    p_human_more_likely: float
    n_draws: int
    passed: bool


class BronarsRow(BaseModel):
    model: str
    measure: str
    model_mean_ccei: float
    random_mean_ccei: float
    random_agents: int
    p_value: float


class AnalysisReport(BaseModel):
    """Everything `llmecon analyze` computes; the markdown report renders only these numbers."""

    campaigns: dict[str, str] = Field(default_factory=dict)
    alpha: float
    t_test_variant: str
    use_adjusted_p: bool
    summaries: list[ConditionSummary] = Field(default_factory=list)
    invalid_rates: list[InvalidRateRow] = Field(default_factory=list)
    comparisons: list[Comparison] = Field(default_factory=list)
    lambdas: list[LambdaRow] = Field(default_factory=list)
    lambda_comparisons: list[LambdaComparison] = Field(default_factory=list)
    pairwise: list[Comparison] = Field(default_factory=list)
    human_comparisons: list[Comparison] = Field(default_factory=list)
    turing: list[TuringRow] = Field(default_factory=list)
    bronars: list[BronarsRow] = Field(default_factory=list)
    normalized_std: dict[str, float] = Field(default_factory=dict)
    cdf: dict[str, list[dict[str, Any]]] = Field(default_factory=dict)
    published: dict[str, Any] = Field(default_factory=dict)


@dataclass
class _Sample:
    model: str
    measure: str
    condition: str
    variation: str
    values: list[float]
    results: list[SimulationResult]


def simulation_value(
    result: SimulationResult, campaign_dir: Path, rounds_cache: dict[Path, list[BudgetRound]]
) -> float:
    """CCEI of a completed budget simulation, or the decision of a completed game."""
    if result.case.is_game:
        return result.game_values[0]
    if result.rounds_file is None:
        raise ValueError(f"{result.simulation_id} does not name its task file")
    path = campaign_dir / result.rounds_file
    if path not in rounds_cache:
        rounds_cache[path] = read_rounds(path)
    return ccei(ChoiceDataset.from_allocations(rounds_cache[path], result.decisions)).value  # type: ignore[arg-type]


def _load_samples(campaign_dirs: Sequence[Path]) -> dict[tuple[str, str, str], _Sample]:
    samples: dict[tuple[str, str, str], _Sample] = {}
    rounds_cache: dict[Path, list[BudgetRound]] = {}
    for campaign_dir in campaign_dirs:
        for result in load_results(campaign_dir):
            key = (result.model_id, result.case.value, result.condition.name)
            sample = samples.setdefault(
                key, _Sample(*key, variation=result.condition.variation, values=[], results=[])
            )
            sample.results.append(result)
            if result.completed:
                sample.values.append(simulation_value(result, campaign_dir, rounds_cache))
    return dict(sorted(samples.items()))


def _compare(
    a: _Sample | list[float], b: _Sample | list[float], settings: AnalysisSettings, **labels: str
) -> Comparison | None:
    values_a = a.values if isinstance(a, _Sample) else a
    values_b = b.values if isinstance(b, _Sample) else b
    if len(values_a) < 2 or len(values_b) < 2:
        logger.warning(f"Skipping comparison {labels}: fewer than two completed simulations")
        return None
    test = t_test(values_a, values_b, settings.t_test_variant)
    ci = mean_difference_ci(values_a, values_b, variant=settings.t_test_variant)
    return Comparison(
        **labels,
        mean_difference=ci.difference,
        ci_low=ci.ci_low,
        ci_high=ci.ci_high,
        t_statistic=test.t_statistic,
        raw_p=test.p_value,
        adjusted_p=test.p_value,
        detail=test.detail,
    )


def _adjust(comparisons: list[Comparison]) -> list[Comparison]:
    """FDR-adjust comparisons family by family, keeping their order."""
    families: dict[str, list[int]] = defaultdict(list)
    for index, comparison in enumerate(comparisons):
        families[comparison.family].append(index)
    adjusted = list(comparisons)
    for indices in families.values():
        for index, q in zip(indices, fdr_adjust([comparisons[i].raw_p for i in indices]), strict=True):
            adjusted[index] = comparisons[index].model_copy(update={"adjusted_p": float(q)})
    return adjusted


def _baselines(samples: dict[tuple[str, str, str], _Sample]) -> dict[tuple[str, str], _Sample]:
    baselines: dict[tuple[str, str], _Sample] = {}
    for sample in samples.values():
        if sample.variation == BASELINE:
            baselines[(sample.model, sample.measure)] = sample
    for sample in samples.values():
        if sample.variation != BASELINE and (sample.model, sample.measure) not in baselines:
            raise MissingBaselineError(
                f"Condition {sample.condition!r} of {sample.model} on {sample.measure} has no baseline condition"
            )
    return baselines


def _condition_tables(
    samples: dict[tuple[str, str, str], _Sample],
) -> tuple[list[ConditionSummary], list[InvalidRateRow]]:
    summaries, rates = [], []
    for sample in samples.values():
        values = np.asarray(sample.values, dtype=float)
        summaries.append(
            ConditionSummary(
                model=sample.model,
                measure=sample.measure,
                condition=sample.condition,
                variation=sample.variation,
                n=int(values.size),
                mean=float(values.mean()) if values.size else None,
                std=float(values.std(ddof=1)) if values.size > 1 else None,
                simulations=len(sample.results),
                incomplete=sum(not r.completed for r in sample.results),
            )
        )
        counts = {v.value: sum(r.invalid_counts.get(v, 0) for r in sample.results) for v in INVALID_CLASSES}
        turns = sum(r.assistant_turns for r in sample.results)
        rates.append(
            InvalidRateRow(
                model=sample.model,
                measure=sample.measure,
                condition=sample.condition,
                assistant_turns=turns,
                counts=counts,
                invalid_rate=sum(counts.values()) / turns if turns else 0.0,
            )
        )
    return summaries, rates


def _lambdas(comparisons: list[Comparison], settings: AnalysisSettings) -> list[LambdaRow]:
    grid = PValueGrid.from_raw((c.model, c.measure, c.condition, c.raw_p, c.family) for c in comparisons)
    rows = []
    for variation in sorted({c.family for c in comparisons}):
        family_grid = PValueGrid([e for e in grid.entries if e.family == variation])
        try:
            score = sensitivity(family_grid, settings.alpha, settings.use_adjusted_p)
        except IncompleteGridError as e:
            logger.warning(f"No sensitivity score for {variation}: {e}")
            continue
        rows.append(
            LambdaRow(
                variation=variation,
                lambda_=score.lambda_,
                lambda_by_measure=score.lambda_by_measure,
                significant=score.significant,
                cells=score.cells,
            )
        )
    return rows


def _lambda_comparisons(rows: list[LambdaRow], settings: AnalysisSettings) -> list[LambdaComparison]:
    by_variation = {row.variation: row for row in rows}
    result = []
    for variation_a, variation_b in settings.lambda_comparisons:
        if variation_a not in by_variation or variation_b not in by_variation:
            logger.warning(f"Cannot compare sensitivity of {variation_a} and {variation_b}: missing scores")
            continue
        a, b = by_variation[variation_a], by_variation[variation_b]
        result.append(
            LambdaComparison(
                variation_a=variation_a,
                variation_b=variation_b,
                lambda_a=a.lambda_,
                lambda_b=b.lambda_,
                p_value=proportion_test(a.significant, a.cells, b.significant, b.cells),
            )
        )
    return result


def _pairwise(samples: dict[tuple[str, str, str], _Sample], settings: AnalysisSettings) -> list[Comparison]:
    comparisons = []
    for condition_a, condition_b in settings.comparisons:
        for (model, measure, condition), sample in samples.items():
            if condition != condition_a or (model, measure, condition_b) not in samples:
                continue
            comparison = _compare(
                sample,
                samples[(model, measure, condition_b)],
                settings,
                model=model,
                measure=measure,
                condition=condition_a,
                reference=condition_b,
                family="pairwise",
            )
            if comparison is not None:
                comparisons.append(comparison)
    return _adjust(comparisons)


def load_human_reference(path: str | Path) -> dict[str, list[float]]:
    """Human decisions per measure from a CSV with `value` and `case` columns."""
    frame = pd.read_csv(resolve_path(path))
    missing = {"value", "case"} - set(frame.columns)
    if missing:
        raise ValueError(f"{path} is missing columns {sorted(missing)}")
    if frame.empty:
        raise ValueError(f"Human reference {path} holds no rows")
    return {str(case): group["value"].astype(float).tolist() for case, group in frame.groupby("case")}


def _human_tables(
    baselines: dict[tuple[str, str], _Sample], human: dict[str, list[float]], settings: AnalysisSettings
) -> tuple[list[TuringRow], list[Comparison]]:
    turing_rows, comparisons = [], []
    for (model, measure), sample in sorted(baselines.items()):
        if measure not in human:
            logger.warning(f"No human reference for {measure}, skipping Turing test of {model}")
            continue
        if not sample.values:
            continue
        outcome = turing_test(
            sample.values,
            human[measure],
            n_draws=settings.turing_draws,
            rng=np.random.default_rng(np.random.SeedSequence([settings.seed, len(turing_rows)])),
            decimals=settings.turing_decimals,
        )
        turing_rows.append(
            TuringRow(
                model=model,
                measure=measure,
                p_llm_more_likely=outcome.p_llm_more_likely,
                p_equal=outcome.p_equal,
                p_human_more_likely=outcome.p_human_more_likely,
                n_draws=outcome.n_draws,
                passed=outcome.passed,
            )
        )
        comparison = _compare(
            sample,
            human[measure],
            settings,
            model=model,
            measure=measure,
            condition=BASELINE,
            reference=HUMAN,
            family=HUMAN,
        )
        if comparison is not None:
            comparisons.append(comparison)
    return turing_rows, _adjust(comparisons)


def _bronars_tables(
    baselines: dict[tuple[str, str], _Sample], campaign_dirs: Sequence[Path], settings: AnalysisSettings
) -> list[BronarsRow]:
    if settings.bronars_agents == 0:
        return []
    rows = []
    for (model, measure), sample in sorted(baselines.items()):
        if not Case(measure).is_budgetary or len(sample.values) < 2:
            continue
        task_sets = [
            read_rounds(path)
            for campaign_dir in campaign_dirs
            for path in sorted((campaign_dir / "tasks").glob("*.jsonl"))
        ]
        task_sets = [rounds for rounds in task_sets if rounds and rounds[0].domain.value == measure]
        if not task_sets:
            continue
        random_values = [r.value for r in bronars_power(settings.bronars_agents, task_sets, seed=settings.seed)]
        rows.append(
            BronarsRow(
                model=model,
                measure=measure,
                model_mean_ccei=float(np.mean(sample.values)),
                random_mean_ccei=float(np.mean(random_values)),
                random_agents=settings.bronars_agents,
                p_value=t_test(sample.values, random_values, settings.t_test_variant).p_value
                if len(random_values) > 1
                else 1.0,
            )
        )
    return rows


def _normalized_stds(baselines: dict[tuple[str, str], _Sample], human: dict[str, list[float]]) -> dict[str, float]:
    by_model: dict[str, dict[Case, list[float]]] = defaultdict(dict)
    for (model, measure), sample in baselines.items():
        if Case(measure).is_game and len(sample.values) >= 2:
            by_model[model][Case(measure)] = sample.values
    case_names = {c.value for c in Case}
    games = {Case(m): v for m, v in human.items() if m in case_names and Case(m).is_game and len(v) >= 2}
    if games:
        by_model[HUMAN] = games
    return {model: normalized_std(decisions) for model, decisions in sorted(by_model.items())}


def _cdf_tables(samples: dict[tuple[str, str, str], _Sample]) -> dict[str, list[dict[str, Any]]]:
    tables: dict[str, list[dict[str, Any]]] = defaultdict(list)
    for (model, measure, condition), sample in samples.items():
        if not sample.values:
            continue
        for row in empirical_cdf(sample.values).itertuples(index=False):
            tables[measure].append(
                {
                    "model": model,
                    "condition": condition,
                    "value": row.value,
                    "cumulative_fraction": row.cumulative_fraction,
                }
            )
    return dict(tables)


def load_published(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    resolved = resolve_path(path)
    if not resolved.exists():
        logger.warning(f"Published reference table {path} not found")
        return {}
    return yaml.safe_load(resolved.read_text(encoding="utf-8")) or {}


def campaign_settings(campaign_dir: Path) -> AnalysisSettings:
    """Analysis settings recorded in a campaign manifest, or defaults."""
    manifest = campaign_dir / "manifest.json"
    if not manifest.exists():
        return AnalysisSettings()
    config = json.loads(manifest.read_text(encoding="utf-8")).get("config", {})
    return AnalysisSettings.model_validate(config.get("analysis", {}))


def analyze(campaign_dirs: Sequence[str | Path], settings: AnalysisSettings | None = None) -> AnalysisReport:
    """
    Analyse one or more campaign directories.

    Args:
        campaign_dirs: Campaign directories; results of several models or cases are pooled
        settings: Analysis options, defaulting to those recorded in the first manifest

    Returns:
        AnalysisReport: The complete report

    Raises:
        MissingBaselineError: If a (model, measure) has conditions but no baseline
        ValueError: If the human reference file is empty
    """
    dirs = [Path(d) for d in campaign_dirs]
    if not dirs:
        raise ValueError("analyze needs at least one campaign directory")
    settings = settings or campaign_settings(dirs[0])

    samples = _load_samples(dirs)
    baselines = _baselines(samples)
    summaries, invalid_rates = _condition_tables(samples)

    comparisons = []
    for sample in samples.values():
        if sample.variation == BASELINE:
            continue
        reference = baselines[(sample.model, sample.measure)]
        comparison = _compare(
            sample,
            reference,
            settings,
            model=sample.model,
            measure=sample.measure,
            condition=sample.condition,
            reference=reference.condition,
            family=sample.variation,
        )
        if comparison is not None:
            comparisons.append(comparison)
    comparisons = _adjust(comparisons)
    lambdas = _lambdas(comparisons, settings) if comparisons else []

    human = load_human_reference(settings.human_reference) if settings.human_reference else {}
    turing_rows, human_comparisons = _human_tables(baselines, human, settings) if human else ([], [])

    report = AnalysisReport(
        campaigns={str(d): _manifest_hash(d) for d in dirs},
        alpha=settings.alpha,
        t_test_variant=settings.t_test_variant,
        use_adjusted_p=settings.use_adjusted_p,
        summaries=summaries,
        invalid_rates=invalid_rates,
        comparisons=comparisons,
        lambdas=lambdas,
        lambda_comparisons=_lambda_comparisons(lambdas, settings),
        pairwise=_pairwise(samples, settings),
        human_comparisons=human_comparisons,
        turing=turing_rows,
        bronars=_bronars_tables(baselines, dirs, settings),
        normalized_std=_normalized_stds(baselines, human),
        cdf=_cdf_tables(samples),
        published=load_published(settings.published_values),
    )
    logger.info(f"Analysed {sum(s.simulations for s in summaries)} simulations from {len(dirs)} campaigns")
    return report


def _manifest_hash(campaign_dir: Path) -> str:
    manifest = campaign_dir / "manifest.json"
    if not manifest.exists():
        return ""
    return str(json.loads(manifest.read_text(encoding="utf-8")).get("config_hash", ""))


def _num(value: float | None, digits: int = 3) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return lines + [""]


def render_markdown(report: AnalysisReport) -> str:
    """Human-readable rendering of `report`; prints no number absent from it."""
    p_label = "adjusted p" if report.use_adjusted_p else "raw p"
    lines = ["# Analysis report", ""]
    lines += [f"- {name}: config `{config_hash[:12]}`" for name, config_hash in report.campaigns.items()]
    lines += [f"- alpha {report.alpha}, {report.t_test_variant} t-test, sensitivity on {p_label}", ""]

    lines += ["## Conditions", ""]
    lines += _table(
        ["model", "measure", "condition", "variation", "n", "mean", "std", "incomplete"],
        [
            [s.model, s.measure, s.condition, s.variation, str(s.n), _num(s.mean), _num(s.std), str(s.incomplete)]
            for s in report.summaries
        ],
    )

    lines += ["## Invalid answers", ""]
    classes = [v.value for v in INVALID_CLASSES]
    lines += _table(
        ["model", "measure", "condition", "turns", *classes, "rate"],
        [
            [
                r.model,
                r.measure,
                r.condition,
                str(r.assistant_turns),
                *(str(r.counts[c]) for c in classes),
                _num(r.invalid_rate),
            ]
            for r in report.invalid_rates
        ],
    )

    for title, rows in (
        ("Differences from baseline", report.comparisons),
        ("Pairwise comparisons", report.pairwise),
        ("Comparison with human decisions", report.human_comparisons),
    ):
        if not rows:
            continue
        lines += [f"## {title}", ""]
        lines += _table(
            ["model", "measure", "condition", "reference", "difference", "95% CI", "raw p", "adjusted p"],
            [
                [
                    c.model,
                    c.measure,
                    c.condition,
                    c.reference,
                    _num(c.mean_difference),
                    f"[{_num(c.ci_low)}, {_num(c.ci_high)}]",
                    _num(c.raw_p, 4),
                    _num(c.adjusted_p, 4),
                ]
                for c in rows
            ],
        )

    if report.lambdas:
        lines += ["## Sensitivity", ""]
        lines += _table(
            ["variation", "lambda", "significant", "cells", "by measure"],
            [
                [
                    row.variation,
                    f"{row.lambda_:.1%}",
                    str(row.significant),
                    str(row.cells),
                    ", ".join(f"{m} {v:.1%}" for m, v in row.lambda_by_measure.items()),
                ]
                for row in report.lambdas
            ],
        )
    if report.lambda_comparisons:
        lines += _table(
            ["variation", "vs", "lambda", "lambda", "p"],
            [
                [c.variation_a, c.variation_b, f"{c.lambda_a:.1%}", f"{c.lambda_b:.1%}", _num(c.p_value, 4)]
                for c in report.lambda_comparisons
            ],
        )

    if report.turing:
        lines += ["## Turing test", ""]
        lines += _table(
            ["model", "measure", "more likely", "equal", "less likely", "passed"],
            [
                [
                    t.model,
                    t.measure,
                    _num(t.p_llm_more_likely),
                    _num(t.p_equal),
                    _num(t.p_human_more_likely),
                    str(t.passed),
                ]
                for t in report.turing
            ],
        )

    if report.bronars:
        lines += ["## Random-agent benchmark", ""]
        lines += _table(
            ["model", "measure", "mean CCEI", "random mean CCEI", "agents", "p"],
            [
                [
                    b.model,
                    b.measure,
                    _num(b.model_mean_ccei),
                    _num(b.random_mean_ccei),
                    str(b.random_agents),
                    _num(b.p_value, 4),
                ]
                for b in report.bronars
            ],
        )

    if report.normalized_std:
        lines += ["## Normalized standard deviation", ""]
        lines += _table(["model", "normalized std"], [[m, _num(v)] for m, v in report.normalized_std.items()])

    if report.published:
        lines += ["## Published reference values", ""]
        lines += ["```yaml", yaml.safe_dump(report.published, sort_keys=True).rstrip(), "```", ""]

    return "\n".join(lines)


def write_report(report: AnalysisReport, directory: str | Path) -> list[Path]:
    """Write report.json, report.md and one cdf_<measure>.csv per measure."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = [directory / "report.json", directory / "report.md"]
    written[0].write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    written[1].write_text(render_markdown(report), encoding="utf-8")
    for measure, rows in report.cdf.items():
        path = directory / f"cdf_{measure}.csv"
        pd.DataFrame(rows, columns=["model", "condition", "value", "cumulative_fraction"]).to_csv(
            path, index=False, float_format="%.6g"
        )
        written.append(path)
    logger.success(f"Report written to {directory}")
    return written
