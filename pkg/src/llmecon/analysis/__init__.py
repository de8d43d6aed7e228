"""Revealed-preference measures, hypothesis tests and campaign reports."""

from .report import AnalysisReport, MissingBaselineError, analyze, render_markdown, write_report
from .revealed_pref import ChoiceDataset, CceiResult, bronars_power, ccei, ccei_bisection, garp_satisfied
from .stats import (
    IncompleteGridError,
    PValueGrid,
    SensitivityReport,
    TTestResult,
    TuringOutcome,
    fdr_adjust,
    normalized_std,
    proportion_test,
    sensitivity,
    t_test,
    turing_test,
)

__all__ = [
    "AnalysisReport",
    "CceiResult",
    "ChoiceDataset",
    "IncompleteGridError",
    "MissingBaselineError",
    "PValueGrid",
    "SensitivityReport",
    "TTestResult",
    "TuringOutcome",
    "analyze",
    "bronars_power",
    "ccei",
    "ccei_bisection",
    "fdr_adjust",
    "garp_satisfied",
    "normalized_std",
    "proportion_test",
    "render_markdown",
    "sensitivity",
    "t_test",
    "turing_test",
    "write_report",
]
