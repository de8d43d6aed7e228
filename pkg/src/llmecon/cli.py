import argparse
from pathlib import Path
import sys

from loguru import logger
from pydantic import ValidationError
from rich import print as rprint
from rich.console import Console
from rich.markdown import Markdown
from rich.table import Table

from .agents import parse_mock
from .analysis.report import analyze, write_report
from .core.engine import Campaign, CampaignConfig
from .core.llm_processor import ChatError, ConfigurationError
from .utils.resources import resource_path

DEFAULT_CONFIG = resource_path("configs/mock_risk.yaml")


def configure_logging(verbose: bool = False) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "SUCCESS")


def load_config(args: argparse.Namespace) -> CampaignConfig:
    """
    Load the campaign config and apply command-line overrides.

    Overrides that change the experiment (seed, provider, mock policy) change the config hash,
    so a resumed campaign must be given the same ones.
    """
    config = CampaignConfig.from_yaml(args.config)
    updates: dict[str, object] = {}
    if getattr(args, "seed", None) is not None:
        updates["campaign_seed"] = args.seed
    if getattr(args, "parallelism", None) is not None:
        updates["parallelism"] = args.parallelism
    if getattr(args, "output", None) is not None:
        updates["output_dir"] = args.output
    if getattr(args, "mock", None) is not None:
        parse_mock(args.mock)
        updates["mock"] = args.mock
    if getattr(args, "provider", None) is not None:
        chosen = [p for p in config.providers if p.name == args.provider]
        if not chosen:
            names = ", ".join(p.name for p in config.providers) or "none"
            raise ValueError(f"Provider {args.provider!r} not in config (available: {names})")
        updates["providers"] = chosen
        updates["mock"] = None
    if not updates:
        return config
    return CampaignConfig.model_validate({**config.model_dump(), **updates})


def generate(args: argparse.Namespace) -> int:
    config = load_config(args)
    paths = Campaign(config).generate_tasks()
    rprint(f"[bold green]{len(paths)} task files written to {Path(config.output_dir) / 'tasks'}")
    return 0


def run(args: argparse.Namespace) -> int:
    config = load_config(args)
    outcome = Campaign(config).run()

    table = Table(title=f"Campaign {config.name}")
    for column in ("simulations", "executed", "resumed", "incomplete"):
        table.add_column(column, justify="right")
    table.add_row(
        str(len(outcome.results)), str(len(outcome.executed)), str(len(outcome.loaded)), str(len(outcome.incomplete))
    )
    Console().print(table)
    return 0


def analyze_campaigns(args: argparse.Namespace) -> int:
    settings = CampaignConfig.from_yaml(args.config).analysis if args.config else None
    campaigns = [Path(c) for c in args.campaign]
    report = analyze(campaigns, settings)
    write_report(report, campaigns[0] / "analysis")
    for row in report.lambdas:
        rprint(f"[bold]{row.variation}[/bold]: sensitivity {row.lambda_:.1%} ({row.significant}/{row.cells})")
    return 0


def show_report(args: argparse.Namespace) -> int:
    path = Path(args.campaign[0]) / "analysis" / "report.md"
    if not path.exists():
        rprint(f"[bold red]No report at {path}; run 'llmecon analyze' first")
        return 1
    Console().print(Markdown(path.read_text(encoding="utf-8")))
    return 0


def main(argv: list[str] | None = None) -> int:
    """
    Command-line entry point.

    Commands:
    - 'generate': write the budget rounds of every simulation
    - 'run': run (or resume) a campaign
    - 'analyze': compute the report of one or more campaign directories
    - 'report': print a stored report

    Returns:
        int: Exit code (0 for success, 1 for configuration or runtime errors)
    """
    parser = argparse.ArgumentParser(description="Economic rationality experiments for language models")
    parser.add_argument("--verbose", action="store_true", help="Log debug messages")
    subparsers = parser.add_subparsers(dest="command", required=True, help="Commands")

    def add_config(sub: argparse.ArgumentParser) -> None:
        sub.add_argument(
            "--config",
            type=str,
            default=str(DEFAULT_CONFIG),
            help=f"Path to campaign configuration (default: {DEFAULT_CONFIG})",
        )
        sub.add_argument("--seed", type=int, help="Override the campaign seed")
        sub.add_argument("--output", type=str, help="Override the campaign directory")

    generate_parser = subparsers.add_parser("generate", help="Write task files")
    add_config(generate_parser)

    run_parser = subparsers.add_parser("run", help="Run or resume a campaign")
    add_config(run_parser)
    run_parser.add_argument("--parallelism", type=int, help="Concurrent simulations")
    run_parser.add_argument("--provider", type=str, help="Run only the named provider")
    run_parser.add_argument("--mock", type=str, help="Scripted policy instead of providers, e.g. cobb_douglas:0.3")

    analyze_parser = subparsers.add_parser("analyze", help="Analyse campaign directories")
    analyze_parser.add_argument("--campaign", action="append", required=True, help="Campaign directory (repeatable)")
    analyze_parser.add_argument("--config", type=str, help="Take analysis settings from this config")

    report_parser = subparsers.add_parser("report", help="Print a stored report")
    report_parser.add_argument("--campaign", action="append", required=True, help="Campaign directory")

    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    commands = {"generate": generate, "run": run, "analyze": analyze_campaigns, "report": show_report}
    try:
        return commands[args.command](args)
    except (ValidationError, ValueError, OSError, ConfigurationError) as e:
        rprint(f"[bold red]{e}")
        return 1
    except ChatError as e:
        logger.error(f"Campaign aborted: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
