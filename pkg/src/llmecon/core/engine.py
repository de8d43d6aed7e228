"""
Campaign configuration and orchestration.

A campaign runs `n_sims` simulations for every (provider, condition) pair of one case.
Its directory holds everything needed to resume or re-analyse it:

    manifest.json           config hash and per-simulation seeds
    tasks/sim_NNN.jsonl     budget rounds, shared by all conditions for simulation NNN
    transcripts/<id>.jsonl  append-only dialogue records
    results/<id>.json       written once a simulation finishes
    analysis/               reports produced by `llmecon analyze`
"""

from collections.abc import Callable
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from hashlib import sha256
import json
from pathlib import Path
from typing import TYPE_CHECKING, Literal, Self

from loguru import logger
from pydantic import BaseModel, Field, model_validator
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
import yaml

from ..tasks.budget import BudgetRound, TaskGenConfig, generate_rounds, read_rounds, write_rounds
from ..utils.resources import resolve_path
from .conditions import Condition
from .llm_processor import ProviderConfig
from .simulation import DEFAULT_MAX_RETRIES_PER_ROUND, run_simulation
from .transcript import SimulationResult
from .types import Case

if TYPE_CHECKING:
    from ..agents import AgentProtocol

MOCK_PROVIDER = "mock"


class ConfigHashMismatchError(ValueError):
    """Raised when a campaign directory was produced by a different configuration."""


class AnalysisSettings(BaseModel):
    """
    Options of `llmecon analyze`.

    Attributes:
        comparisons: Extra (condition, condition) pairs tested against each other
        lambda_comparisons: (variation, variation) pairs whose sensitivity scores are compared
        human_reference: CSV with `value` and `case` columns
        published_values: YAML table of published reference numbers, shown next to computed ones
    """

    alpha: float = Field(default=0.05, gt=0, lt=1)
    t_test_variant: Literal["pooled", "welch"] = "pooled"
    use_adjusted_p: bool = True
    turing_draws: int = Field(default=10_000, ge=1)
    turing_decimals: int = Field(default=3, ge=0)
    seed: int = 0
    bronars_agents: int = Field(default=100, ge=0)
    comparisons: list[tuple[str, str]] = Field(default_factory=list)
    lambda_comparisons: list[tuple[str, str]] = Field(default_factory=list)
    human_reference: str | None = None
    published_values: str | None = "configs/reference/published_values.yaml"


class CampaignConfig(BaseModel):
    """
    Configuration of one campaign, loaded from YAML.

    Conditions inherit the campaign case. `output_dir` and `parallelism` do not enter the
    config hash, so a campaign can be moved or resumed with a different worker count.
    """

    name: str = "campaign"
    case: Case
    conditions: list[Condition] = Field(min_length=1)
    providers: list[ProviderConfig] = Field(default_factory=list)
    mock: str | None = None
    n_sims: int = Field(default=100, ge=1)
    campaign_seed: int = 0
    output_dir: str = "runs/campaign"
    parallelism: int = Field(default=1, ge=1)
    task_generation: TaskGenConfig = Field(default_factory=TaskGenConfig)
    analysis: AnalysisSettings = Field(default_factory=AnalysisSettings)

    @model_validator(mode="before")
    @classmethod
    def _inject_case(cls, data: object) -> object:
        if isinstance(data, dict) and "case" in data:
            case = data["case"]
            conditions = data.get("conditions") or []
            data = {
                **data,
                "conditions": [
                    {**c, "case": c.get("case", case)} if isinstance(c, dict) else c for c in conditions
                ],
            }
        return data

    @model_validator(mode="after")
    def _check(self) -> Self:
        self.conditions = [c.for_case(self.case) for c in self.conditions]
        names = [c.name for c in self.conditions]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"Condition names must be unique, repeated: {duplicates}")
        if sum(c.is_baseline for c in self.conditions) > 1:
            raise ValueError("At most one condition may have variation 'baseline'")
        provider_names = [p.name for p in self.providers]
        if len(set(provider_names)) != len(provider_names):
            raise ValueError(f"Provider names must be unique: {provider_names}")

        paths = [self.analysis.human_reference, self.analysis.published_values]
        paths += [c.persona.occupation_tasks_file for c in self.conditions]
        for path in paths:
            if path is not None and not resolve_path(path).exists():
                raise ValueError(f"Referenced file {path} does not exist")
        return self

    @classmethod
    def from_yaml(cls, path: str | Path, key_to_config: tuple[str, ...] = ("Campaign",)) -> "CampaignConfig":
        """
        Load a CampaignConfig from a YAML file.

        Parameters:
            path: Path to the YAML configuration file
            key_to_config: Keys leading to the campaign section

        Returns:
            CampaignConfig: Validated configuration

        Raises:
            ValueError: If the file cannot be decoded or a key is missing
            pydantic.ValidationError: If the configuration is invalid
        """
        path = Path(path)

        for encoding in ["utf-8", "utf-8-sig"]:
            try:
                data = yaml.safe_load(path.read_text(encoding=encoding))
                break
            except UnicodeDecodeError:
                if encoding == "utf-8-sig":
                    raise ValueError(f"Could not decode YAML file {path} with any supported encoding") from None

        config = data
        for key in key_to_config:
            if not isinstance(config, dict) or key not in config:
                raise ValueError(f"Key {key!r} not found in {path}")
            config = config[key]

        return cls.model_validate(config)

    @property
    def config_hash(self) -> str:
        payload = self.model_dump(mode="json", exclude={"output_dir", "parallelism"})
        return sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()

    @property
    def baseline(self) -> Condition | None:
        return next((c for c in self.conditions if c.is_baseline), None)


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed from any tuple of labels."""
    digest = sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class SimulationJob:
    provider: ProviderConfig | None
    condition: Condition
    sim_index: int
    seed: int

    @property
    def provider_name(self) -> str:
        return self.provider.name if self.provider else MOCK_PROVIDER

    @property
    def simulation_id(self) -> str:
        return f"{self.provider_name}__{self.condition.name}__{self.sim_index:03d}"


@dataclass
class CampaignOutcome:
    results: list[SimulationResult] = field(default_factory=list)
    executed: list[str] = field(default_factory=list)
    loaded: list[str] = field(default_factory=list)

    @property
    def incomplete(self) -> list[str]:
        return [r.simulation_id for r in self.results if not r.completed]


AgentFactory = Callable[[ProviderConfig | None, int], "AgentProtocol"]


class Campaign:
    """
    Runs and resumes one campaign directory.

    Args:
        config: Campaign configuration
        agent_factory: Builds the agent of one simulation from (provider, seed); defaults to
            the scripted policy in `config.mock` or a chat client per provider
        root: Campaign directory, defaults to `config.output_dir`
    """

    def __init__(
        self,
        config: CampaignConfig,
        agent_factory: AgentFactory | None = None,
        root: str | Path | None = None,
    ) -> None:
        self.config = config
        self.root = Path(root) if root is not None else Path(config.output_dir)
        self.agent_factory = agent_factory or self._default_agent
        self._live_agents = agent_factory is None and config.mock is None
        self.manifest_path = self.root / "manifest.json"
        self.tasks_dir = self.root / "tasks"
        self.transcripts_dir = self.root / "transcripts"
        self.results_dir = self.root / "results"
        self.analysis_dir = self.root / "analysis"

    def _default_agent(self, provider: ProviderConfig | None, seed: int) -> "AgentProtocol":
        from ..agents import get_agent

        return get_agent(provider, mock=self.config.mock if provider is None else None, seed=seed)

    def task_path(self, sim_index: int) -> Path:
        return self.tasks_dir / f"sim_{sim_index:03d}.jsonl"

    def task_seed(self, sim_index: int) -> int:
        return derive_seed(self.config.campaign_seed, "tasks", sim_index)

    def generate_tasks(self) -> list[Path]:
        """Write the budget rounds of every simulation index; games need none."""
        if not self.config.case.is_budgetary:
            logger.info(f"{self.config.case} campaigns have no task files")
            return []
        paths = []
        for index in range(1, self.config.n_sims + 1):
            path = self.task_path(index)
            rounds = generate_rounds(self.config.case, self.config.task_generation, seed=self.task_seed(index))
            write_rounds(path, rounds)
            paths.append(path)
        logger.success(f"Wrote {len(paths)} task files to {self.tasks_dir}")
        return paths

    def load_rounds(self, sim_index: int) -> list[BudgetRound]:
        return read_rounds(self.task_path(sim_index))

    def jobs(self) -> list[SimulationJob]:
        providers: list[ProviderConfig | None] = [None] if self.config.mock else list(self.config.providers)
        if not providers:
            raise ValueError("A campaign needs at least one provider or a mock policy")
        return [
            SimulationJob(
                provider=provider,
                condition=condition,
                sim_index=index,
                seed=derive_seed(self.config.campaign_seed, condition.name, index),
            )
            for provider in providers
            for condition in self.config.conditions
            for index in range(1, self.config.n_sims + 1)
        ]

    def _manifest(self, jobs: list[SimulationJob]) -> dict[str, object]:
        return {
            "name": self.config.name,
            "case": self.config.case.value,
            "config_hash": self.config.config_hash,
            "campaign_seed": self.config.campaign_seed,
            "n_sims": self.config.n_sims,
            "seeds": {job.simulation_id: job.seed for job in jobs},
            "task_seeds": {f"sim_{i:03d}": self.task_seed(i) for i in range(1, self.config.n_sims + 1)},
            "config": self.config.model_dump(mode="json", exclude={"output_dir", "parallelism"}),
        }

    def prepare(self, jobs: list[SimulationJob]) -> None:
        """Write or check the manifest, and make sure task files exist."""
        if self.manifest_path.exists():
            recorded = json.loads(self.manifest_path.read_text(encoding="utf-8")).get("config_hash")
            if recorded != self.config.config_hash:
                raise ConfigHashMismatchError(
                    f"{self.root} was produced by config {recorded}, current config is {self.config.config_hash}"
                )
        else:
            self.root.mkdir(parents=True, exist_ok=True)
            self.manifest_path.write_text(
                json.dumps(self._manifest(jobs), indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
        if self.config.case.is_budgetary and any(
            not self.task_path(i).exists() for i in range(1, self.config.n_sims + 1)
        ):
            self.generate_tasks()

    def _run_job(self, job: SimulationJob) -> SimulationResult:
        agent = self.agent_factory(job.provider, job.seed)
        rounds = self.load_rounds(job.sim_index) if self.config.case.is_budgetary else None
        max_retries = job.provider.max_retries_per_round if job.provider else DEFAULT_MAX_RETRIES_PER_ROUND
        result, _ = run_simulation(
            job.condition,
            agent,
            seed=job.seed,
            rounds=rounds,
            simulation_id=job.simulation_id,
            max_retries_per_round=max_retries,
            transcript_path=self.transcripts_dir / f"{job.simulation_id}.jsonl",
        )
        if rounds is not None:
            rounds_file = str(self.task_path(job.sim_index).relative_to(self.root))
            result = result.model_copy(update={"rounds_file": rounds_file})
        result.write(self.results_dir / f"{job.simulation_id}.json")
        return result

    def run(self, show_progress: bool = True) -> CampaignOutcome:
        """
        Run every simulation without a results file; finished ones are loaded from disk.

        Raises:
            ConfigHashMismatchError: If the directory belongs to another configuration
            ConfigurationError: If a provider credential is missing, before any request is sent
            AuthenticationError: If a provider rejects its credential
        """
        jobs = self.jobs()
        if self._live_agents:
            for provider in self.config.providers:
                provider.credential()
        self.prepare(jobs)
        outcome = CampaignOutcome()
        results: dict[str, SimulationResult] = {}
        pending: list[SimulationJob] = []
        for job in jobs:
            result_path = self.results_dir / f"{job.simulation_id}.json"
            if result_path.exists():
                results[job.simulation_id] = SimulationResult.read(result_path)
                outcome.loaded.append(job.simulation_id)
            else:
                (self.transcripts_dir / f"{job.simulation_id}.jsonl").unlink(missing_ok=True)
                pending.append(job)
        if outcome.loaded:
            logger.info(f"Resuming {self.root}: {len(outcome.loaded)} simulations already finished")

        with (
            Progress(
                TextColumn("[grey50][progress.description]{task.description}"),
                BarColumn(),
                MofNCompleteColumn(),
                TimeElapsedColumn(),
                disable=not show_progress,
            ) as progress,
            ThreadPoolExecutor(max_workers=self.config.parallelism) as pool,
        ):
            task_id = progress.add_task(f"{self.config.name}", total=len(pending))
            futures: dict[Future[SimulationResult], SimulationJob] = {
                pool.submit(self._run_job, job): job for job in pending
            }
            try:
                for future, job in futures.items():
                    results[job.simulation_id] = future.result()
                    outcome.executed.append(job.simulation_id)
                    progress.advance(task_id)
            except BaseException:
                for other in futures:
                    other.cancel()
                raise

        outcome.results = [results[job.simulation_id] for job in jobs]
        if outcome.incomplete:
            logger.warning(f"{len(outcome.incomplete)} incomplete simulations: {', '.join(outcome.incomplete)}")
        logger.success(f"Campaign {self.config.name}: {len(outcome.results)} simulations in {self.root}")
        return outcome


def load_results(campaign_dir: str | Path) -> list[SimulationResult]:
    """All finished simulations of a campaign directory, in file-name order."""
    results_dir = Path(campaign_dir) / "results"
    return [SimulationResult.read(path) for path in sorted(results_dir.glob("*.json"))]


def run_campaign(
    case: Case,
    conditions: list[Condition],
    provider: ProviderConfig | None = None,
    n_sims: int = 100,
    parallelism: int = 1,
    output_dir: str | Path = "runs/campaign",
    campaign_seed: int = 0,
    mock: str | None = None,
    agent_factory: AgentFactory | None = None,
) -> CampaignOutcome:
    """Convenience wrapper building a CampaignConfig and running it."""
    config = CampaignConfig(
        case=case,
        conditions=conditions,
        providers=[provider] if provider else [],
        mock=mock,
        n_sims=n_sims,
        parallelism=parallelism,
        output_dir=str(output_dir),
        campaign_seed=campaign_seed,
        analysis=AnalysisSettings(published_values=None),
    )
    return Campaign(config, agent_factory=agent_factory).run(show_progress=False)
