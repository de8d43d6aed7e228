from collections.abc import Callable, Iterator
from pathlib import Path
from typing import Any

from loguru import logger
import pytest

from llmecon.core.conditions import Condition
from llmecon.core.engine import AnalysisSettings, CampaignConfig
from llmecon.core.types import Case

ConfigFactory = Callable[..., CampaignConfig]


@pytest.fixture(autouse=True)
def quiet_logs() -> Iterator[None]:
    logger.remove()
    yield
    logger.remove()


@pytest.fixture
def make_config(tmp_path: Path) -> ConfigFactory:
    """Small offline campaign in a temporary directory; keyword arguments override fields."""

    def factory(**overrides: Any) -> CampaignConfig:
        fields: dict[str, Any] = {
            "name": "test",
            "case": Case.RISK,
            "conditions": [
                Condition(),
                Condition(name="no_example", variation="example", include_example=False),
            ],
            "mock": "uniform_random",
            "n_sims": 3,
            "campaign_seed": 1,
            "output_dir": str(tmp_path / "campaign"),
            "analysis": AnalysisSettings(published_values=None, bronars_agents=20),
        }
        fields.update(overrides)
        return CampaignConfig(**fields)

    return factory
