"""Agents answering rendered prompts: live chat endpoints or scripted policies."""

from typing import Protocol

from ..core.llm_processor import ChatClient, ProviderConfig
from .scripted import (
    CannedAgent,
    FaultyAgent,
    MalformedMode,
    ScriptedAgent,
    ScriptedPolicy,
    UnparsablePromptError,
    parse_mock,
    read_prompt,
    scripted_agent,
)


class AgentProtocol(Protocol):
    @property
    def model_id(self) -> str: ...
    def chat(self, messages: list[dict[str, str]], temperature: float | None = None) -> str: ...


# Factory function
def get_agent(provider: ProviderConfig | None = None, mock: str | None = None, seed: int = 0) -> AgentProtocol:
    """
    Factory function returning the agent for one simulation.

    Parameters:
        provider: Endpoint used when no mock policy is given
        mock: Scripted policy spec such as "corner_maximizer" or "cobb_douglas:0.3"
        seed: Stream seed for randomized scripted policies

    Returns:
        AgentProtocol: A scripted agent or a chat client

    Raises:
        ValueError: If neither a provider nor a mock policy is given
        ConfigurationError: If the provider's credential is missing
    """
    if mock is not None:
        return scripted_agent(mock, seed=seed)
    if provider is None:
        raise ValueError("get_agent needs a provider or a mock policy")
    return ChatClient(provider)


__all__ = [
    "AgentProtocol",
    "CannedAgent",
    "FaultyAgent",
    "MalformedMode",
    "ScriptedAgent",
    "ScriptedPolicy",
    "UnparsablePromptError",
    "get_agent",
    "parse_mock",
    "read_prompt",
    "scripted_agent",
]
