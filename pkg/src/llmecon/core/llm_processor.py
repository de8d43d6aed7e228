"""
Chat-completion client for OpenAI-compatible endpoints.

Requests are plain non-streaming POSTs with the role-tagged message list. Responses in
both the OpenAI (`choices[0].message.content`) and Ollama (`message.content`) shapes
are accepted.
"""

import os
from typing import Any, ClassVar, Self

from loguru import logger
from pydantic import BaseModel, Field, model_validator
import requests
from tenacity import (
    RetryCallState,
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
    wait_random_exponential,
)

Message = dict[str, str]

# published defaults of the studied model families, matched on the model id
DEFAULT_TEMPERATURES: tuple[tuple[str, float], ...] = (
    ("gpt", 1.0),
    ("deepseek", 0.3),
    ("llama", 0.6),
    ("qwen", 0.7),
)


def default_temperature(model_id: str) -> float:
    name = model_id.lower()
    return next((t for prefix, t in DEFAULT_TEMPERATURES if prefix in name), 1.0)


class ChatError(Exception):
    """Base class for chat transport failures."""


class TransportError(ChatError):
    """Connection failure, timeout, rate limit, server error or unreadable body; retried."""


class AuthenticationError(ChatError):
    """Credential rejected by the endpoint; never retried."""


class ConfigurationError(ChatError):
    """Provider cannot be used as configured, e.g. its credential variable is unset."""


class ProviderConfig(BaseModel):
    """
    One chat-completion endpoint.

    `temperature` falls back to the published default of the model family. The credential
    is read from the environment variable named by `credential_env_var`; None means the
    endpoint takes no credential.
    """

    name: str = "default"
    endpoint_url: str
    model_id: str
    temperature: float | None = Field(default=None, ge=0)
    random_seed: int | None = None
    max_retries_per_round: int = Field(default=10, ge=1)
    request_timeout: float = Field(default=60.0, gt=0)
    credential_env_var: str | None = "OPENAI_API_KEY"
    max_request_attempts: int = Field(default=5, ge=1)
    backoff_initial: float = Field(default=1.0, ge=0)
    backoff_max: float = Field(default=60.0, ge=0)

    @model_validator(mode="after")
    def _fill_temperature(self) -> Self:
        if self.temperature is None:
            self.temperature = default_temperature(self.model_id)
        return self

    @property
    def effective_temperature(self) -> float:
        return self.temperature if self.temperature is not None else default_temperature(self.model_id)

    def credential(self) -> str | None:
        """
        The API key from the environment, None when the endpoint takes none.

        Raises:
            ConfigurationError: If the credential variable is named but unset
        """
        if not self.credential_env_var:
            return None
        api_key = os.environ.get(self.credential_env_var)
        if not api_key:
            raise ConfigurationError(f"Provider {self.name!r} needs the environment variable {self.credential_env_var}")
        return api_key


class ChatClient:
    """
    Sends one chat request per `chat` call, retrying transport failures with random
    exponential backoff.

    Args:
        provider: Endpoint settings
        session: Optional requests session; module-level `requests.post` is used otherwise

    Raises:
        ConfigurationError: If the credential variable is named but unset
    """

    RETRY_STATUS: ClassVar[frozenset[int]] = frozenset({408, 409, 425, 429, 500, 502, 503, 504})
    AUTH_STATUS: ClassVar[frozenset[int]] = frozenset({401, 403})

    def __init__(self, provider: ProviderConfig, session: requests.Session | None = None) -> None:
        self.provider = provider
        self.session = session
        self.retry_count = 0
        self.headers = {"Content-Type": "application/json"}
        api_key = provider.credential()
        if api_key:
            self.headers["Authorization"] = f"Bearer {api_key}"

    @property
    def model_id(self) -> str:
        return self.provider.model_id

    def _payload(self, messages: list[Message], temperature: float | None) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "model": self.provider.model_id,
            "messages": messages,
            "stream": False,
            "temperature": self.provider.effective_temperature if temperature is None else temperature,
        }
        if self.provider.random_seed is not None:
            payload["seed"] = self.provider.random_seed
        return payload

    @staticmethod
    def _extract_content(body: Any) -> str:
        if not isinstance(body, dict):
            raise TransportError(f"Unexpected response body: {str(body)[:200]}")
        try:
            if "choices" in body:  # OpenAI format
                content = body["choices"][0]["message"]["content"]
            else:  # Ollama format
                content = body["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise TransportError(f"Response lacks message content: {str(body)[:200]}") from e
        if not isinstance(content, str):
            raise TransportError("Message content is not text")
        return content

    def _post_once(self, payload: dict[str, Any]) -> str:
        post = self.session.post if self.session is not None else requests.post
        try:
            response = post(
                self.provider.endpoint_url,
                headers=self.headers,
                json=payload,
                timeout=self.provider.request_timeout,
            )
        except requests.exceptions.Timeout as e:
            raise TransportError(f"Request timed out after {self.provider.request_timeout}s") from e
        except requests.exceptions.RequestException as e:
            raise TransportError(f"Request failed: {e}") from e

        if response.status_code in self.AUTH_STATUS:
            raise AuthenticationError(f"HTTP {response.status_code} from {self.provider.endpoint_url}")
        if response.status_code in self.RETRY_STATUS or response.status_code >= 500:
            raise TransportError(f"HTTP {response.status_code} from {self.provider.endpoint_url}")
        if response.status_code >= 400:
            raise ChatError(f"HTTP {response.status_code} from {self.provider.endpoint_url}: {response.text[:200]}")
        try:
            body = response.json()
        except ValueError as e:
            raise TransportError("Response body is not JSON") from e
        return self._extract_content(body)

    def _log_retry(self, state: RetryCallState) -> None:
        self.retry_count += 1
        exc = state.outcome.exception() if state.outcome else None
        wait = state.next_action.sleep if state.next_action else 0.0
        logger.warning(
            f"Chat request to {self.provider.name} failed (attempt {state.attempt_number}): {exc}; "
            f"retrying in {wait:.1f}s"
        )

    def chat(self, messages: list[Message], temperature: float | None = None) -> str:
        """
        Return the assistant text for `messages`.

        Raises:
            ValueError: If `messages` is empty
            TransportError: If every attempt failed with a retryable error
            AuthenticationError: If the endpoint rejected the credential
        """
        if not messages:
            raise ValueError("chat needs at least one message")
        payload = self._payload(messages, temperature)
        logger.debug(f"Chat request to {self.provider.model_id} with {len(messages)} messages")
        retrying = Retrying(
            wait=wait_random_exponential(multiplier=self.provider.backoff_initial, max=self.provider.backoff_max),
            stop=stop_after_attempt(self.provider.max_request_attempts),
            retry=retry_if_exception_type(TransportError),
            before_sleep=self._log_retry,
            reraise=True,
        )
        return retrying(self._post_once, payload)


def chat(messages: list[Message], provider: ProviderConfig) -> str:
    """One-off request; long-running callers keep a `ChatClient` instead."""
    return ChatClient(provider).chat(messages)
