"""Tests for the chat-completion client with requests.post replaced by a scripted fake."""

from typing import Any

import pytest
import requests

from llmecon.core.llm_processor import (
    AuthenticationError,
    ChatClient,
    ChatError,
    ConfigurationError,
    ProviderConfig,
    TransportError,
    default_temperature,
)

MESSAGES = [{"role": "system", "content": "You are a helpful assistant."}, {"role": "user", "content": "Hi"}]


class FakeResponse:
    def __init__(self, status_code: int, body: Any = None) -> None:
        self.status_code = status_code
        self._body = body
        self.text = str(body)

    def json(self) -> Any:
        if isinstance(self._body, Exception):
            raise self._body
        return self._body


class FakePost:
    """Replays responses (or raises exceptions) in order and records the payloads it saw."""

    def __init__(self, *responses: FakeResponse | Exception) -> None:
        self.responses = list(responses)
        self.calls: list[dict[str, Any]] = []

    def __call__(self, url: str, headers: dict[str, str], json: dict[str, Any], timeout: float) -> FakeResponse:
        self.calls.append({"url": url, "headers": headers, "json": json, "timeout": timeout})
        response = self.responses.pop(0)
        if isinstance(response, Exception):
            raise response
        return response


def openai_body(text: str) -> dict[str, Any]:
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


@pytest.fixture
def provider(monkeypatch: pytest.MonkeyPatch) -> ProviderConfig:
    monkeypatch.setenv("TEST_API_KEY", "sk-test")
    return ProviderConfig(
        name="test",
        endpoint_url="http://localhost:9999/v1/chat/completions",
        model_id="gpt-4o",
        credential_env_var="TEST_API_KEY",
        backoff_initial=0,
        backoff_max=0,
    )


def install(monkeypatch: pytest.MonkeyPatch, fake: FakePost) -> FakePost:
    monkeypatch.setattr(requests, "post", fake)
    return fake


def test_request_shape(monkeypatch: pytest.MonkeyPatch, provider: ProviderConfig) -> None:
    fake = install(monkeypatch, FakePost(FakeResponse(200, openai_body("[[$50]]"))))
    client = ChatClient(provider.model_copy(update={"random_seed": 7}))

    assert client.chat(MESSAGES, temperature=0.2) == "[[$50]]"
    call = fake.calls[0]
    assert call["headers"]["Authorization"] == "Bearer sk-test"
    assert call["json"] == {"model": "gpt-4o", "messages": MESSAGES, "stream": False, "temperature": 0.2, "seed": 7}
    assert call["timeout"] == provider.request_timeout


def test_rate_limit_is_retried(monkeypatch: pytest.MonkeyPatch, provider: ProviderConfig) -> None:
    fake = install(
        monkeypatch,
        FakePost(FakeResponse(429, "slow down"), FakeResponse(429, "slow down"), FakeResponse(200, openai_body("ok"))),
    )
    client = ChatClient(provider)
    assert client.chat(MESSAGES) == "ok"
    assert client.retry_count == 2
    assert len(fake.calls) == 3


def test_connection_errors_are_retried_until_attempts_run_out(
    monkeypatch: pytest.MonkeyPatch, provider: ProviderConfig
) -> None:
    failures = [requests.exceptions.ConnectionError("refused") for _ in range(3)]
    fake = install(monkeypatch, FakePost(*failures))
    client = ChatClient(provider.model_copy(update={"max_request_attempts": 3}))
    with pytest.raises(TransportError):
        client.chat(MESSAGES)
    assert len(fake.calls) == 3


@pytest.mark.parametrize("status", [401, 403])
def test_authentication_failure_is_not_retried(
    monkeypatch: pytest.MonkeyPatch, provider: ProviderConfig, status: int
) -> None:
    fake = install(monkeypatch, FakePost(FakeResponse(status, "denied"), FakeResponse(200, openai_body("ok"))))
    with pytest.raises(AuthenticationError):
        ChatClient(provider).chat(MESSAGES)
    assert len(fake.calls) == 1


def test_client_error_is_fatal(monkeypatch: pytest.MonkeyPatch, provider: ProviderConfig) -> None:
    fake = install(monkeypatch, FakePost(FakeResponse(400, "bad model"), FakeResponse(200, openai_body("ok"))))
    with pytest.raises(ChatError) as excinfo:
        ChatClient(provider).chat(MESSAGES)
    assert not isinstance(excinfo.value, TransportError)
    assert len(fake.calls) == 1


def test_ollama_body(monkeypatch: pytest.MonkeyPatch, provider: ProviderConfig) -> None:
    install(monkeypatch, FakePost(FakeResponse(200, {"message": {"role": "assistant", "content": "[[7]]"}})))
    assert ChatClient(provider).chat(MESSAGES) == "[[7]]"


@pytest.mark.parametrize("body", [{"choices": []}, {"unexpected": True}, ["not", "a", "dict"], ValueError("no json")])
def test_unreadable_body_is_a_transport_error(
    monkeypatch: pytest.MonkeyPatch, provider: ProviderConfig, body: Any
) -> None:
    install(monkeypatch, FakePost(FakeResponse(200, body)))
    client = ChatClient(provider.model_copy(update={"max_request_attempts": 1}))
    with pytest.raises(TransportError):
        client.chat(MESSAGES)


def test_missing_credential(monkeypatch: pytest.MonkeyPatch, provider: ProviderConfig) -> None:
    monkeypatch.delenv("TEST_API_KEY")
    with pytest.raises(ConfigurationError):
        ChatClient(provider)


def test_endpoint_without_credential(monkeypatch: pytest.MonkeyPatch) -> None:
    fake = install(monkeypatch, FakePost(FakeResponse(200, openai_body("ok"))))
    provider = ProviderConfig(
        endpoint_url="http://localhost:11434/api/chat", model_id="llama3", credential_env_var=None
    )
    ChatClient(provider).chat(MESSAGES)
    assert "Authorization" not in fake.calls[0]["headers"]


def test_empty_messages_rejected(provider: ProviderConfig) -> None:
    with pytest.raises(ValueError):
        ChatClient(provider).chat([])


@pytest.mark.parametrize(
    "model_id,expected",
    [("gpt-4o", 1.0), ("deepseek-chat", 0.3), ("Meta-Llama-3.1-70B", 0.6), ("qwen2.5-72b", 0.7), ("mistral", 1.0)],
)
def test_default_temperature(model_id: str, expected: float) -> None:
    assert default_temperature(model_id) == expected
    provider = ProviderConfig(endpoint_url="http://x", model_id=model_id, credential_env_var=None)
    assert provider.temperature == expected


def test_explicit_temperature_wins() -> None:
    provider = ProviderConfig(endpoint_url="http://x", model_id="gpt-4o", temperature=0.0, credential_env_var=None)
    assert provider.effective_temperature == 0.0
