"""Minimal chat-completion client with schema-constrained output and retries.

One provider speaks the OpenAI-compatible chat/completions wire protocol;
the mock provider answers from a hash-keyed fixture map (plus optional
per-schema synthesizers) and never opens a connection.  A completion only
counts as success once its content parses and validates against the
registered schema; otherwise the request is retried with a corrective
suffix up to the configured limit.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Protocol

import pydantic

from .errors import GatewayError, GatewayTransportError


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = "https://api.deepseek.com/v1"
    model_name: str = "deepseek-chat"
    api_key_env: str = "SCEGEN_LLM_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class CompletionRequest:
    system: str
    user: str
    schema_id: str


@dataclass
class CompletionResult:
    raw: str
    parsed: Any
    usage: dict = field(default_factory=dict)
    attempts: int = 1


_SCHEMAS: dict[str, type[pydantic.BaseModel]] = {}


def register_schema(schema_id: str, model: type[pydantic.BaseModel]) -> None:
    _SCHEMAS[schema_id] = model


def request_hash(req: CompletionRequest) -> str:
    digest = hashlib.sha256(
        f"{req.schema_id}\n{req.system}\n{req.user}".encode("utf-8")
    )
    return digest.hexdigest()


_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def extract_json(content: str) -> Any:
    """Pull the JSON object out of a reply, tolerating markdown fences."""
    text = content.strip()
    fenced = _FENCE_RE.search(text)
    if fenced:
        text = fenced.group(1).strip()
    return json.loads(text)


class Provider(Protocol):
    def send(self, req: CompletionRequest, cfg: ProviderConfig) -> tuple[str, dict]:
        """Return (content, usage); raise GatewayTransportError on failure."""
        ...


class OpenAIChatProvider:
    """POSTs to {base_url}/chat/completions with temperature 0."""

    def send(self, req: CompletionRequest, cfg: ProviderConfig) -> tuple[str, dict]:
        import httpx

        api_key = os.environ.get(cfg.api_key_env, "")
        if not api_key:
            raise GatewayTransportError(
                f"no API key in environment variable {cfg.api_key_env}"
            )
        try:
            response = httpx.post(
                f"{cfg.base_url.rstrip('/')}/chat/completions",
                headers={"Authorization": f"Bearer {api_key}"},
                json={
                    "model": cfg.model_name,
                    "temperature": 0,
                    "messages": [
                        {"role": "system", "content": req.system},
                        {"role": "user", "content": req.user},
                    ],
                },
                timeout=cfg.timeout,
            )
        except httpx.HTTPError as exc:
            raise GatewayTransportError(f"transport failure: {exc}") from exc
        if response.status_code in (401, 403):
            raise GatewayTransportError(f"authentication failed: {response.status_code}")
        if response.status_code != 200:
            raise GatewayTransportError(
                f"provider returned {response.status_code}: {response.text[:200]}"
            )
        body = response.json()
        content = body["choices"][0]["message"]["content"]
        return content, body.get("usage", {})


class MockProvider:
    """Offline provider: exact answers by request hash, synthesized answers
    per schema otherwise."""

    def __init__(
        self,
        responses: dict[str, str] | None = None,
        synthesizers: dict[str, Callable[[CompletionRequest], str]] | None = None,
    ):
        self.responses = dict(responses or {})
        self.synthesizers = dict(synthesizers or {})

    def add_response(self, req: CompletionRequest, content: str) -> None:
        self.responses[request_hash(req)] = content

    def send(self, req: CompletionRequest, cfg: ProviderConfig) -> tuple[str, dict]:
        key = request_hash(req)
        if key in self.responses:
            return self.responses[key], {"mock": True}
        synth = self.synthesizers.get(req.schema_id)
        if synth is not None:
            return synth(req), {"mock": True, "synthesized": True}
        raise GatewayTransportError(
            f"mock provider has no response for schema {req.schema_id!r} (hash {key[:12]})"
        )


class ScriptedProvider:
    """Replays a fixed sequence of contents; for exercising the retry path."""

    def __init__(self, contents: list[str]):
        self.contents = list(contents)
        self.sent = 0

    def send(self, req: CompletionRequest, cfg: ProviderConfig) -> tuple[str, dict]:
        if self.sent >= len(self.contents):
            raise GatewayTransportError("scripted provider exhausted")
        content = self.contents[self.sent]
        self.sent += 1
        return content, {"scripted": True}


_CORRECTIVE = (
    "\n\nYour previous reply was not valid ({error}). "
    "Reply with ONLY a JSON object that matches the requested schema."
)


class Gateway:
    """Shared entry point: validated completion with sequential retries."""

    def __init__(self, provider: Provider, config: ProviderConfig | None = None):
        self.provider = provider
        self.config = config or ProviderConfig()

    def complete_structured(self, req: CompletionRequest) -> CompletionResult:
        model = _SCHEMAS.get(req.schema_id)
        if model is None:
            raise GatewayError(f"schema {req.schema_id!r} is not registered")
        raws: list[str] = []
        user = req.user
        last_error = ""
        for attempt in range(1, self.config.max_retries + 2):
            content, usage = self.provider.send(
                CompletionRequest(req.system, user, req.schema_id), self.config
            )
            raws.append(content)
            try:
                data = extract_json(content)
                parsed = model.model_validate(data)
                return CompletionResult(content, parsed, usage, attempts=attempt)
            except (json.JSONDecodeError, pydantic.ValidationError) as exc:
                last_error = str(exc).splitlines()[0]
                user = req.user + _CORRECTIVE.format(error=last_error)
        raise GatewayError(
            f"no schema-valid response after {len(raws)} attempts "
            f"(last error: {last_error})",
            raw_responses=raws,
        )


def load_prompt(name: str) -> str:
    return (resources.files("scegen") / "prompts" / name).read_text(encoding="utf-8")
