"""Stage 1: structured extraction of a functional spec from prose."""

from __future__ import annotations

from dataclasses import dataclass

import pydantic

from .errors import DomainError, GatewayError, ParseFailure
from .gateway import CompletionRequest, Gateway, load_prompt, register_schema
from .mutation import DangerFactors, MUTATION_TARGETS
from .traffic import FunctionalSpec

EXTRACT_SCHEMA_ID = "scenario-extract-v1"
EXTRACT_PROMPT = "scenario_extract_v1.txt"


class ScenarioExtract(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    num_cars: int = pydantic.Field(ge=1)
    num_entries: int = pydantic.Field(ge=3)
    entries: list[int] | None = None
    danger_targets: list[str] = pydantic.Field(default_factory=list)
    unsupported: list[str] = pydantic.Field(default_factory=list)


register_schema(EXTRACT_SCHEMA_ID, ScenarioExtract)


@dataclass(frozen=True)
class ParseOutcome:
    spec: FunctionalSpec
    factors: DangerFactors
    unsupported_actions: tuple[str, ...]


def assign_entries(
    num_cars: int, num_entries: int, explicit: list[int] | None = None
) -> list[int]:
    """Explicit entry list passed through when valid, else round-robin."""
    if num_entries < 3:
        raise DomainError(f"need at least 3 entries, got {num_entries}")
    if num_cars < 1:
        raise DomainError(f"need at least 1 car, got {num_cars}")
    if explicit is not None:
        if len(explicit) != num_cars:
            raise DomainError(
                f"{num_cars} cars but {len(explicit)} explicit entry assignments"
            )
        for e in explicit:
            if not 0 <= e < num_entries:
                raise DomainError(f"explicit entry {e} outside [0, {num_entries})")
        return list(explicit)
    return [i % num_entries for i in range(num_cars)]


def build_extract_request(text: str) -> CompletionRequest:
    return CompletionRequest(
        system=load_prompt(EXTRACT_PROMPT), user=text.strip(), schema_id=EXTRACT_SCHEMA_ID
    )


def parse_description(text: str, gateway: Gateway) -> ParseOutcome:
    """Prose -> functional spec + danger factors, or a ParseFailure.

    The extraction schema enforces the numeric invariants, so a hallucinated
    spec never leaks out; requested-but-unsupported behavior is surfaced in
    unsupported_actions rather than dropped.
    """
    if not text or not text.strip():
        raise DomainError("description must be non-empty")
    try:
        result = gateway.complete_structured(build_extract_request(text))
    except GatewayError as exc:
        raise ParseFailure(
            f"extraction failed: {exc}",
            payload="\n---\n".join(exc.raw_responses) or None,
        ) from exc
    extract: ScenarioExtract = result.parsed
    try:
        entries = assign_entries(extract.num_cars, extract.num_entries, extract.entries)
        spec = FunctionalSpec.from_entries(extract.num_entries, entries)
    except DomainError as exc:
        raise ParseFailure(f"extracted values are invalid: {exc}", payload=result.raw) from exc
    targets = tuple(t for t in MUTATION_TARGETS if t in extract.danger_targets)
    factors = DangerFactors(
        description=text.strip(),
        targets=targets or MUTATION_TARGETS,
    )
    return ParseOutcome(spec, factors, tuple(extract.unsupported))
