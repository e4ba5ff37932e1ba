"""Exception hierarchy and the machine-readable violation record."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any


class ScegenError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ScegenError):
    """Input violates a domain invariant (bad range, duplicate id, ...)."""


class CapacityError(ScegenError):
    """Requested enumeration exceeds the configured raw-scenario cap."""


class GeometryError(ScegenError):
    """Junction geometry cannot be built from the given road parameters."""


class ContractError(ScegenError):
    """A stage was invoked with inputs that violate its precondition."""


class RepairError(ScegenError):
    """A violation is structural and cannot be repaired by resampling."""


class DocumentParseError(ScegenError):
    """An XML document could not be parsed; carries the (line, column) hint."""

    def __init__(self, message: str, position: tuple[int, int] | None = None):
        super().__init__(message)
        self.position = position


class GatewayError(ScegenError):
    """LLM gateway failure after all retries; carries every raw response."""

    def __init__(self, message: str, raw_responses: list[str] | None = None):
        super().__init__(message)
        self.raw_responses = raw_responses or []


class GatewayTransportError(GatewayError):
    """Network, timeout or authentication failure, as opposed to bad content."""


class ParseFailure(ScegenError):
    """Stage-1 extraction failed; carries the raw payload when there is one."""

    def __init__(self, message: str, payload: str | None = None):
        super().__init__(message)
        self.payload = payload


@dataclass(frozen=True)
class Violation:
    """One broken constraint, addressable enough to be repaired or rendered.

    path uses bracket locators, e.g. ``cars[2].init_speed``; bounds is the
    permitted range/domain (tuple for numeric ranges, tuple of choices for
    categorical domains, or a descriptive string for structural findings).
    """

    path: str
    rule: str
    observed: Any
    bounds: Any

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"{self.path}: {self.rule} (observed={self.observed!r}, bounds={self.bounds!r})"
