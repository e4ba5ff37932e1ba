"""Shared XML document plumbing for the OpenDRIVE/OpenSCENARIO emitters."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import DocumentParseError, Violation

# Fixed header date keeps emission byte-stable for identical inputs.
DOCUMENT_DATE = "2025-01-01T00:00:00"
AUTHOR = "scegen"


@dataclass(frozen=True)
class ScenarioDocument:
    """Emitted XML plus the structural findings collected on emission."""

    kind: str  # "opendrive" | "openscenario"
    content: str
    findings: tuple[Violation, ...] = field(default_factory=tuple)

    def root(self) -> ET.Element:
        return parse_xml(self.content)


def fnum(value: float) -> str:
    """Float attribute text; repr round-trips exactly and is deterministic."""
    return repr(float(value))


def serialize(root: ET.Element) -> str:
    """UTF-8 XML with declaration and 2-space indent, trailing newline."""
    ET.indent(root, space="  ")
    text = ET.tostring(root, encoding="unicode", xml_declaration=False)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + text + "\n"


def parse_xml(content: str | bytes) -> ET.Element:
    try:
        return ET.fromstring(content)
    except ET.ParseError as exc:
        raise DocumentParseError(f"malformed XML: {exc}", position=exc.position) from exc
