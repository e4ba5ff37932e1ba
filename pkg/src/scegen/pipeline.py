"""Shared orchestration for the CLI and the HTTP service.

A RunManifest pins everything a build needs (input spec or description,
reduction mode, geometry options, class choice, seeds, mutation settings),
so replaying a manifest reproduces byte-identical artifacts.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .documents import ScenarioDocument
from .errors import DomainError
from .gateway import Gateway, OpenAIChatProvider, ProviderConfig
from .junction import IntersectionGeometry, build_geometry, default_roads
from .mocking import build_mock_gateway
from .mutation import (
    DangerFactors,
    MUTATION_TARGETS,
    MutationResult,
    heuristic_criticality,
    mutate_llm,
)
from .nlparse import parse_description
from .opendrive import emit_opendrive
from .openscenario import emit_openscenario
from .params import ParameterSet, concretize, params_to_json
from .traffic import (
    DEFAULT_RAW_CAP,
    FunctionalSpec,
    PatternClass,
    conflict_matrix,
    enumerate_raw,
    reduce_by_pattern,
    rotation_orbits,
)

XODR_FILENAME = "junction.xodr"
XOSC_FILENAME = "scenario.xosc"
PARAMS_FILENAME = "params.json"
MANIFEST_FILENAME = "manifest.json"


@dataclass(frozen=True)
class GeometryOptions:
    road_len: float = 100.0
    radius: float = 15.0
    lanes: tuple[int, int] = (1, 1)
    angles: tuple[float, ...] | None = None
    lane_pairs: tuple[tuple[int, int], ...] | None = None

    def roads_for(self, num_entries: int):
        return default_roads(
            num_entries,
            road_len=self.road_len,
            lanes=self.lanes,
            angles=list(self.angles) if self.angles is not None else None,
            lane_pairs=[tuple(p) for p in self.lane_pairs] if self.lane_pairs else None,
        )

    def build(self, num_entries: int) -> IntersectionGeometry:
        return build_geometry(self.roads_for(num_entries), junction_radius=self.radius)


@dataclass
class RunManifest:
    seed: int = 0
    class_index: int | str = 0
    reduction: str = "pattern"
    description: str | None = None
    num_entries: int | None = None
    entries: list[int] | None = None
    geometry: GeometryOptions = field(default_factory=GeometryOptions)
    mutate: str | None = None
    factors_description: str | None = None
    factors_targets: list[str] | None = None
    intensity: float = 0.5
    mock_llm: bool = False
    raw_cap: int = DEFAULT_RAW_CAP

    def to_json(self) -> dict:
        data = asdict(self)
        data["geometry"] = asdict(self.geometry)
        return data

    @classmethod
    def from_json(cls, data: dict) -> "RunManifest":
        geo = data.get("geometry") or {}
        options = GeometryOptions(
            road_len=geo.get("road_len", 100.0),
            radius=geo.get("radius", 15.0),
            lanes=tuple(geo.get("lanes", (1, 1))),
            angles=tuple(geo["angles"]) if geo.get("angles") else None,
            lane_pairs=tuple(tuple(p) for p in geo["lane_pairs"]) if geo.get("lane_pairs") else None,
        )
        return cls(
            seed=data.get("seed", 0),
            class_index=data.get("class_index", 0),
            reduction=data.get("reduction", "pattern"),
            description=data.get("description"),
            num_entries=data.get("num_entries"),
            entries=list(data["entries"]) if data.get("entries") is not None else None,
            geometry=options,
            mutate=data.get("mutate"),
            factors_description=data.get("factors_description"),
            factors_targets=list(data["factors_targets"]) if data.get("factors_targets") else None,
            intensity=data.get("intensity", 0.5),
            mock_llm=data.get("mock_llm", False),
            raw_cap=data.get("raw_cap", DEFAULT_RAW_CAP),
        )


def make_gateway(
    mock: bool,
    base_url: str | None = None,
    model: str | None = None,
    max_retries: int = 3,
) -> Gateway:
    if mock:
        return build_mock_gateway(max_retries=max_retries)
    import os

    cfg = ProviderConfig(
        base_url=base_url or os.environ.get("SCEGEN_LLM_BASE_URL") or ProviderConfig.base_url,
        model_name=model or os.environ.get("SCEGEN_LLM_MODEL") or ProviderConfig.model_name,
        max_retries=max_retries,
    )
    return Gateway(OpenAIChatProvider(), cfg)


def resolve_spec(
    manifest: RunManifest, gateway: Gateway | None = None
) -> tuple[FunctionalSpec, DangerFactors, list[str]]:
    """Functional spec from explicit entries when given, else via stage 1."""
    if manifest.entries is not None:
        if manifest.num_entries is None:
            raise DomainError("explicit entries need num_entries")
        spec = FunctionalSpec.from_entries(manifest.num_entries, manifest.entries)
        factors = DangerFactors(
            description=manifest.factors_description or manifest.description or "",
            targets=tuple(manifest.factors_targets or MUTATION_TARGETS),
            intensity=manifest.intensity,
        )
        return spec, factors, []
    if not manifest.description:
        raise DomainError("a build needs either explicit entries or a description")
    if gateway is None:
        gateway = make_gateway(manifest.mock_llm)
    outcome = parse_description(manifest.description, gateway)
    factors = outcome.factors
    if manifest.factors_description or manifest.factors_targets:
        factors = DangerFactors(
            description=manifest.factors_description or outcome.factors.description,
            targets=tuple(manifest.factors_targets or outcome.factors.targets),
            intensity=manifest.intensity,
        )
    return outcome.spec, factors, list(outcome.unsupported_actions)


def enumerate_classes(
    spec: FunctionalSpec, reduction: str = "pattern", cap: int = DEFAULT_RAW_CAP
) -> list[PatternClass]:
    if reduction not in ("pattern", "orbit"):
        raise DomainError(f"unknown reduction mode {reduction!r}")
    raw = enumerate_raw(spec, cap=cap)
    if reduction == "pattern":
        return reduce_by_pattern(raw, spec.num_entries)
    return rotation_orbits(raw, spec.num_entries)


def class_payload(cls: PatternClass, index: int) -> dict:
    n = cls.representative.num_entries
    return {
        "index": index,
        "pattern": cls.pattern.label,
        "counts": {str(d): c for d, c in cls.pattern.counts},
        "members": cls.members,
        "representative": cls.representative.to_json(),
        "conflicts": conflict_matrix(cls.representative, n).to_json(),
    }


@dataclass
class BuildOutput:
    params: ParameterSet
    geometry: IntersectionGeometry
    xodr: ScenarioDocument
    xosc: ScenarioDocument
    mutation: MutationResult | None = None
    mutated_geometry: IntersectionGeometry | None = None
    mutated_xodr: ScenarioDocument | None = None
    mutated_xosc: ScenarioDocument | None = None

    @property
    def final_params(self) -> ParameterSet:
        return self.mutation.params if self.mutation else self.params

    @property
    def final_xodr(self) -> ScenarioDocument:
        return self.mutated_xodr if self.mutated_xodr else self.xodr

    @property
    def final_xosc(self) -> ScenarioDocument:
        return self.mutated_xosc if self.mutated_xosc else self.xosc


def build_class(
    cls: PatternClass,
    options: GeometryOptions,
    seed: int,
    mutate: str | None = None,
    factors: DangerFactors | None = None,
    gateway: Gateway | None = None,
) -> BuildOutput:
    """Concretize one pattern class and emit its document pair, optionally
    raising criticality first via the heuristic or the gateway."""
    scenario = cls.representative
    geometry = options.build(scenario.num_entries)
    params = concretize(scenario, geometry, seed)
    xodr = emit_opendrive(geometry)
    xosc = emit_openscenario(params, geometry, XODR_FILENAME)
    output = BuildOutput(params, geometry, xodr, xosc)

    if mutate is None:
        return output
    if mutate == "heuristic":
        report = conflict_matrix(scenario, scenario.num_entries)
        output.mutation = heuristic_criticality(params, report, geometry)
    elif mutate == "llm":
        if gateway is None:
            raise DomainError("llm mutation needs a configured gateway")
        if factors is None:
            raise DomainError("llm mutation needs danger factors")
        output.mutation = mutate_llm(params, factors, gateway, seed)
    else:
        raise DomainError(f"unknown mutation mode {mutate!r}")

    mutated_params = output.mutation.params
    mutated_geometry = build_geometry(list(mutated_params.roads), junction_radius=options.radius)
    output.mutated_geometry = mutated_geometry
    output.mutated_xodr = emit_opendrive(mutated_geometry)
    output.mutated_xosc = emit_openscenario(mutated_params, mutated_geometry, XODR_FILENAME)
    return output


@dataclass
class ManifestRun:
    spec: FunctionalSpec
    factors: DangerFactors
    unsupported: list[str]
    outputs: dict[int, BuildOutput]


def run_manifest(manifest: RunManifest, gateway: Gateway | None = None) -> ManifestRun:
    """Execute a manifest; outputs are keyed by class index."""
    if gateway is None and (manifest.description or manifest.mutate == "llm"):
        gateway = make_gateway(manifest.mock_llm)
    spec, factors, unsupported = resolve_spec(manifest, gateway)
    classes = enumerate_classes(spec, manifest.reduction, manifest.raw_cap)
    if manifest.class_index == "all":
        chosen = list(enumerate(classes))
    else:
        index = int(manifest.class_index)
        if not 0 <= index < len(classes):
            raise DomainError(
                f"class index {index} outside [0, {len(classes)}) for this spec"
            )
        chosen = [(index, classes[index])]
    outputs = {}
    for index, cls in chosen:
        outputs[index] = build_class(
            cls, manifest.geometry, manifest.seed,
            mutate=manifest.mutate, factors=factors, gateway=gateway,
        )
    return ManifestRun(spec, factors, unsupported, outputs)


def resolved_manifest(manifest: RunManifest, spec: FunctionalSpec) -> RunManifest:
    """Pin the parsed spec into the manifest so replays skip stage 1."""
    pinned = RunManifest.from_json(manifest.to_json())
    pinned.num_entries = spec.num_entries
    pinned.entries = list(spec.entries)
    return pinned


def write_build(out_dir: Path, output: BuildOutput, manifest: RunManifest) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in (
        (XODR_FILENAME, output.final_xodr.content),
        (XOSC_FILENAME, output.final_xosc.content),
        (PARAMS_FILENAME, json.dumps(params_to_json(output.final_params), indent=2) + "\n"),
        (MANIFEST_FILENAME, json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n"),
    ):
        path = out_dir / name
        path.write_text(content, encoding="utf-8")
        written.append(path)
    return written


def parse_angles(text: str) -> tuple[float, ...]:
    """Comma-separated degrees -> radians tuple."""
    try:
        return tuple(math.radians(float(part)) for part in text.split(","))
    except ValueError as exc:
        raise DomainError(f"cannot parse angles {text!r}: {exc}") from exc


def parse_entries(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError as exc:
        raise DomainError(f"cannot parse car entries {text!r}: {exc}") from exc
