"""Manifest-driven pipeline: resolution, builds, replay, golden snapshot."""

from pathlib import Path

import pytest

from scegen.errors import DomainError
from scegen.mocking import build_mock_gateway
from scegen.opendrive import validate_network
from scegen.pipeline import (
    GeometryOptions,
    RunManifest,
    build_class,
    class_payload,
    enumerate_classes,
    resolve_spec,
    resolved_manifest,
    run_manifest,
)
from scegen.traffic import FunctionalSpec

GOLDEN = Path(__file__).parent / "golden"

B1 = (
    "A car abruptly changes lanes in a roundabout while another vehicle "
    "accelerates to exit, causing a near-collision scenario."
)


class TestResolveSpec:
    def test_explicit_entries_skip_the_gateway(self):
        manifest = RunManifest(num_entries=3, entries=[0, 1, 2])
        spec, factors, unsupported = resolve_spec(manifest, gateway=None)
        assert spec.num_entries == 3
        assert factors.targets == ("angle", "init_speed", "change_lane")
        assert unsupported == []

    def test_description_goes_through_stage_1(self):
        manifest = RunManifest(description=B1, mock_llm=True)
        spec, factors, _ = resolve_spec(manifest, build_mock_gateway())
        assert spec.num_entries == 4
        assert list(spec.entries) == [1, 3]
        assert factors.description == B1

    def test_missing_input_is_a_domain_error(self):
        with pytest.raises(DomainError):
            resolve_spec(RunManifest(), gateway=None)

    def test_entries_without_count_is_a_domain_error(self):
        with pytest.raises(DomainError):
            resolve_spec(RunManifest(entries=[0, 1]), gateway=None)


class TestManifestRoundTrip:
    def test_json_round_trip(self):
        manifest = RunManifest(
            seed=9, class_index="all", reduction="orbit", description="x",
            num_entries=4, entries=[0, 1],
            geometry=GeometryOptions(road_len=80.0, radius=12.0, lanes=(2, 1),
                                     angles=(0.0, 1.6, 1.6, 1.6)),
            mutate="heuristic", intensity=0.25, mock_llm=True, raw_cap=5000,
        )
        assert RunManifest.from_json(manifest.to_json()) == manifest

    def test_resolved_manifest_pins_entries(self):
        manifest = RunManifest(description=B1, mock_llm=True)
        spec, _, _ = resolve_spec(manifest, build_mock_gateway())
        pinned = resolved_manifest(manifest, spec)
        assert pinned.entries == [1, 3]
        assert pinned.num_entries == 4
        # the original manifest is untouched
        assert manifest.entries is None


class TestClassPayload:
    def test_payload_shape(self):
        spec = FunctionalSpec.from_entries(3, [0, 1, 2])
        classes = enumerate_classes(spec)
        payload = class_payload(classes[1], 1)
        assert payload["index"] == 1
        assert payload["members"] >= 1
        assert payload["representative"]["cars"][0].keys() == {
            "id", "entry", "direction", "exit"
        }
        assert isinstance(payload["conflicts"], list)


class TestBuildClass:
    def test_mutated_build_regenerates_the_road_network(self):
        spec = FunctionalSpec.from_entries(4, [1, 3])
        classes = enumerate_classes(spec)
        gateway = build_mock_gateway()
        from scegen.mutation import DangerFactors

        output = build_class(
            classes[0], GeometryOptions(), seed=2, mutate="llm",
            factors=DangerFactors("skew it", targets=("angle",)), gateway=gateway,
        )
        assert output.mutation is not None
        assert any(f.endswith(".angle") for f in output.mutation.changed_fields)
        assert output.mutated_xodr is not None
        assert output.mutated_xodr.content != output.xodr.content
        assert validate_network(output.mutated_xodr.content) == []

    def test_unknown_mutation_mode(self):
        spec = FunctionalSpec.from_entries(3, [0])
        classes = enumerate_classes(spec)
        with pytest.raises(DomainError):
            build_class(classes[0], GeometryOptions(), seed=1, mutate="wobble")


class TestGoldenSnapshot:
    def test_b1_document_pair_is_snapshot_stable(self):
        manifest = RunManifest(
            seed=31, class_index=0, description=B1, mutate="llm", mock_llm=True,
            geometry=GeometryOptions(lanes=(2, 2)),
        )
        run = run_manifest(manifest, build_mock_gateway())
        output = run.outputs[0]
        assert output.final_xodr.content == (GOLDEN / "b1_junction.xodr").read_text()
        assert output.final_xosc.content == (GOLDEN / "b1_scenario.xosc").read_text()
        # the mutated set keeps the abrupt lane change the description asks for
        assert output.mutation is not None
        assert output.final_params.change_lanes
