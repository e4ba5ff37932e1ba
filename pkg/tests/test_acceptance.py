"""Acceptance suite: one test per acceptance criterion, in order.

Each test prints a single PASS/FAIL line (visible with -s / -rA).  Criterion 3
is asserted exactly as specified; its rotation-orbit conjunct for the 4-entry
full-load case does not hold under the exact cyclic group action (the orbit
count is 24, the multiset count 15; Burnside over 4 rotations), so that test
fails by design rather than weakening the oracle.  See the README note on the
symmetry-class law.
"""

import dataclasses
import json
import random
import time
from contextlib import contextmanager
from math import comb
from pathlib import Path

import pytest

from scegen.cli import main as cli_main
from scegen.junction import build_geometry, default_roads
from scegen.mocking import build_mock_gateway, fixture_cases
from scegen.mutation import (
    CO_ARRIVAL_TOLERANCE,
    DangerFactors,
    heuristic_criticality,
    mutate_llm,
)
from scegen.nlparse import parse_description
from scegen.opendrive import validate_network
from scegen.openscenario import read_scenario_summary
from scegen.params import ChangeLaneSpec, concretize, params_from_json, params_to_json, validate_params
from scegen.pipeline import GeometryOptions, build_class, enumerate_classes
from scegen.traffic import (
    FunctionalSpec,
    LogicalScenario,
    SymbolicMove,
    conflict_matrix,
    enumerate_raw,
    reduce_by_pattern,
    rotation_orbits,
)


@contextmanager
def criterion(number: int, title: str):
    try:
        yield
    except BaseException:
        print(f"FAIL criterion {number}: {title}")
        raise
    print(f"PASS criterion {number}: {title}")


@pytest.fixture()
def no_network(monkeypatch):
    import httpx

    def explode(*args, **kwargs):
        raise AssertionError("network access attempted during acceptance run")

    monkeypatch.setattr(httpx, "post", explode)
    monkeypatch.setattr(httpx, "Client", explode)


def spec_of(n, entries):
    return FunctionalSpec.from_entries(n, entries)


def test_criterion_1_headline_enumeration_counts():
    with criterion(1, "headline enumeration counts (8->4, 27->10) under 1 s"):
        start = time.perf_counter()
        raw3 = enumerate_raw(spec_of(3, [0, 1, 2]))
        classes3 = reduce_by_pattern(raw3, 3)
        raw4 = enumerate_raw(spec_of(4, [0, 1, 2]))
        classes4 = reduce_by_pattern(raw4, 4)
        elapsed = time.perf_counter() - start
        assert len(raw3) == 8
        assert len(classes3) == 4
        assert len(raw4) == 27
        assert len(classes4) == 10
        assert elapsed < 1.0


def test_criterion_2_raw_count_law():
    with criterion(2, "raw count = (n-1)^c for n in [3,6], c in [1,6]"):
        for n in range(3, 7):
            for c in range(1, 7):
                entries = [i % n for i in range(c)]
                assert len(enumerate_raw(spec_of(n, entries))) == (n - 1) ** c


def test_criterion_3_symmetry_class_law():
    with criterion(
        3, "full-load pattern classes = C(c+n-2, c) and = rotation orbits for n in {3,4}"
    ):
        for n in range(3, 7):
            raw = enumerate_raw(spec_of(n, list(range(n))))
            assert len(reduce_by_pattern(raw, n)) == comb(2 * n - 2, n)
        for n in (3, 4):
            raw = enumerate_raw(spec_of(n, list(range(n))))
            patterns = len(reduce_by_pattern(raw, n))
            orbits = len(rotation_orbits(raw, n))
            assert patterns == orbits, (
                f"n={n} full load: {patterns} pattern classes vs {orbits} exact "
                f"rotation orbits; multiset reduction is coarser than the cyclic "
                f"group action here (see the README note)"
            )


def test_criterion_4_encoding_equivalence():
    with criterion(4, "(1,1,2), (1,2,1), (2,1,1) land in one class"):
        raw = enumerate_raw(spec_of(3, [0, 1, 2]))
        classes = reduce_by_pattern(raw, 3)
        owners = {}
        for cls in classes:
            key = tuple(sorted(cls.representative.directions))
            for s in raw:
                if tuple(sorted(s.directions)) == key:
                    owners[s.directions] = cls
        assert owners[(1, 1, 2)] is owners[(1, 2, 1)] is owners[(2, 1, 1)]


# the cases the recorded reference run parsed correctly (a.2 and b.3 were
# wrong in that run and carry no exact expectation)
CORRECT_ROWS = {
    "a.1": (4, 4, [0, 1, 2, 3]),
    "a.3": (2, 4, [0, 3]),
    "a.4": (2, 4, [1, 3]),
    "a.5": (2, 3, [0, 1]),
    "b.1": (2, 4, [1, 3]),
    "b.2": (2, 3, [0, 1]),
    "b.4": (2, 3, [0, 1]),
    "b.5": (2, 4, [1, 3]),
    "b.6": (10, 3, [0, 1, 2, 0, 1, 2, 0, 1, 2, 0]),
}


def test_criterion_5_stage1_fixture_suite(no_network):
    with criterion(5, "stage-1 mock fixture suite matches the correctly-parsed "
                      "rows, offline"):
        gateway = build_mock_gateway()
        cases = {c["case"]: c["description"] for c in fixture_cases()}
        assert len(cases) == 11
        for case, (cars, entries, positions) in CORRECT_ROWS.items():
            outcome = parse_description(cases[case], gateway)
            assert len(outcome.spec.cars) == cars, case
            assert outcome.spec.num_entries == entries, case
            assert list(outcome.spec.entries) == positions, case


def _corrupt(params, rng):
    data = params_to_json(params)
    choices = [
        ("cars", "init_speed", lambda: rng.choice([-10.0, 120.0, 500.0])),
        ("cars", "init_pos", lambda: rng.choice([-5.0, 900.0])),
        ("cars", "turning_pos", lambda: rng.choice([-2.0, 1500.0])),
        ("cars", "final_pos", lambda: rng.choice([-1.0, 700.0])),
        ("cars", "init_lane_id", lambda: rng.choice([3, -9, 0])),
        ("cars", "final_lane_id", lambda: rng.choice([-3, 9, 0])),
        ("cars", "type", lambda: "hovercraft"),
        ("roads", "angle", lambda: 0.0),
        ("roads", "road_len", lambda: rng.choice([-4.0, 0.0, 9000.0])),
        ("roads", "left_num", lambda: rng.choice([-1, 9])),
        ("roads", "right_num", lambda: rng.choice([-2, 7])),
        ("change_lanes", "lane_id_after_change", lambda: rng.choice([7, 0, -8])),
        ("change_lanes", "change_lane_pos", lambda: rng.choice([-3.0, 4000.0])),
    ]
    for _ in range(rng.randint(1, 3)):
        table, field, make = rng.choice(choices)
        rows = data[table]
        if not rows:
            continue
        idx = rng.randrange(len(rows))
        if table == "roads" and idx == 0:
            idx = 1
        rows[idx][field] = make()
    return params_from_json(data)


def _diff_paths(a, b):
    out = set()
    da, db = params_to_json(a), params_to_json(b)
    for table in ("roads", "cars", "change_lanes"):
        for idx, (ra, rb) in enumerate(zip(da[table], db[table])):
            for field in ra:
                if ra[field] != rb[field]:
                    out.add(f"{table}[{idx}].{field}")
    return out


def test_criterion_6_validate_repair_property():
    from scegen.params import repair_params

    with criterion(6, "1,000 corrupted sets: validate-repair-validate clean, "
                      "single pass, only violated fields, under 10 s"):
        geo = build_geometry(default_roads(3, lanes=(2, 2)))
        spec = spec_of(3, [0, 1, 2])
        scenario = enumerate_raw(spec)[5]
        base = concretize(scenario, geo, seed=11)
        ego = base.cars[0]
        base = dataclasses.replace(
            base,
            change_lanes=(
                ChangeLaneSpec(
                    ego.name,
                    min(5.0, ego.turning_pos - ego.init_pos),
                    -1 if ego.init_lane_id == -2 else -2,
                ),
            ),
        )
        assert validate_params(base, geo) == []
        rng = random.Random(90125)
        start = time.perf_counter()
        exercised = 0
        for trial in range(1000):
            dirty = _corrupt(base, rng)
            violations = validate_params(dirty, geo)
            if not violations:
                continue
            exercised += 1
            repaired = repair_params(dirty, violations, seed=trial)
            assert validate_params(repaired, geo) == [], f"trial {trial}"
            changed = _diff_paths(dirty, repaired)
            assert changed <= {v.path for v in violations}, f"trial {trial}"
        elapsed = time.perf_counter() - start
        assert exercised >= 900
        assert elapsed < 10.0


def test_criterion_7_document_suite():
    with criterion(7, "document pairs for all 4-case and 10-case classes: "
                      "validation-clean, parse-back, byte-stable"):
        for n, entries in ((3, [0, 1, 2]), (4, [0, 1, 2])):
            classes = enumerate_classes(spec_of(n, entries), "pattern")
            options = GeometryOptions()
            for cls in classes:
                first = build_class(cls, options, seed=21)
                again = build_class(cls, options, seed=21)
                assert first.xodr.content == again.xodr.content
                assert first.xosc.content == again.xosc.content
                assert first.xodr.findings == ()
                assert validate_network(first.xodr.content) == []
                summary = read_scenario_summary(first.xosc)
                assert len(summary["entities"]) == len(entries)
                for car in first.params.cars:
                    assert summary["speeds"][car.name] == car.init_speed
                    assert summary["turn_triggers"][car.name] == (
                        car.turning_pos - car.init_pos
                    )
                for car, move, exit_idx in zip(
                    first.params.cars, cls.representative.moves, cls.representative.exits
                ):
                    route = summary["routes"][car.name]
                    assert route["start_road"] == first.geometry.legs[move.entry].road_id
                    assert route["end_road"] == first.geometry.legs[exit_idx].road_id


def test_criterion_8_criticality_heuristic_fixture():
    with criterion(8, "crossing fixture 40 m/60 m at 10/10 m/s: |dt| <= 0.1 s, clean"):
        geo = build_geometry(default_roads(4, road_len=50.0))
        scenario = LogicalScenario(4, (SymbolicMove(0, 0, 2), SymbolicMove(1, 1, 2)))
        base = concretize(scenario, geo, seed=3)
        cars = tuple(
            dataclasses.replace(car, init_pos=pos, init_speed=10.0,
                                turning_pos=max(pos, car.turning_pos))
            for car, pos in zip(base.cars, (25.0, 5.0))
        )
        params = dataclasses.replace(base, cars=cars)
        assert validate_params(params, geo) == []
        result = heuristic_criticality(params, conflict_matrix(scenario, 4), geo)
        speeds = [c.init_speed for c in result.params.cars]
        t0, t1 = 40.0 / speeds[0], 60.0 / speeds[1]
        assert abs(t0 - t1) <= CO_ARRIVAL_TOLERANCE
        assert validate_params(result.params, geo) == []


def test_criterion_9_mutation_targeting(no_network):
    with criterion(9, "mock overlays for all 11 cases only touch "
                      "angle / init_speed / change_lane"):
        gateway = build_mock_gateway()
        for case in fixture_cases():
            outcome = parse_description(case["description"], gateway)
            classes = enumerate_classes(outcome.spec, "pattern")
            geometry = GeometryOptions(lanes=(2, 2)).build(outcome.spec.num_entries)
            params = concretize(classes[0].representative, geometry, seed=13)
            result = mutate_llm(params, outcome.factors, gateway, seed=13)
            assert result.changed_fields, case["case"]
            for path in result.changed_fields:
                if path.startswith("change_lanes"):
                    family = "change_lane"
                elif path.endswith(".angle"):
                    family = "angle"
                elif path.endswith(".init_speed"):
                    family = "init_speed"
                else:
                    family = path
                assert family in ("angle", "init_speed", "change_lane"), (
                    case["case"], path,
                )
            assert validate_params(result.params) == []


def test_criterion_10_end_to_end_determinism(no_network, tmp_path, capsys):
    with criterion(10, "CLI manifest replay reproduces byte-identical artifacts, offline"):
        first = tmp_path / "first"
        code = cli_main([
            "build", "--description", "Ten cars arriving at a T intersection.",
            "--mock-llm", "--class", "2", "--seed", "17",
            "--mutate", "llm", "--targets", "init_speed",
            "--out", str(first),
        ])
        assert code == 0
        replay = tmp_path / "replay"
        code = cli_main(["build", "--manifest", str(first / "manifest.json"),
                         "--out", str(replay)])
        assert code == 0
        for name in ("junction.xodr", "scenario.xosc", "params.json", "manifest.json"):
            assert (first / name).read_bytes() == (replay / name).read_bytes(), name
        capsys.readouterr()
