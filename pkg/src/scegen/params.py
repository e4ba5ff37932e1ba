"""Concrete scenario parameters: sampling, validation and repair.

The parameter tables mirror the generator's config records one to one:
roads (road_id, road_len, angle, left_num, right_num), cars (name, type,
init_pos, init_speed, init_road_id, init_lane_id, turning_pos, final_pos,
final_road_id, final_lane_id) and change_lanes (car_name, change_lane_pos,
lane_id_after_change).

Position frames: init_pos and turning_pos are s-offsets on the entry road,
which points toward the junction, so s grows along the direction of travel.
final_pos is measured from the junction boundary outward along the exit road
(the distance travelled past the junction when the turn completes).

Repair resamples every violated field uniformly from its permitted domain,
conditioned on the rest of the parameter set, processing roads before cars
before change-lane records so that one pass always converges.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, replace

from .errors import ContractError, DomainError, RepairError, Violation
from .junction import IntersectionGeometry, RoadSpec, angular_gap
from .traffic import LogicalScenario


@dataclass(frozen=True)
class VehicleProfile:
    category: str
    length: float
    width: float
    height: float


VEHICLE_CATALOG: dict[str, VehicleProfile] = {
    "car": VehicleProfile("car", 4.5, 1.8, 1.5),
    "truck": VehicleProfile("truck", 8.0, 2.5, 3.2),
    "motorcycle": VehicleProfile("motorcycle", 2.2, 0.8, 1.4),
}


@dataclass(frozen=True)
class ParamBounds:
    """Permitted ranges; the sampling band is the narrower window new speeds
    are drawn from, while repairs use the full [v_min, v_max]."""

    v_min: float = 0.0
    v_max: float = 40.0
    speed_band: tuple[float, float] = (5.0, 15.0)
    road_len_max: float = 500.0
    lane_max: int = 4
    min_separation_deg: float = 20.0


DEFAULT_BOUNDS = ParamBounds()


@dataclass(frozen=True)
class CarSpec:
    name: str
    type: str
    init_pos: float
    init_speed: float
    init_road_id: int
    init_lane_id: int
    turning_pos: float
    final_pos: float
    final_road_id: int
    final_lane_id: int


@dataclass(frozen=True)
class ChangeLaneSpec:
    car_name: str
    change_lane_pos: float
    lane_id_after_change: int


@dataclass(frozen=True)
class ParameterSet:
    roads: tuple[RoadSpec, ...]
    cars: tuple[CarSpec, ...]
    change_lanes: tuple[ChangeLaneSpec, ...]
    seed: int

    def road_by_id(self, road_id: int) -> RoadSpec | None:
        for road in self.roads:
            if road.road_id == road_id:
                return road
        return None

    def car_by_name(self, name: str) -> CarSpec | None:
        for car in self.cars:
            if car.name == name:
                return car
        return None


def params_to_json(params: ParameterSet) -> dict:
    return {
        "roads": [
            {
                "road_id": r.road_id,
                "road_len": r.road_len,
                "angle": r.angle,
                "left_num": r.left_num,
                "right_num": r.right_num,
            }
            for r in params.roads
        ],
        "cars": [
            {
                "name": c.name,
                "type": c.type,
                "init_pos": c.init_pos,
                "init_speed": c.init_speed,
                "init_road_id": c.init_road_id,
                "init_lane_id": c.init_lane_id,
                "turning_pos": c.turning_pos,
                "final_pos": c.final_pos,
                "final_road_id": c.final_road_id,
                "final_lane_id": c.final_lane_id,
            }
            for c in params.cars
        ],
        "change_lanes": [
            {
                "car_name": cl.car_name,
                "change_lane_pos": cl.change_lane_pos,
                "lane_id_after_change": cl.lane_id_after_change,
            }
            for cl in params.change_lanes
        ],
        "seed": params.seed,
    }


def params_from_json(data: dict) -> ParameterSet:
    return ParameterSet(
        roads=tuple(RoadSpec(**r) for r in data["roads"]),
        cars=tuple(CarSpec(**c) for c in data["cars"]),
        change_lanes=tuple(ChangeLaneSpec(**cl) for cl in data.get("change_lanes", [])),
        seed=data.get("seed", 0),
    )


def concretize(
    scenario: LogicalScenario,
    geometry: IntersectionGeometry,
    seed: int,
    bounds: ParamBounds = DEFAULT_BOUNDS,
) -> ParameterSet:
    """Sample one full parameter set that realizes the logical scenario.

    Routing is forced: each car starts on its entry leg and ends on its exit
    leg; the lane, speed and position draws are deterministic in the seed.
    """
    if scenario.num_entries != len(geometry.legs):
        raise ContractError(
            f"scenario over {scenario.num_entries} entries does not fit a "
            f"{len(geometry.legs)}-leg junction"
        )
    rng = random.Random(seed)
    cars = []
    for move, exit_idx in zip(scenario.moves, scenario.exits):
        leg_in = geometry.leg_by_entry(move.entry)
        leg_out = geometry.leg_by_entry(exit_idx)
        if leg_in.right_num < 1:
            raise ContractError(f"entry leg {leg_in.road_id} has no inbound lane")
        if leg_out.left_num < 1:
            raise ContractError(f"exit leg {leg_out.road_id} has no outbound lane")
        init_lane = -rng.randint(1, leg_in.right_num)
        final_lane = rng.randint(1, leg_out.left_num)
        speed = rng.uniform(*bounds.speed_band)
        init_pos = rng.uniform(0.0, 0.5 * leg_in.length)
        turning_pos = rng.uniform(max(init_pos, 0.6 * leg_in.length), leg_in.length)
        final_pos = rng.uniform(0.0, min(30.0, leg_out.length))
        vtype = rng.choice(sorted(VEHICLE_CATALOG))
        cars.append(
            CarSpec(
                name=f"car{move.car_id}",
                type=vtype,
                init_pos=init_pos,
                init_speed=speed,
                init_road_id=leg_in.road_id,
                init_lane_id=init_lane,
                turning_pos=turning_pos,
                final_pos=final_pos,
                final_road_id=leg_out.road_id,
                final_lane_id=final_lane,
            )
        )
    return ParameterSet(geometry.road_specs(), tuple(cars), (), seed)


def _headings(roads: tuple[RoadSpec, ...]) -> list[float]:
    acc, out = 0.0, []
    for road in roads:
        acc += road.angle
        out.append(math.fmod(acc, 2 * math.pi))
    return out


def _inbound(road: RoadSpec, lane_max: int | None = None) -> tuple[int, ...]:
    count = road.right_num if lane_max is None else min(road.right_num, lane_max)
    return tuple(-k for k in range(1, count + 1))


def _outbound(road: RoadSpec, lane_max: int | None = None) -> tuple[int, ...]:
    count = road.left_num if lane_max is None else min(road.left_num, lane_max)
    return tuple(k for k in range(1, count + 1))


def validate_params(
    params: ParameterSet,
    geometry: IntersectionGeometry | None = None,
    bounds: ParamBounds = DEFAULT_BOUNDS,
) -> list[Violation]:
    """Every broken invariant across the three tables; empty means clean."""
    found: list[Violation] = []

    road_ids = [r.road_id for r in params.roads]
    seen: set[int] = set()
    for i, road in enumerate(params.roads):
        if road.road_id in seen:
            found.append(
                Violation(f"roads[{i}].road_id", "road-id-unique", road.road_id, "unique ids")
            )
        seen.add(road.road_id)
        if not 0 < road.road_len <= bounds.road_len_max:
            found.append(
                Violation(
                    f"roads[{i}].road_len", "road-len-range", road.road_len,
                    (0.0, bounds.road_len_max),
                )
            )
        for field in ("left_num", "right_num"):
            value = getattr(road, field)
            if not 0 <= value <= bounds.lane_max:
                found.append(
                    Violation(
                        f"roads[{i}].{field}", "lane-count-range", value,
                        (0, bounds.lane_max),
                    )
                )
        if (
            0 <= road.left_num <= bounds.lane_max
            and 0 <= road.right_num <= bounds.lane_max
            and road.left_num + road.right_num < 1
        ):
            found.append(
                Violation(
                    f"roads[{i}].right_num", "lane-count-min",
                    (road.left_num, road.right_num), (1, bounds.lane_max),
                )
            )

    headings = _headings(params.roads)
    min_sep = math.radians(bounds.min_separation_deg)
    for i in range(len(headings)):
        for j in range(i + 1, len(headings)):
            if angular_gap(headings[i], headings[j]) < min_sep:
                found.append(
                    Violation(
                        f"roads[{j}].angle", "angle-separation",
                        math.degrees(angular_gap(headings[i], headings[j])),
                        f">= {bounds.min_separation_deg} deg between legs "
                        f"{params.roads[i].road_id} and {params.roads[j].road_id}",
                    )
                )

    if geometry is not None:
        geo_ids = [leg.road_id for leg in geometry.legs]
        if geo_ids != road_ids:
            found.append(
                Violation("roads", "geometry-mismatch", road_ids, geo_ids)
            )

    names: set[str] = set()
    flagged = {v.path for v in found}
    for k, car in enumerate(params.cars):
        path = f"cars[{k}]"
        if car.name in names:
            found.append(Violation(f"{path}.name", "name-unique", car.name, "unique names"))
        names.add(car.name)
        if car.type not in VEHICLE_CATALOG:
            found.append(
                Violation(f"{path}.type", "type-catalog", car.type,
                          tuple(sorted(VEHICLE_CATALOG)))
            )
        if not bounds.v_min <= car.init_speed <= bounds.v_max:
            found.append(
                Violation(f"{path}.init_speed", "speed-range", car.init_speed,
                          (bounds.v_min, bounds.v_max))
            )
        road_in = params.road_by_id(car.init_road_id)
        road_out = params.road_by_id(car.final_road_id)
        if road_in is None:
            found.append(
                Violation(f"{path}.init_road_id", "road-ref", car.init_road_id,
                          tuple(road_ids))
            )
        if road_out is None:
            found.append(
                Violation(f"{path}.final_road_id", "road-ref", car.final_road_id,
                          tuple(road_ids))
            )

        init_ok = turning_ok = False
        if road_in is not None:
            # positions are bounded by the max legal length too, so a position
            # that cannot survive any road_len repair is flagged alongside it
            length = min(road_in.road_len, bounds.road_len_max)
            init_ok = 0 <= car.init_pos <= length
            turning_ok = 0 <= car.turning_pos <= length
            if not init_ok:
                found.append(
                    Violation(f"{path}.init_pos", "pos-range", car.init_pos, (0.0, length))
                )
            if not turning_ok:
                found.append(
                    Violation(f"{path}.turning_pos", "pos-range", car.turning_pos,
                              (0.0, length))
                )
            if init_ok and turning_ok and car.turning_pos < car.init_pos:
                turning_ok = False
                found.append(
                    Violation(f"{path}.turning_pos", "pos-order", car.turning_pos,
                              (car.init_pos, length))
                )
            if car.init_lane_id not in _inbound(road_in, bounds.lane_max):
                found.append(
                    Violation(f"{path}.init_lane_id", "lane-exists", car.init_lane_id,
                              _inbound(road_in, bounds.lane_max))
                )
        if road_out is not None:
            out_length = min(road_out.road_len, bounds.road_len_max)
            if not 0 <= car.final_pos <= out_length:
                found.append(
                    Violation(f"{path}.final_pos", "pos-range", car.final_pos,
                              (0.0, out_length))
                )
            if car.final_lane_id not in _outbound(road_out, bounds.lane_max):
                found.append(
                    Violation(f"{path}.final_lane_id", "lane-exists", car.final_lane_id,
                              _outbound(road_out, bounds.lane_max))
                )
        if not (init_ok and turning_ok):
            flagged.add(f"{path}.init_pos")
            flagged.add(f"{path}.turning_pos")

    for m, cl in enumerate(params.change_lanes):
        path = f"change_lanes[{m}]"
        car = params.car_by_name(cl.car_name)
        if car is None:
            found.append(
                Violation(f"{path}.car_name", "car-ref", cl.car_name,
                          tuple(c.name for c in params.cars))
            )
            continue
        k = params.cars.index(car)
        road_in = params.road_by_id(car.init_road_id)
        same_side = _inbound(road_in, bounds.lane_max) if road_in is not None else ()
        lane_ok = (
            cl.lane_id_after_change in same_side
            and cl.lane_id_after_change != car.init_lane_id
        )
        if not lane_ok:
            found.append(
                Violation(
                    f"{path}.lane_id_after_change", "lane-exists",
                    cl.lane_id_after_change,
                    tuple(l for l in same_side if l != car.init_lane_id),
                )
            )
        car_pos_flagged = (
            f"cars[{k}].init_pos" in flagged or f"cars[{k}].turning_pos" in flagged
        )
        if car_pos_flagged:
            # window undefined until the car is repaired; resample afterwards
            found.append(
                Violation(f"{path}.change_lane_pos", "pos-range", cl.change_lane_pos,
                          "recomputed after car repair")
            )
        else:
            window = min(car.turning_pos, road_in.road_len) - car.init_pos
            if not 0 <= cl.change_lane_pos <= window:
                found.append(
                    Violation(f"{path}.change_lane_pos", "pos-range",
                              cl.change_lane_pos, (0.0, window))
                )

    return found


_UNREPAIRABLE = {"road-id-unique", "name-unique", "road-ref", "car-ref", "geometry-mismatch"}

_FIELD_ORDER = [
    ("roads", "road_len"),
    ("roads", "left_num"),
    ("roads", "right_num"),
    ("roads", "angle"),
    ("cars", "type"),
    ("cars", "init_speed"),
    ("cars", "init_lane_id"),
    ("cars", "final_lane_id"),
    ("cars", "init_pos"),
    ("cars", "turning_pos"),
    ("cars", "final_pos"),
    ("change_lanes", "lane_id_after_change"),
    ("change_lanes", "change_lane_pos"),
]

_PATH_RE = re.compile(r"^(roads|cars|change_lanes)\[(\d+)\]\.(\w+)$")


def _parse_path(path: str) -> tuple[str, int, str]:
    match = _PATH_RE.match(path)
    if match is None:
        raise RepairError(f"cannot repair structural violation at {path}")
    return match.group(1), int(match.group(2)), match.group(3)


def repair_params(
    params: ParameterSet,
    violations: list[Violation],
    seed: int,
    bounds: ParamBounds = DEFAULT_BOUNDS,
) -> ParameterSet:
    """Resample only the violated fields; the result validates clean.

    Fields are processed roads -> cars -> change-lane records so every
    resampled value is drawn from a domain conditioned on already-repaired
    upstream fields.  Structural violations (dangling references, duplicate
    ids) cannot be fixed by resampling and raise RepairError naming the field.
    """
    if not violations:
        return params

    for v in violations:
        if v.rule in _UNREPAIRABLE:
            raise RepairError(f"unrepairable violation at {v.path}: {v.rule}")

    targets: dict[str, Violation] = {}
    for v in violations:
        targets.setdefault(v.path, v)

    parsed = {path: _parse_path(path) for path in targets}
    order = {pair: i for i, pair in enumerate(_FIELD_ORDER)}
    queue = sorted(
        targets,
        key=lambda p: (order.get((parsed[p][0], parsed[p][2]), 99), parsed[p][1]),
    )

    rng = random.Random(seed)
    roads = list(params.roads)
    cars = list(params.cars)
    change_lanes = list(params.change_lanes)
    angle_indices = sorted(
        parsed[p][1] for p in targets if parsed[p][0] == "roads" and parsed[p][2] == "angle"
    )
    angles_done = False

    def resample_angles() -> None:
        # violated angles are coupled through the shared separation constraint,
        # so they are drawn jointly until every pairwise gap clears
        min_sep = math.radians(bounds.min_separation_deg)
        for _ in range(2000):
            trial = list(roads)
            for idx in angle_indices:
                trial[idx] = replace(trial[idx], angle=rng.uniform(0.0, 2 * math.pi))
            headings = _headings(tuple(trial))
            if all(
                angular_gap(headings[i], headings[j]) >= min_sep
                for i in range(len(headings))
                for j in range(i + 1, len(headings))
            ):
                for idx in angle_indices:
                    roads[idx] = trial[idx]
                return
        raise RepairError(
            "no separating angles found for "
            + ", ".join(f"roads[{i}].angle" for i in angle_indices)
        )

    def flagged(path: str) -> bool:
        return path in targets

    def cl_ok_max(car_name: str) -> float:
        values = [
            cl.change_lane_pos
            for m, cl in enumerate(change_lanes)
            if cl.car_name == car_name
            and not flagged(f"change_lanes[{m}].change_lane_pos")
        ]
        return max(values, default=0.0)

    def uniform(lo: float, hi: float, path: str) -> float:
        if hi < lo:
            raise RepairError(f"empty repair domain for {path}: [{lo}, {hi}]")
        return rng.uniform(lo, hi)

    def choose(domain: list, path: str):
        if not domain:
            raise RepairError(f"empty repair domain for {path}")
        return rng.choice(domain)

    for path in queue:
        table, idx, field = parsed[path]
        rule = targets[path].rule
        if table == "roads":
            road = roads[idx]
            if field == "road_len":
                floor = 20.0
                for k, car in enumerate(cars):
                    if car.init_road_id == road.road_id:
                        for f, val in (("init_pos", car.init_pos), ("turning_pos", car.turning_pos)):
                            if not flagged(f"cars[{k}].{f}"):
                                floor = max(floor, val)
                    if car.final_road_id == road.road_id and not flagged(f"cars[{k}].final_pos"):
                        floor = max(floor, car.final_pos)
                roads[idx] = replace(road, road_len=uniform(floor, bounds.road_len_max, path))
            elif field in ("left_num", "right_num"):
                # floor: keep every referencing car a lane to be resampled into,
                # even when its own lane field is flagged for repair
                needed = 0
                for k, car in enumerate(cars):
                    if field == "right_num" and car.init_road_id == road.road_id:
                        needed = max(needed, 1)
                        if not flagged(f"cars[{k}].init_lane_id"):
                            needed = max(needed, -car.init_lane_id)
                    if field == "left_num" and car.final_road_id == road.road_id:
                        needed = max(needed, 1)
                        if not flagged(f"cars[{k}].final_lane_id"):
                            needed = max(needed, car.final_lane_id)
                if field == "right_num":
                    for m, cl in enumerate(change_lanes):
                        car = params.car_by_name(cl.car_name)
                        if car is None or car.init_road_id != road.road_id:
                            continue
                        # a lane change needs two distinct inbound lanes
                        needed = max(needed, 2)
                        if not flagged(f"change_lanes[{m}].lane_id_after_change"):
                            needed = max(needed, -cl.lane_id_after_change)
                if rule == "lane-count-min":
                    needed = max(needed, 1)
                if needed > bounds.lane_max:
                    raise RepairError(f"empty repair domain for {path}")
                roads[idx] = replace(road, **{field: rng.randint(needed, bounds.lane_max)})
            elif field == "angle":
                if not angles_done:
                    resample_angles()
                    angles_done = True
            else:
                raise RepairError(f"cannot repair field {path}")
        elif table == "cars":
            car = cars[idx]
            road_in = next((r for r in roads if r.road_id == car.init_road_id), None)
            road_out = next((r for r in roads if r.road_id == car.final_road_id), None)
            if field == "type":
                cars[idx] = replace(car, type=choose(sorted(VEHICLE_CATALOG), path))
            elif field == "init_speed":
                cars[idx] = replace(car, init_speed=uniform(bounds.v_min, bounds.v_max, path))
            elif field == "init_lane_id":
                reserved = {
                    cl.lane_id_after_change
                    for m, cl in enumerate(change_lanes)
                    if cl.car_name == car.name
                    and not flagged(f"change_lanes[{m}].lane_id_after_change")
                }
                domain = [l for l in _inbound(road_in) if l not in reserved]
                cars[idx] = replace(car, init_lane_id=choose(domain, path))
            elif field == "final_lane_id":
                cars[idx] = replace(car, final_lane_id=choose(list(_outbound(road_out)), path))
            elif field == "init_pos":
                margin = cl_ok_max(car.name)
                length = road_in.road_len
                ceiling = length - margin
                if not flagged(f"cars[{idx}].turning_pos"):
                    ceiling = min(ceiling, car.turning_pos - margin)
                cars[idx] = replace(car, init_pos=uniform(0.0, min(ceiling, length), path))
            elif field == "turning_pos":
                floor = car.init_pos + cl_ok_max(car.name)
                cars[idx] = replace(car, turning_pos=uniform(floor, road_in.road_len, path))
            elif field == "final_pos":
                cars[idx] = replace(car, final_pos=uniform(0.0, road_out.road_len, path))
            else:
                raise RepairError(f"cannot repair field {path}")
        else:
            cl = change_lanes[idx]
            car = next((c for c in cars if c.name == cl.car_name), None)
            if car is None:
                raise RepairError(f"unrepairable violation at {path}: dangling car")
            road_in = next((r for r in roads if r.road_id == car.init_road_id), None)
            if field == "lane_id_after_change":
                domain = [l for l in _inbound(road_in) if l != car.init_lane_id]
                change_lanes[idx] = replace(cl, lane_id_after_change=choose(domain, path))
            elif field == "change_lane_pos":
                window = min(car.turning_pos, road_in.road_len) - car.init_pos
                change_lanes[idx] = replace(cl, change_lane_pos=uniform(0.0, window, path))
            else:
                raise RepairError(f"cannot repair field {path}")

    return ParameterSet(tuple(roads), tuple(cars), tuple(change_lanes), params.seed)


def require_clean(params: ParameterSet, geometry: IntersectionGeometry | None = None,
                  bounds: ParamBounds = DEFAULT_BOUNDS) -> None:
    violations = validate_params(params, geometry, bounds)
    if violations:
        raise ContractError(
            "parameter set has unrepaired violations: "
            + "; ".join(str(v) for v in violations[:5])
        )


def table_field_names() -> set[str]:
    """All config-record field names, for coverage checks."""
    return {
        "road_id", "road_len", "angle", "left_num", "right_num",
        "name", "type", "init_pos", "init_speed", "init_road_id", "init_lane_id",
        "turning_pos", "final_pos", "final_road_id", "final_lane_id",
        "car_name", "change_lane_pos", "lane_id_after_change",
    }
