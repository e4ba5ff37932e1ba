"""Stage 3 criticality raising: LLM parameter overlay or co-arrival heuristic.

The LLM path serializes the parameter tables plus a danger description into
a prompt and expects a *partial overlay* back (never whole files), restricted
to the declared target families; whatever comes back is validated and
repaired before it is accepted.  The heuristic path needs no model at all:
it finds the highest-priority conflicting pair, locates their conflict point
on the junction connecting curves, and retimes speeds so both cars reach it
together.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import pydantic

from .errors import ContractError, DomainError
from .gateway import CompletionRequest, Gateway, load_prompt, register_schema
from .junction import Curve, IntersectionGeometry
from .params import (
    DEFAULT_BOUNDS,
    ChangeLaneSpec,
    ParamBounds,
    ParameterSet,
    params_to_json,
    repair_params,
    validate_params,
)
from .traffic import CROSSING, MERGING, OPPOSING, ConflictReport

MUTATION_TARGETS = ("angle", "init_speed", "change_lane")
OVERLAY_SCHEMA_ID = "parameter-overlay-v1"
MUTATE_PROMPT = "parameter_mutate_v1.txt"
CO_ARRIVAL_TOLERANCE = 0.1  # seconds

_KIND_PRIORITY = {CROSSING: 0, MERGING: 1, OPPOSING: 2}


@dataclass(frozen=True)
class DangerFactors:
    description: str
    targets: tuple[str, ...] = MUTATION_TARGETS
    intensity: float = 0.5

    def __post_init__(self):
        if not self.targets:
            raise DomainError("danger factors need at least one target")
        unknown = set(self.targets) - set(MUTATION_TARGETS)
        if unknown:
            raise DomainError(f"unknown mutation targets: {sorted(unknown)}")
        if not 0.0 <= self.intensity <= 1.0:
            raise DomainError(f"intensity {self.intensity} outside [0, 1]")


@dataclass(frozen=True)
class MutationResult:
    params: ParameterSet
    changed_fields: tuple[str, ...]
    rationale: str


class RoadOverlay(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")
    road_id: int
    angle: float


class CarOverlay(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")
    name: str
    init_speed: float


class ChangeLaneOverlay(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")
    car_name: str
    change_lane_pos: float
    lane_id_after_change: int


class ParameterOverlay(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")
    roads: list[RoadOverlay] = pydantic.Field(default_factory=list)
    cars: list[CarOverlay] = pydantic.Field(default_factory=list)
    change_lanes: list[ChangeLaneOverlay] = pydantic.Field(default_factory=list)
    rationale: str = ""


register_schema(OVERLAY_SCHEMA_ID, ParameterOverlay)


def changed_paths(before: ParameterSet, after: ParameterSet) -> tuple[str, ...]:
    """Field locators whose values differ between two parameter sets."""
    out: list[str] = []
    da, db = params_to_json(before), params_to_json(after)
    for table in ("roads", "cars", "change_lanes"):
        for idx, row in enumerate(db[table]):
            if idx >= len(da[table]):
                out.extend(f"{table}[{idx}].{field}" for field in row)
                continue
            for field, value in row.items():
                if da[table][idx][field] != value:
                    out.append(f"{table}[{idx}].{field}")
    return tuple(out)


def build_mutation_request(params: ParameterSet, factors: DangerFactors) -> CompletionRequest:
    payload = {
        "params": params_to_json(params),
        "description": factors.description,
        "targets": list(factors.targets),
        "intensity": factors.intensity,
    }
    return CompletionRequest(
        system=load_prompt(MUTATE_PROMPT),
        user=json.dumps(payload, sort_keys=True),
        schema_id=OVERLAY_SCHEMA_ID,
    )


def apply_overlay(params: ParameterSet, overlay: ParameterOverlay) -> ParameterSet:
    """Apply a partial update; rows naming unknown roads/cars are dropped."""
    roads = list(params.roads)
    for row in overlay.roads:
        for i, road in enumerate(roads):
            if road.road_id == row.road_id:
                roads[i] = replace(road, angle=row.angle)
    cars = list(params.cars)
    for row in overlay.cars:
        for i, car in enumerate(cars):
            if car.name == row.name:
                cars[i] = replace(car, init_speed=row.init_speed)
    change_lanes = list(params.change_lanes)
    names = {c.name for c in params.cars}
    for row in overlay.change_lanes:
        if row.car_name not in names:
            continue
        record = ChangeLaneSpec(row.car_name, row.change_lane_pos, row.lane_id_after_change)
        for i, existing in enumerate(change_lanes):
            if existing.car_name == row.car_name:
                change_lanes[i] = record
                break
        else:
            change_lanes.append(record)
    return ParameterSet(tuple(roads), tuple(cars), tuple(change_lanes), params.seed)


def mutate_llm(
    params: ParameterSet,
    factors: DangerFactors,
    gateway: Gateway,
    seed: int,
    bounds: ParamBounds = DEFAULT_BOUNDS,
) -> MutationResult:
    """Overlay-based mutation through the gateway, then validate + repair."""
    dirty = validate_params(params, None, bounds)
    if dirty:
        raise ContractError(
            "mutation requires clean input parameters: " + "; ".join(str(v) for v in dirty[:3])
        )
    result = gateway.complete_structured(build_mutation_request(params, factors))
    overlay: ParameterOverlay = result.parsed
    if overlay.roads and "angle" not in factors.targets:
        raise ContractError("overlay touches road angles outside the declared targets")
    if overlay.cars and "init_speed" not in factors.targets:
        raise ContractError("overlay touches car speeds outside the declared targets")
    if overlay.change_lanes and "change_lane" not in factors.targets:
        raise ContractError("overlay touches lane changes outside the declared targets")

    mutated = apply_overlay(params, overlay)
    violations = validate_params(mutated, None, bounds)
    if violations:
        mutated = repair_params(mutated, violations, seed, bounds)
    return MutationResult(mutated, changed_paths(params, mutated), overlay.rationale)


def time_to_conflict(car, conflict_s: float) -> float:
    """Constant-speed arrival time at an s-offset in the car's travel frame."""
    if car.init_speed <= 0:
        return math.inf
    return (conflict_s - car.init_pos) / car.init_speed


def _arc_center(curve: Curve) -> tuple[float, float, float]:
    r = 1.0 / abs(curve.curvature)
    cx = curve.x - math.sin(curve.hdg) / curve.curvature
    cy = curve.y + math.cos(curve.hdg) / curve.curvature
    return cx, cy, r


def _arc_s_for_point(curve: Curve, px: float, py: float, tol: float = 1e-6) -> float | None:
    cx, cy, _ = _arc_center(curve)
    phi0 = math.atan2(curve.y - cy, curve.x - cx)
    phi = math.atan2(py - cy, px - cx)
    delta = math.remainder(phi - phi0, 2 * math.pi)
    s = delta / curve.curvature
    if -tol <= s <= curve.length + tol:
        return min(max(s, 0.0), curve.length)
    return None


def _line_s_for_point(curve: Curve, px: float, py: float, tol: float = 1e-6) -> float | None:
    s = (px - curve.x) * math.cos(curve.hdg) + (py - curve.y) * math.sin(curve.hdg)
    if -tol <= s <= curve.length + tol:
        x, y, _ = curve.point_at(min(max(s, 0.0), curve.length))
        if math.hypot(px - x, py - y) <= 1e-5:
            return min(max(s, 0.0), curve.length)
    return None


def _s_for_point(curve: Curve, px: float, py: float) -> float | None:
    if curve.is_line:
        return _line_s_for_point(curve, px, py)
    return _arc_s_for_point(curve, px, py)


def _candidate_points(a: Curve, b: Curve) -> list[tuple[float, float]]:
    """Intersection points of the two supporting primitives (line/circle)."""
    if a.is_line and b.is_line:
        ux, uy = math.cos(a.hdg), math.sin(a.hdg)
        vx, vy = math.cos(b.hdg), math.sin(b.hdg)
        denom = ux * vy - uy * vx
        if abs(denom) < 1e-12:
            return []
        dx, dy = b.x - a.x, b.y - a.y
        t = (dx * vy - dy * vx) / denom
        return [(a.x + t * ux, a.y + t * uy)]
    if a.is_line or b.is_line:
        line, arc = (a, b) if a.is_line else (b, a)
        cx, cy, r = _arc_center(arc)
        ux, uy = math.cos(line.hdg), math.sin(line.hdg)
        fx, fy = line.x - cx, line.y - cy
        beta = fx * ux + fy * uy
        gamma = fx * fx + fy * fy - r * r
        disc = beta * beta - gamma
        if disc < 0:
            return []
        root = math.sqrt(disc)
        return [
            (line.x + t * ux, line.y + t * uy) for t in (-beta - root, -beta + root)
        ]
    c1x, c1y, r1 = _arc_center(a)
    c2x, c2y, r2 = _arc_center(b)
    d = math.hypot(c2x - c1x, c2y - c1y)
    if d < 1e-9 or d > r1 + r2 + 1e-9 or d < abs(r1 - r2) - 1e-9:
        return []
    along = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    h_sq = r1 * r1 - along * along
    h = math.sqrt(max(h_sq, 0.0))
    mx = c1x + along * (c2x - c1x) / d
    my = c1y + along * (c2y - c1y) / d
    px, py = -(c2y - c1y) / d, (c2x - c1x) / d
    return [(mx + h * px, my + h * py), (mx - h * px, my - h * py)]


def curve_conflict_point(a: Curve, b: Curve) -> tuple[float, float] | None:
    """(s_a, s_b) of the first shared point along curve a, if the curves meet."""
    hits = []
    for px, py in _candidate_points(a, b):
        s_a = _s_for_point(a, px, py)
        s_b = _s_for_point(b, px, py)
        if s_a is not None and s_b is not None:
            hits.append((s_a, s_b))
    return min(hits, default=None)


def heuristic_criticality(
    params: ParameterSet,
    conflicts: ConflictReport,
    geometry: IntersectionGeometry,
    bounds: ParamBounds = DEFAULT_BOUNDS,
) -> MutationResult:
    """Retime the highest-priority conflicting pair to co-arrive.

    The later car is sped up to match the earlier arrival; if that would
    exceed v_max the earlier car is slowed instead, so the pair always meets
    its conflict point within the co-arrival tolerance.  Scenarios without
    crossing/merging/opposing pairs come back unchanged.
    """
    candidates = sorted(
        (p for p in conflicts.pairs if p.kind in _KIND_PRIORITY),
        key=lambda p: (_KIND_PRIORITY[p.kind], p.car_a, p.car_b),
    )
    if not candidates:
        return MutationResult(params, (), "no conflict pairs; parameters unchanged")
    pair = candidates[0]

    def path_of(car_id: int):
        car = params.car_by_name(f"car{car_id}")
        if car is None:
            raise ContractError(f"no parameter record for car{car_id}")
        idx = params.cars.index(car)
        connection = geometry.connection_for(
            car.init_road_id, car.init_lane_id, car.final_road_id
        )
        leg = geometry.leg_by_road(car.init_road_id)
        return idx, car, leg, connection

    idx_a, car_a, leg_a, conn_a = path_of(pair.car_a)
    idx_b, car_b, leg_b, conn_b = path_of(pair.car_b)

    if pair.kind == OPPOSING:
        meet = (conn_a.curve.length / 2, conn_b.curve.length / 2)
    else:
        meet = curve_conflict_point(conn_a.curve, conn_b.curve)
        if meet is None:
            return MutationResult(
                params, (), f"{pair.kind} pair car{pair.car_a}/car{pair.car_b} has no "
                "geometric conflict point; parameters unchanged"
            )

    dist_a = (leg_a.length - car_a.init_pos) + meet[0]
    dist_b = (leg_b.length - car_b.init_pos) + meet[1]
    t_a = time_to_conflict(car_a, car_a.init_pos + dist_a)
    t_b = time_to_conflict(car_b, car_b.init_pos + dist_b)
    if abs(t_a - t_b) <= CO_ARRIVAL_TOLERANCE:
        return MutationResult(
            params, (), f"car{pair.car_a} and car{pair.car_b} already co-arrive "
            f"(|dt|={abs(t_a - t_b):.3f}s)"
        )

    # speed up the later car toward the earlier arrival time, clamped; if the
    # clamp leaves a gap, slow the earlier car to close it exactly
    if t_a <= t_b:
        early_idx, early_car, early_d = idx_a, car_a, dist_a
        late_idx, late_car, late_d = idx_b, car_b, dist_b
        t_early = t_a
    else:
        early_idx, early_car, early_d = idx_b, car_b, dist_b
        late_idx, late_car, late_d = idx_a, car_a, dist_a
        t_early = t_b

    cars = list(params.cars)
    changed = [late_idx]
    new_late_speed = min(late_d / t_early, bounds.v_max)
    cars[late_idx] = replace(late_car, init_speed=new_late_speed)
    if abs(late_d / new_late_speed - t_early) > CO_ARRIVAL_TOLERANCE:
        new_early_speed = early_d / (late_d / new_late_speed)
        cars[early_idx] = replace(early_car, init_speed=new_early_speed)
        changed.append(early_idx)

    result = ParameterSet(params.roads, tuple(cars), params.change_lanes, params.seed)
    fields = tuple(f"cars[{i}].init_speed" for i in sorted(changed))
    return MutationResult(
        result, fields,
        f"retimed car{pair.car_a} and car{pair.car_b} to co-arrive at their "
        f"{pair.kind} point ({dist_a:.1f} m vs {dist_b:.1f} m)",
    )
