"""N-leg junction geometry built from per-road parameter records.

Legs radiate from a central junction circle.  Each leg's reference line runs
from its outer end toward the junction (s grows toward the circle), so the
right lanes (negative ids) carry inbound traffic and the left lanes (positive
ids) carry outbound traffic.  Every inbound driving lane is connected to every
other leg through a dedicated connecting road whose curve is a straight line
for opposing legs and a single circular arc otherwise; the arc exactly meets
both legs' headings because its endpoints sit on the junction circle with
radial tangents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, GeometryError

DEFAULT_JUNCTION_RADIUS = 15.0
DEFAULT_MIN_SEPARATION_DEG = 20.0
LANE_WIDTH = 3.5
COLLINEAR_TOLERANCE_DEG = 1.0

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class RoadSpec:
    """One leg's parameters; angle is relative to the previous road (the
    first road's angle is measured from the +x reference direction)."""

    road_id: int
    road_len: float
    angle: float
    left_num: int
    right_num: int

    def validate(self) -> None:
        if self.road_len <= 0:
            raise DomainError(f"road {self.road_id}: road_len must be > 0")
        if self.left_num < 0 or self.right_num < 0:
            raise DomainError(f"road {self.road_id}: lane counts must be >= 0")
        if self.left_num + self.right_num < 1:
            raise DomainError(f"road {self.road_id}: needs at least one lane")


@dataclass(frozen=True)
class Curve:
    """A planView primitive: straight line (curvature 0) or circular arc."""

    x: float
    y: float
    hdg: float
    length: float
    curvature: float = 0.0

    @property
    def is_line(self) -> bool:
        return self.curvature == 0.0

    def point_at(self, s: float) -> tuple[float, float, float]:
        """(x, y, heading) at arc length s from the start."""
        if self.is_line:
            return (
                self.x + s * math.cos(self.hdg),
                self.y + s * math.sin(self.hdg),
                self.hdg,
            )
        k = self.curvature
        h = self.hdg + k * s
        return (
            self.x + (math.sin(h) - math.sin(self.hdg)) / k,
            self.y - (math.cos(h) - math.cos(self.hdg)) / k,
            h,
        )

    def end_point(self) -> tuple[float, float, float]:
        return self.point_at(self.length)


@dataclass(frozen=True)
class LegGeometry:
    """One placed leg: heading is its angular position around the junction."""

    road_id: int
    heading: float
    length: float
    left_num: int
    right_num: int

    def inbound_lanes(self) -> tuple[int, ...]:
        return tuple(-k for k in range(1, self.right_num + 1))

    def outbound_lanes(self) -> tuple[int, ...]:
        return tuple(k for k in range(1, self.left_num + 1))

    def boundary_point(self, radius: float) -> tuple[float, float]:
        return radius * math.cos(self.heading), radius * math.sin(self.heading)

    def outer_point(self, radius: float) -> tuple[float, float]:
        d = radius + self.length
        return d * math.cos(self.heading), d * math.sin(self.heading)

    def reference_line(self, radius: float) -> Curve:
        """Reference line pointing inward: starts at the outer end, ends on
        the junction circle."""
        x, y = self.outer_point(radius)
        return Curve(x, y, _norm_angle(self.heading + math.pi), self.length)


@dataclass(frozen=True)
class ConnectingRoad:
    id: int
    incoming_road_id: int
    incoming_lane_id: int
    outgoing_road_id: int
    outgoing_lane_id: int
    curve: Curve


@dataclass(frozen=True)
class IntersectionGeometry:
    legs: tuple[LegGeometry, ...]
    junction_id: int
    connections: tuple[ConnectingRoad, ...]
    radius: float

    def leg_by_road(self, road_id: int) -> LegGeometry:
        for leg in self.legs:
            if leg.road_id == road_id:
                return leg
        raise DomainError(f"no leg with road id {road_id}")

    def leg_by_entry(self, entry: int) -> LegGeometry:
        if not 0 <= entry < len(self.legs):
            raise DomainError(f"entry {entry} outside [0, {len(self.legs)})")
        return self.legs[entry]

    def connection_for(
        self, incoming_road_id: int, incoming_lane_id: int, outgoing_road_id: int
    ) -> ConnectingRoad:
        for conn in self.connections:
            if (
                conn.incoming_road_id == incoming_road_id
                and conn.incoming_lane_id == incoming_lane_id
                and conn.outgoing_road_id == outgoing_road_id
            ):
                return conn
        raise DomainError(
            f"no connection from road {incoming_road_id} lane {incoming_lane_id} "
            f"to road {outgoing_road_id}"
        )

    def road_specs(self) -> tuple[RoadSpec, ...]:
        """Recover the per-road records (angles as deltas) from placed legs."""
        specs = []
        prev = 0.0
        for i, leg in enumerate(self.legs):
            angle = leg.heading if i == 0 else _norm_angle(leg.heading - prev)
            specs.append(RoadSpec(leg.road_id, leg.length, angle, leg.left_num, leg.right_num))
            prev = leg.heading
        return tuple(specs)

    def to_json(self) -> dict:
        return {
            "legs": [
                {
                    "id": leg.road_id,
                    "heading": leg.heading,
                    "length": leg.length,
                    "left": leg.left_num,
                    "right": leg.right_num,
                }
                for leg in self.legs
            ],
            "radius": self.radius,
        }


def _norm_angle(a: float) -> float:
    a = math.fmod(a, TWO_PI)
    return a + TWO_PI if a < 0 else a


def _signed_angle(a: float) -> float:
    """Normalize to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


def angular_gap(a: float, b: float) -> float:
    """Smallest absolute angle between two headings."""
    return abs(_signed_angle(a - b))


def fit_connection_curve(theta_in: float, theta_out: float, radius: float) -> Curve:
    """Curve across the junction from the boundary point at theta_in to the
    one at theta_out, entering radially inward and leaving radially outward.

    Opposing legs (within COLLINEAR_TOLERANCE_DEG of ideal) get a straight
    segment; every other pair gets the unique circular arc that matches both
    endpoint headings.
    """
    ax, ay = radius * math.cos(theta_in), radius * math.sin(theta_in)
    bx, by = radius * math.cos(theta_out), radius * math.sin(theta_out)
    delta = _norm_angle(theta_out - theta_in)
    turn = _signed_angle(delta - math.pi)
    if abs(turn) <= math.radians(COLLINEAR_TOLERANCE_DEG):
        hdg = math.atan2(by - ay, bx - ax)
        return Curve(ax, ay, _norm_angle(hdg), math.hypot(bx - ax, by - ay))
    arc_radius = abs(radius * math.tan(delta / 2))
    curvature = (1.0 if turn > 0 else -1.0) / arc_radius
    return Curve(
        ax,
        ay,
        _norm_angle(theta_in + math.pi),
        abs(turn) * arc_radius,
        curvature,
    )


def build_geometry(
    roads: list[RoadSpec],
    junction_radius: float = DEFAULT_JUNCTION_RADIUS,
    min_separation_deg: float = DEFAULT_MIN_SEPARATION_DEG,
) -> IntersectionGeometry:
    """Place legs at cumulative headings and wire every inbound driving lane
    to each of the other legs."""
    if len(roads) < 3:
        raise DomainError(f"a junction needs at least 3 roads, got {len(roads)}")
    ids = [r.road_id for r in roads]
    if len(set(ids)) != len(ids):
        raise DomainError(f"road ids must be unique, got {ids}")
    for road in roads:
        road.validate()

    headings = []
    acc = 0.0
    for road in roads:
        acc += road.angle
        headings.append(_norm_angle(acc))

    min_sep = math.radians(min_separation_deg)
    for i in range(len(roads)):
        for j in range(i + 1, len(roads)):
            if angular_gap(headings[i], headings[j]) < min_sep:
                raise GeometryError(
                    f"legs {roads[i].road_id} and {roads[j].road_id} are only "
                    f"{math.degrees(angular_gap(headings[i], headings[j])):.1f} deg apart "
                    f"(minimum {min_separation_deg} deg)"
                )

    legs = tuple(
        LegGeometry(r.road_id, h, r.road_len, r.left_num, r.right_num)
        for r, h in zip(roads, headings)
    )

    junction_id = max(ids) + 1
    connections = []
    next_id = junction_id + 1
    for leg in legs:
        for lane in leg.inbound_lanes():
            for other in legs:
                if other.road_id == leg.road_id or other.left_num < 1:
                    continue
                out_lane = min(-lane, other.left_num)
                curve = fit_connection_curve(leg.heading, other.heading, junction_radius)
                connections.append(
                    ConnectingRoad(next_id, leg.road_id, lane, other.road_id, out_lane, curve)
                )
                next_id += 1

    return IntersectionGeometry(legs, junction_id, tuple(connections), junction_radius)


def default_roads(
    num_entries: int,
    road_len: float = 100.0,
    lanes: tuple[int, int] = (1, 1),
    angles: list[float] | None = None,
    lane_pairs: list[tuple[int, int]] | None = None,
) -> list[RoadSpec]:
    """Equally spaced legs unless explicit angles/lane pairs are supplied."""
    if angles is None:
        angles = [0.0] + [TWO_PI / num_entries] * (num_entries - 1)
    if len(angles) != num_entries:
        raise DomainError(f"expected {num_entries} angles, got {len(angles)}")
    if lane_pairs is None:
        lane_pairs = [lanes] * num_entries
    if len(lane_pairs) != num_entries:
        raise DomainError(f"expected {num_entries} lane pairs, got {len(lane_pairs)}")
    return [
        RoadSpec(i + 1, road_len, angles[i], lane_pairs[i][0], lane_pairs[i][1])
        for i in range(num_entries)
    ]
