"""OpenSCENARIO 1.1 subset emitter.

One ScenarioObject per car with a catalog bounding box; Init teleports each
car to (init_road_id, init_lane_id, init_pos) and applies its absolute speed;
one routed turn event per car anchored at turning_pos and ending final_pos
past the junction on the exit road, pinned through the junction connecting
road; one lane-change event per change-lane record, triggered by travelled
distance.  Deterministic for identical inputs.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from .documents import AUTHOR, DOCUMENT_DATE, ScenarioDocument, fnum, parse_xml, serialize
from .errors import ContractError
from .junction import IntersectionGeometry
from .params import (
    VEHICLE_CATALOG,
    ParamBounds,
    DEFAULT_BOUNDS,
    CarSpec,
    ParameterSet,
    validate_params,
)

STOP_AFTER_SECONDS = 60.0


def _lane_position(parent: ET.Element, road_id: int, lane_id: int, s: float) -> None:
    pos = ET.SubElement(parent, "Position")
    ET.SubElement(
        pos, "LanePosition", roadId=str(road_id), laneId=str(lane_id),
        offset="0", s=fnum(s),
    )


def _vehicle(parent: ET.Element, car: CarSpec) -> None:
    profile = VEHICLE_CATALOG[car.type]
    vehicle = ET.SubElement(
        parent, "Vehicle", name=car.type, vehicleCategory=profile.category
    )
    box = ET.SubElement(vehicle, "BoundingBox")
    ET.SubElement(box, "Center", x=fnum(profile.length / 2 - 1.0), y="0", z=fnum(profile.height / 2))
    ET.SubElement(
        box, "Dimensions", width=fnum(profile.width), length=fnum(profile.length),
        height=fnum(profile.height),
    )
    ET.SubElement(
        vehicle, "Performance", maxSpeed=fnum(69.0), maxAcceleration=fnum(5.0),
        maxDeceleration=fnum(10.0),
    )
    axles = ET.SubElement(vehicle, "Axles")
    ET.SubElement(
        axles, "FrontAxle", maxSteering=fnum(0.5), wheelDiameter=fnum(0.6),
        trackWidth=fnum(profile.width * 0.9), positionX=fnum(profile.length * 0.6),
        positionZ=fnum(0.3),
    )
    ET.SubElement(
        axles, "RearAxle", maxSteering="0", wheelDiameter=fnum(0.6),
        trackWidth=fnum(profile.width * 0.9), positionX="0", positionZ=fnum(0.3),
    )
    ET.SubElement(vehicle, "Properties")


def _traveled_distance_trigger(parent: ET.Element, name: str, entity: str, distance: float) -> None:
    trigger = ET.SubElement(parent, "StartTrigger")
    group = ET.SubElement(trigger, "ConditionGroup")
    cond = ET.SubElement(group, "Condition", name=name, delay="0", conditionEdge="rising")
    by_entity = ET.SubElement(cond, "ByEntityCondition")
    entities = ET.SubElement(by_entity, "TriggeringEntities", triggeringEntitiesRule="any")
    ET.SubElement(entities, "EntityRef", entityRef=entity)
    entity_cond = ET.SubElement(by_entity, "EntityCondition")
    ET.SubElement(entity_cond, "TraveledDistanceCondition", value=fnum(distance))


def emit_openscenario(
    params: ParameterSet,
    geometry: IntersectionGeometry,
    xodr_filename: str = "junction.xodr",
    bounds: ParamBounds = DEFAULT_BOUNDS,
) -> ScenarioDocument:
    """Parameter tables -> .xosc text; refuses parameter sets that do not
    validate clean (repair first)."""
    violations = validate_params(params, geometry, bounds)
    if violations:
        raise ContractError(
            "cannot emit a scenario from dirty parameters: "
            + "; ".join(str(v) for v in violations[:5])
        )

    root = ET.Element("OpenSCENARIO")
    ET.SubElement(
        root, "FileHeader", revMajor="1", revMinor="1", date=DOCUMENT_DATE,
        description="uncontrolled intersection scenario", author=AUTHOR,
    )
    ET.SubElement(root, "ParameterDeclarations")
    ET.SubElement(root, "CatalogLocations")
    network = ET.SubElement(root, "RoadNetwork")
    ET.SubElement(network, "LogicFile", filepath=xodr_filename)

    entities = ET.SubElement(root, "Entities")
    for car in params.cars:
        obj = ET.SubElement(entities, "ScenarioObject", name=car.name)
        _vehicle(obj, car)

    storyboard = ET.SubElement(root, "Storyboard")
    init_actions = ET.SubElement(ET.SubElement(storyboard, "Init"), "Actions")
    for car in params.cars:
        private = ET.SubElement(init_actions, "Private", entityRef=car.name)
        teleport = ET.SubElement(
            ET.SubElement(private, "PrivateAction"), "TeleportAction"
        )
        _lane_position(teleport, car.init_road_id, car.init_lane_id, car.init_pos)
        speed = ET.SubElement(
            ET.SubElement(ET.SubElement(private, "PrivateAction"), "LongitudinalAction"),
            "SpeedAction",
        )
        ET.SubElement(
            speed, "SpeedActionDynamics", dynamicsShape="step", value="0",
            dynamicsDimension="time",
        )
        target = ET.SubElement(speed, "SpeedActionTarget")
        ET.SubElement(target, "AbsoluteTargetSpeed", value=fnum(car.init_speed))

    story = ET.SubElement(root.find("Storyboard"), "Story", name="story")
    act = ET.SubElement(story, "Act", name="act")

    for car in params.cars:
        group = ET.SubElement(
            act, "ManeuverGroup", maximumExecutionCount="1", name=f"{car.name}_group"
        )
        actors = ET.SubElement(group, "Actors", selectTriggeringEntities="false")
        ET.SubElement(actors, "EntityRef", entityRef=car.name)
        maneuver = ET.SubElement(group, "Maneuver", name=f"{car.name}_maneuver")

        event = ET.SubElement(maneuver, "Event", name=f"{car.name}_turn", priority="overwrite")
        action = ET.SubElement(event, "Action", name=f"{car.name}_route")
        routing = ET.SubElement(
            ET.SubElement(action, "PrivateAction"), "RoutingAction"
        )
        assign = ET.SubElement(routing, "AssignRouteAction")
        route = ET.SubElement(assign, "Route", name=f"{car.name}_path", closed="false")
        connection = geometry.connection_for(
            car.init_road_id, car.init_lane_id, car.final_road_id
        )
        exit_leg = geometry.leg_by_road(car.final_road_id)
        waypoints = [
            (car.init_road_id, car.init_lane_id, car.turning_pos),
            (connection.id, -1, connection.curve.length / 2),
            (car.final_road_id, car.final_lane_id, exit_leg.length - car.final_pos),
        ]
        for road_id, lane_id, s in waypoints:
            wp = ET.SubElement(route, "Waypoint", routeStrategy="shortest")
            _lane_position(wp, road_id, lane_id, s)
        _traveled_distance_trigger(
            event, f"{car.name}_at_turn", car.name, car.turning_pos - car.init_pos
        )

        for cl in params.change_lanes:
            if cl.car_name != car.name:
                continue
            event = ET.SubElement(
                maneuver, "Event", name=f"{car.name}_lane_change", priority="parallel"
            )
            action = ET.SubElement(event, "Action", name=f"{car.name}_lane_change_action")
            lateral = ET.SubElement(
                ET.SubElement(action, "PrivateAction"), "LateralAction"
            )
            change = ET.SubElement(lateral, "LaneChangeAction")
            ET.SubElement(
                change, "LaneChangeActionDynamics", dynamicsShape="sinusoidal",
                value="2", dynamicsDimension="time",
            )
            target = ET.SubElement(change, "LaneChangeTarget")
            ET.SubElement(target, "AbsoluteTargetLane", value=str(cl.lane_id_after_change))
            _traveled_distance_trigger(
                event, f"{car.name}_at_lane_change", car.name, cl.change_lane_pos
            )

    act_trigger = ET.SubElement(act, "StartTrigger")
    group = ET.SubElement(act_trigger, "ConditionGroup")
    cond = ET.SubElement(group, "Condition", name="act_start", delay="0", conditionEdge="none")
    by_value = ET.SubElement(cond, "ByValueCondition")
    ET.SubElement(by_value, "SimulationTimeCondition", value="0", rule="greaterThan")

    stop = ET.SubElement(root.find("Storyboard"), "StopTrigger")
    group = ET.SubElement(stop, "ConditionGroup")
    cond = ET.SubElement(group, "Condition", name="end", delay="0", conditionEdge="rising")
    by_value = ET.SubElement(cond, "ByValueCondition")
    ET.SubElement(
        by_value, "SimulationTimeCondition", value=fnum(STOP_AFTER_SECONDS), rule="greaterThan"
    )

    return ScenarioDocument("openscenario", serialize(root))


def read_scenario_summary(content: str | ScenarioDocument) -> dict:
    """Parse-back helper: entity names, initial speeds, route endpoints and
    trigger distances, straight from the XML."""
    if isinstance(content, ScenarioDocument):
        content = content.content
    root = parse_xml(content)
    entities = [obj.get("name") for obj in root.findall("Entities/ScenarioObject")]
    speeds: dict[str, float] = {}
    for private in root.findall("Storyboard/Init/Actions/Private"):
        speed = private.find(
            "PrivateAction/LongitudinalAction/SpeedAction/SpeedActionTarget/AbsoluteTargetSpeed"
        )
        if speed is not None:
            speeds[private.get("entityRef")] = float(speed.get("value"))
    routes: dict[str, dict] = {}
    triggers: dict[str, float] = {}
    lane_changes: list[dict] = []
    for group in root.findall("Storyboard/Story/Act/ManeuverGroup"):
        entity = group.find("Actors/EntityRef").get("entityRef")
        for event in group.findall("Maneuver/Event"):
            distance = event.find(
                "StartTrigger/ConditionGroup/Condition/ByEntityCondition/"
                "EntityCondition/TraveledDistanceCondition"
            )
            route = event.find("Action/PrivateAction/RoutingAction/AssignRouteAction/Route")
            if route is not None:
                points = route.findall("Waypoint/Position/LanePosition")
                routes[entity] = {
                    "start_road": int(points[0].get("roadId")),
                    "end_road": int(points[-1].get("roadId")),
                    "via_roads": [int(p.get("roadId")) for p in points[1:-1]],
                }
                triggers[entity] = float(distance.get("value"))
            change = event.find(
                "Action/PrivateAction/LateralAction/LaneChangeAction"
            )
            if change is not None:
                lane_changes.append(
                    {
                        "entity": entity,
                        "target_lane": int(
                            change.find("LaneChangeTarget/AbsoluteTargetLane").get("value")
                        ),
                        "trigger_distance": float(distance.get("value")),
                    }
                )
    return {
        "entities": entities,
        "speeds": speeds,
        "routes": routes,
        "turn_triggers": triggers,
        "lane_changes": lane_changes,
    }
