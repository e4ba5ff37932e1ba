"""OpenDRIVE 1.6 subset emitter and structural validator.

Emitted elements: header, one road per leg (line planView, single lane
section with center lane 0, positive left / negative right lanes), one road
per junction connection (line or arc planView) and one junction element with
connection/laneLink records.  Emission is deterministic: identical geometry
yields byte-identical documents.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

from .documents import AUTHOR, DOCUMENT_DATE, ScenarioDocument, fnum, parse_xml, serialize
from .errors import Violation
from .junction import LANE_WIDTH, IntersectionGeometry, LegGeometry


def _lane(parent: ET.Element, lane_id: int, lane_type: str,
          predecessor: int | None = None, successor: int | None = None) -> None:
    lane = ET.SubElement(parent, "lane", id=str(lane_id), type=lane_type, level="false")
    if predecessor is not None or successor is not None:
        link = ET.SubElement(lane, "link")
        if predecessor is not None:
            ET.SubElement(link, "predecessor", id=str(predecessor))
        if successor is not None:
            ET.SubElement(link, "successor", id=str(successor))
    if lane_id != 0:
        ET.SubElement(
            lane, "width", a=fnum(LANE_WIDTH), b="0", c="0", d="0", sOffset="0"
        )
    else:
        ET.SubElement(
            lane, "roadMark", sOffset="0", type="broken", material="standard",
            color="standard", width=fnum(0.13),
        )


def _leg_road(leg: LegGeometry, junction_id: int, radius: float) -> ET.Element:
    road = ET.Element(
        "road", name=f"leg{leg.road_id}", length=fnum(leg.length),
        id=str(leg.road_id), junction="-1",
    )
    link = ET.SubElement(road, "link")
    ET.SubElement(link, "successor", elementType="junction", elementId=str(junction_id))
    plan = ET.SubElement(road, "planView")
    ref = leg.reference_line(radius)
    geom = ET.SubElement(
        plan, "geometry", s="0", x=fnum(ref.x), y=fnum(ref.y),
        hdg=fnum(ref.hdg), length=fnum(ref.length),
    )
    ET.SubElement(geom, "line")
    lanes = ET.SubElement(road, "lanes")
    section = ET.SubElement(lanes, "laneSection", s="0")
    if leg.left_num:
        left = ET.SubElement(section, "left")
        for lane_id in range(leg.left_num, 0, -1):
            _lane(left, lane_id, "driving")
    center = ET.SubElement(section, "center")
    _lane(center, 0, "none")
    if leg.right_num:
        right = ET.SubElement(section, "right")
        for lane_id in range(-1, -leg.right_num - 1, -1):
            _lane(right, lane_id, "driving")
    return road


def emit_opendrive(geometry: IntersectionGeometry) -> ScenarioDocument:
    """Geometry -> .xodr text, self-validated."""
    root = ET.Element("OpenDRIVE")
    ET.SubElement(
        root, "header", revMajor="1", revMinor="6", name="scegen junction",
        version="1.00", date=DOCUMENT_DATE, vendor=AUTHOR,
    )
    for leg in geometry.legs:
        root.append(_leg_road(leg, geometry.junction_id, geometry.radius))

    for conn in geometry.connections:
        road = ET.Element(
            "road", name=f"connect{conn.id}", length=fnum(conn.curve.length),
            id=str(conn.id), junction=str(geometry.junction_id),
        )
        link = ET.SubElement(road, "link")
        ET.SubElement(
            link, "predecessor", elementType="road",
            elementId=str(conn.incoming_road_id), contactPoint="end",
        )
        ET.SubElement(
            link, "successor", elementType="road",
            elementId=str(conn.outgoing_road_id), contactPoint="end",
        )
        plan = ET.SubElement(road, "planView")
        geom = ET.SubElement(
            plan, "geometry", s="0", x=fnum(conn.curve.x), y=fnum(conn.curve.y),
            hdg=fnum(conn.curve.hdg), length=fnum(conn.curve.length),
        )
        if conn.curve.is_line:
            ET.SubElement(geom, "line")
        else:
            ET.SubElement(geom, "arc", curvature=fnum(conn.curve.curvature))
        lanes = ET.SubElement(road, "lanes")
        section = ET.SubElement(lanes, "laneSection", s="0")
        center = ET.SubElement(section, "center")
        _lane(center, 0, "none")
        right = ET.SubElement(section, "right")
        _lane(right, -1, "driving",
              predecessor=conn.incoming_lane_id, successor=conn.outgoing_lane_id)
        root.append(road)

    junction = ET.SubElement(
        root, "junction", id=str(geometry.junction_id),
        name=f"junction{geometry.junction_id}",
    )
    for index, conn in enumerate(geometry.connections):
        record = ET.SubElement(
            junction, "connection", id=str(index),
            incomingRoad=str(conn.incoming_road_id),
            connectingRoad=str(conn.id), contactPoint="start",
        )
        ET.SubElement(record, "laneLink", attrib={"from": str(conn.incoming_lane_id), "to": "-1"})

    content = serialize(root)
    return ScenarioDocument("opendrive", content, tuple(validate_network(content)))


def _lane_ids(road: ET.Element) -> list[int]:
    return [
        int(lane.get("id", "0"))
        for lane in road.iter("lane")
    ]


def validate_network(content: str | bytes | ScenarioDocument) -> list[Violation]:
    """Structural findings over an OpenDRIVE document.

    Checks duplicate ids, dangling road/junction/lane references and
    non-contiguous lane numbering; raises DocumentParseError on malformed XML.
    """
    if isinstance(content, ScenarioDocument):
        content = content.content
    root = parse_xml(content)
    findings: list[Violation] = []

    roads = root.findall("road")
    road_ids: dict[int, ET.Element] = {}
    for i, road in enumerate(roads):
        rid = int(road.get("id", "-1"))
        if rid in road_ids:
            findings.append(Violation(f"road[{i}]", "duplicate-id", rid, "unique road ids"))
        road_ids[rid] = road

    junction_ids: set[int] = set()
    for i, junction in enumerate(root.findall("junction")):
        jid = int(junction.get("id", "-1"))
        if jid in junction_ids:
            findings.append(
                Violation(f"junction[{i}]", "duplicate-id", jid, "unique junction ids")
            )
        junction_ids.add(jid)

    lanes_by_road: dict[int, list[int]] = {
        rid: _lane_ids(road) for rid, road in road_ids.items()
    }

    for rid, road in road_ids.items():
        path = f"road[id={rid}]"
        link = road.find("link")
        if link is not None:
            for tag in ("predecessor", "successor"):
                el = link.find(tag)
                if el is None:
                    continue
                target = int(el.get("elementId", "-1"))
                kind = el.get("elementType", "road")
                known = junction_ids if kind == "junction" else road_ids.keys()
                if target not in known:
                    findings.append(
                        Violation(f"{path}/link/{tag}", "dangling-reference", target,
                                  f"existing {kind} id")
                    )
        ids = lanes_by_road[rid]
        left = sorted(i for i in ids if i > 0)
        right = sorted((-i for i in ids if i < 0))
        if 0 not in ids:
            findings.append(Violation(f"{path}/lanes", "missing-center-lane", ids, "lane id 0"))
        if left != list(range(1, len(left) + 1)):
            findings.append(
                Violation(f"{path}/lanes", "non-contiguous-lanes", sorted(ids),
                          "left lanes 1..k")
            )
        if right != list(range(1, len(right) + 1)):
            findings.append(
                Violation(f"{path}/lanes", "non-contiguous-lanes", sorted(ids),
                          "right lanes -1..-k")
            )

    for junction in root.findall("junction"):
        jid = junction.get("id")
        for conn in junction.findall("connection"):
            cpath = f"junction[id={jid}]/connection[id={conn.get('id')}]"
            incoming = int(conn.get("incomingRoad", "-1"))
            connecting = int(conn.get("connectingRoad", "-1"))
            if incoming not in road_ids:
                findings.append(
                    Violation(cpath, "dangling-reference", incoming, "existing road id")
                )
            if connecting not in road_ids:
                findings.append(
                    Violation(cpath, "dangling-reference", connecting, "existing road id")
                )
            for ll in conn.findall("laneLink"):
                frm, to = int(ll.get("from", "0")), int(ll.get("to", "0"))
                if incoming in road_ids and frm not in lanes_by_road[incoming]:
                    findings.append(
                        Violation(f"{cpath}/laneLink", "unknown-lane", frm,
                                  f"lane on road {incoming}")
                    )
                if connecting in road_ids and to not in lanes_by_road[connecting]:
                    findings.append(
                        Violation(f"{cpath}/laneLink", "unknown-lane", to,
                                  f"lane on road {connecting}")
                    )

    return findings


def read_network_legs(content: str | ScenarioDocument) -> list[dict]:
    """Parse-back helper: leg roads with heading (angular position), length
    and lane counts, in document order."""
    if isinstance(content, ScenarioDocument):
        content = content.content
    root = parse_xml(content)
    legs = []
    for road in root.findall("road"):
        if road.get("junction") != "-1":
            continue
        geom = road.find("planView/geometry")
        hdg = float(geom.get("hdg"))
        ids = _lane_ids(road)
        legs.append(
            {
                "id": int(road.get("id")),
                "heading": math.fmod(hdg + math.pi, 2 * math.pi),
                "length": float(geom.get("length")),
                "left": len([i for i in ids if i > 0]),
                "right": len([i for i in ids if i < 0]),
            }
        )
    return legs
