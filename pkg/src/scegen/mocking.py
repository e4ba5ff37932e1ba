"""Deterministic offline stand-in for the LLM provider.

Extraction answers come from the packaged fixture file, keyed by the hash of
the exact request the parser would send.  Mutation overlays are synthesized
from the request payload itself: speeds up, one skewed approach angle, one
abrupt lane change where the lane layout allows it, always restricted to the
requested target families.
"""

from __future__ import annotations

import json
from importlib import resources

from .gateway import CompletionRequest, Gateway, MockProvider, ProviderConfig
from .mutation import OVERLAY_SCHEMA_ID
from .nlparse import build_extract_request


def load_fixture() -> dict:
    path = resources.files("scegen") / "fixtures" / "mock_llm.json"
    return json.loads(path.read_text(encoding="utf-8"))


def fixture_cases() -> list[dict]:
    return load_fixture()["extract"]


def synthesize_overlay(req: CompletionRequest) -> str:
    """Rule-based overlay: deterministic, target-restricted, intensity-scaled."""
    payload = json.loads(req.user)
    params = payload["params"]
    targets = payload.get("targets", [])
    intensity = float(payload.get("intensity", 0.5))
    overlay: dict = {
        "rationale": "tightened arrival windows: higher approach speeds, a "
        "skewed approach and an abrupt late lane change where possible",
    }
    if "init_speed" in targets:
        bumped = []
        for car in params["cars"][:2]:
            bumped.append(
                {"name": car["name"], "init_speed": round(car["init_speed"] * (1.4 + intensity), 3)}
            )
        overlay["cars"] = bumped
    if "angle" in targets and len(params["roads"]) >= 2:
        road = params["roads"][1]
        overlay["roads"] = [
            {"road_id": road["road_id"], "angle": round(road["angle"] * (1.0 - 0.45 * intensity), 6)}
        ]
    if "change_lane" in targets:
        for car in params["cars"]:
            road = next(r for r in params["roads"] if r["road_id"] == car["init_road_id"])
            if road["right_num"] >= 2:
                lanes = [-k for k in range(1, road["right_num"] + 1)]
                target_lane = next(l for l in lanes if l != car["init_lane_id"])
                overlay["change_lanes"] = [
                    {
                        "car_name": car["name"],
                        "change_lane_pos": round(
                            0.8 * (car["turning_pos"] - car["init_pos"]), 3
                        ),
                        "lane_id_after_change": target_lane,
                    }
                ]
                break
    return json.dumps(overlay)


def build_mock_provider() -> MockProvider:
    provider = MockProvider(synthesizers={OVERLAY_SCHEMA_ID: synthesize_overlay})
    for case in fixture_cases():
        provider.add_response(
            build_extract_request(case["description"]), json.dumps(case["response"])
        )
    return provider


def build_mock_gateway(max_retries: int = 3) -> Gateway:
    return Gateway(
        build_mock_provider(),
        ProviderConfig(base_url="mock://local", model_name="mock", max_retries=max_retries),
    )
