"""HTTP service: the pipeline as session state under /v1.

Stage machine per session: parsed -> enumerated -> concretized -> mutated
(selection happens inside the select call, which also concretizes).  Sessions
survive restarts through a one-JSON-file-per-session store; downloads are
regenerated deterministically from the stored inputs, so a reloaded session
serves byte-identical files.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import pydantic
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .errors import (
    CapacityError,
    ContractError,
    DomainError,
    GatewayError,
    GeometryError,
    ParseFailure,
    ScegenError,
)
from .gateway import Gateway
from .mutation import MUTATION_TARGETS, DangerFactors, heuristic_criticality, mutate_llm
from .nlparse import parse_description
from .opendrive import emit_opendrive
from .openscenario import emit_openscenario
from .params import concretize, params_from_json, params_to_json
from .pipeline import (
    XODR_FILENAME,
    GeometryOptions,
    class_payload,
    enumerate_classes,
    make_gateway,
)
from .traffic import DEFAULT_RAW_CAP, FunctionalSpec, conflict_matrix

STAGES = ("parsed", "enumerated", "selected", "concretized", "mutated")


@dataclass
class ServiceSettings:
    store_dir: Path = Path("./scegen-sessions")
    mock_llm: bool = True
    llm_base_url: str | None = None
    llm_model: str | None = None
    raw_cap: int = DEFAULT_RAW_CAP
    ui_dir: Path | None = None


class SessionStore:
    """One JSON document per session on disk, with per-session locks."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.json"

    def load(self, session_id: str) -> dict | None:
        path = self.path(session_id)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def save(self, state: dict) -> None:
        # write-then-rename so concurrent readers never see a torn file
        target = self.path(state["id"])
        scratch = target.with_suffix(".tmp")
        scratch.write_text(json.dumps(state, indent=2, sort_keys=True), encoding="utf-8")
        scratch.replace(target)


class CreateSession(pydantic.BaseModel):
    description: str


class EnumerateBody(pydantic.BaseModel):
    reduction: str = "pattern"


class SelectBody(pydantic.BaseModel):
    class_index: int
    seed: int = 0
    angles: list[float] | None = None  # radians, cumulative deltas per leg
    lanes: list[list[int]] | None = None  # [left, right] per leg
    road_len: float = 100.0
    radius: float = 15.0


class FactorsBody(pydantic.BaseModel):
    description: str | None = None
    targets: list[str] | None = None
    intensity: float = 0.5


class MutateBody(pydantic.BaseModel):
    mode: str = "heuristic"
    factors: FactorsBody | None = None
    seed: int = 0


class ParamsBody(pydantic.BaseModel):
    params: dict


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details


def _stage_at_least(state: dict, stage: str) -> bool:
    return STAGES.index(state["stage"]) >= STAGES.index(stage)


def _spec_of(state: dict) -> FunctionalSpec:
    return FunctionalSpec.from_entries(state["spec"]["num_entries"], state["spec"]["entries"])


def _options_of(state: dict) -> GeometryOptions:
    sel = state["selection"]
    return GeometryOptions(
        road_len=sel["road_len"],
        radius=sel["radius"],
        lanes=(1, 1),
        angles=tuple(sel["angles"]) if sel.get("angles") else None,
        lane_pairs=tuple(tuple(p) for p in sel["lane_pairs"]) if sel.get("lane_pairs") else None,
    )


def create_app(settings: ServiceSettings | None = None) -> FastAPI:
    settings = settings or ServiceSettings()
    store = SessionStore(settings.store_dir)
    app = FastAPI(title="scegen service", version="1.0")

    def gateway() -> Gateway:
        return make_gateway(settings.mock_llm, settings.llm_base_url, settings.llm_model)

    @app.exception_handler(ApiError)
    async def api_error_handler(_: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.exception_handler(RequestValidationError)
    async def body_error_handler(_: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "bad-request", "message": "malformed request body",
                     "details": exc.errors()},
        )

    @app.exception_handler(ScegenError)
    async def scegen_error_handler(_: Request, exc: ScegenError):
        status = 422
        if isinstance(exc, CapacityError):
            status = 409
        elif isinstance(exc, (ContractError,)):
            status = 409
        elif isinstance(exc, GatewayError):
            status = 502
        elif isinstance(exc, DomainError):
            status = 400
        return JSONResponse(
            status_code=status,
            content={"code": type(exc).__name__, "message": str(exc), "details": None},
        )

    def load_or_404(session_id: str) -> dict:
        state = store.load(session_id)
        if state is None:
            raise ApiError(404, "unknown-session", f"no session {session_id}")
        return state

    @app.post("/v1/sessions")
    def create_session(body: CreateSession):
        if not body.description.strip():
            raise ApiError(400, "empty-description", "description must be non-empty")
        try:
            outcome = parse_description(body.description, gateway())
        except ParseFailure as exc:
            raise ApiError(422, "parse-failure", str(exc), {"payload": exc.payload})
        state = {
            "id": uuid.uuid4().hex,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "stage": "parsed",
            "description": body.description,
            "spec": {
                "num_cars": len(outcome.spec.cars),
                "num_entries": outcome.spec.num_entries,
                "entries": list(outcome.spec.entries),
            },
            "factors": {
                "description": outcome.factors.description,
                "targets": list(outcome.factors.targets),
                "intensity": outcome.factors.intensity,
            },
            "unsupported": list(outcome.unsupported_actions),
            "reduction": None,
            "selection": None,
            "params": None,
            "mutation": None,
        }
        store.save(state)
        return {
            "session_id": state["id"],
            "spec": state["spec"],
            "factors": state["factors"],
            "unsupported": state["unsupported"],
        }

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        state = load_or_404(session_id)
        return {
            "session_id": state["id"],
            "stage": state["stage"],
            "spec": state["spec"],
            "factors": state["factors"],
            "unsupported": state["unsupported"],
            "reduction": state["reduction"],
            "selection": state["selection"],
            "mutation": (
                {
                    "changed_fields": state["mutation"]["changed_fields"],
                    "rationale": state["mutation"]["rationale"],
                }
                if state["mutation"]
                else None
            ),
        }

    def classes_for(state: dict):
        return enumerate_classes(_spec_of(state), state["reduction"], settings.raw_cap)

    @app.post("/v1/sessions/{session_id}/enumerate")
    def enumerate_session(session_id: str, body: EnumerateBody):
        if body.reduction not in ("pattern", "orbit"):
            raise ApiError(400, "bad-reduction", f"unknown reduction {body.reduction!r}")
        with store.lock(session_id):
            state = load_or_404(session_id)
            if state["stage"] not in ("parsed", "enumerated"):
                raise ApiError(
                    409, "stage-guard",
                    f"cannot re-enumerate at stage {state['stage']}",
                )
            state["reduction"] = body.reduction
            classes = classes_for(state)
            state["stage"] = "enumerated"
            store.save(state)
        return {
            "reduction": body.reduction,
            "raw_total": sum(c.members for c in classes),
            "classes": [class_payload(cls, i) for i, cls in enumerate(classes)],
        }

    @app.post("/v1/sessions/{session_id}/select")
    def select_class(session_id: str, body: SelectBody):
        with store.lock(session_id):
            state = load_or_404(session_id)
            if state["stage"] not in ("enumerated", "concretized"):
                raise ApiError(
                    409, "stage-guard",
                    "selection needs an enumerated session that is not yet mutated",
                )
            classes = classes_for(state)
            if not 0 <= body.class_index < len(classes):
                raise ApiError(
                    404, "bad-class-index",
                    f"class index {body.class_index} outside [0, {len(classes)})",
                )
            n = state["spec"]["num_entries"]
            if body.angles is not None and len(body.angles) != n:
                raise ApiError(422, "bad-angles", f"expected {n} angles")
            lane_pairs = None
            if body.lanes is not None:
                if len(body.lanes) != n or any(len(p) != 2 for p in body.lanes):
                    raise ApiError(422, "bad-lanes", f"expected {n} [left, right] pairs")
                lane_pairs = [tuple(p) for p in body.lanes]
            state["selection"] = {
                "class_index": body.class_index,
                "seed": body.seed,
                "angles": list(body.angles) if body.angles is not None else None,
                "lane_pairs": [list(p) for p in lane_pairs] if lane_pairs else None,
                "road_len": body.road_len,
                "radius": body.radius,
            }
            try:
                geometry = _options_of(state).build(n)
            except GeometryError as exc:
                state["selection"] = None
                raise ApiError(422, "bad-angles", str(exc))
            scenario = classes[body.class_index].representative
            params = concretize(scenario, geometry, body.seed)
            state["params"] = params_to_json(params)
            state["stage"] = "concretized"
            state["mutation"] = None
            store.save(state)
        return {"params": state["params"], "geometry": geometry.to_json()}

    @app.post("/v1/sessions/{session_id}/mutate")
    def mutate_session(session_id: str, body: MutateBody):
        with store.lock(session_id):
            state = load_or_404(session_id)
            if not _stage_at_least(state, "concretized"):
                raise ApiError(409, "stage-guard", "select a class before mutating")
            params = params_from_json(state["params"])
            options = _options_of(state)
            geometry = options.build(state["spec"]["num_entries"])
            factors_body = body.factors
            factors = DangerFactors(
                description=(
                    factors_body.description
                    if factors_body and factors_body.description
                    else state["factors"]["description"]
                ),
                targets=tuple(
                    factors_body.targets
                    if factors_body and factors_body.targets
                    else state["factors"]["targets"]
                ) or MUTATION_TARGETS,
                intensity=factors_body.intensity if factors_body else state["factors"]["intensity"],
            )
            if body.mode == "heuristic":
                classes = classes_for(state)
                scenario = classes[state["selection"]["class_index"]].representative
                report = conflict_matrix(scenario, scenario.num_entries)
                result = heuristic_criticality(params, report, geometry)
            elif body.mode == "llm":
                result = mutate_llm(params, factors, gateway(), body.seed)
            else:
                raise ApiError(400, "bad-mode", f"unknown mutation mode {body.mode!r}")
            state["mutation"] = {
                "params": params_to_json(result.params),
                "changed_fields": list(result.changed_fields),
                "rationale": result.rationale,
                "seed": body.seed,
                "mode": body.mode,
            }
            state["stage"] = "mutated"
            store.save(state)
        return {
            "params": state["mutation"]["params"],
            "changed_fields": state["mutation"]["changed_fields"],
            "rationale": state["mutation"]["rationale"],
        }

    @app.post("/v1/sessions/{session_id}/params")
    def edit_params(session_id: str, body: ParamsBody):
        """Validate an edited parameter set; store it only when clean."""
        from .params import validate_params

        with store.lock(session_id):
            state = load_or_404(session_id)
            if not _stage_at_least(state, "concretized"):
                raise ApiError(409, "stage-guard", "select a class before editing")
            try:
                edited = params_from_json(body.params)
            except (KeyError, TypeError) as exc:
                raise ApiError(422, "bad-params", f"malformed parameter tables: {exc}")
            violations = validate_params(edited)
            if violations:
                return {
                    "accepted": False,
                    "violations": [
                        {
                            "path": v.path,
                            "rule": v.rule,
                            "observed": v.observed,
                            "bounds": list(v.bounds)
                            if isinstance(v.bounds, (list, tuple))
                            else v.bounds,
                        }
                        for v in violations
                    ],
                }
            if state["mutation"] is not None:
                state["mutation"]["params"] = params_to_json(edited)
            else:
                state["params"] = params_to_json(edited)
            store.save(state)
            return {"accepted": True, "violations": []}

    @app.get("/v1/sessions/{session_id}/files/{kind}")
    def download(session_id: str, kind: str, variant: str = "latest"):
        state = load_or_404(session_id)
        if kind not in ("xosc", "xodr", "params"):
            raise ApiError(404, "bad-kind", f"unknown file kind {kind!r}")
        if not _stage_at_least(state, "concretized"):
            raise ApiError(409, "stage-guard", "select a class before downloading files")
        if variant not in ("latest", "original", "mutated"):
            raise ApiError(400, "bad-variant", f"unknown variant {variant!r}")
        if variant == "mutated" and not state["mutation"]:
            raise ApiError(409, "stage-guard", "session has no mutation yet")
        use_mutated = state["mutation"] is not None and variant in ("latest", "mutated")
        params = params_from_json(
            state["mutation"]["params"] if use_mutated else state["params"]
        )
        options = _options_of(state)
        from .junction import build_geometry

        geometry = build_geometry(list(params.roads), junction_radius=options.radius)
        seed = state["selection"]["seed"]
        suffix = "mutated" if use_mutated else "original"
        name = f"scegen_{state['id'][:8]}_seed{seed}_{suffix}"
        if kind == "params":
            return JSONResponse(
                content=params_to_json(params),
                headers={"Content-Disposition": f'attachment; filename="{name}.json"'},
            )
        if kind == "xodr":
            content = emit_opendrive(geometry).content
            return Response(
                content,
                media_type="application/xml",
                headers={"Content-Disposition": f'attachment; filename="{name}.xodr"'},
            )
        content = emit_openscenario(params, geometry, XODR_FILENAME).content
        return Response(
            content,
            media_type="application/xml",
            headers={"Content-Disposition": f'attachment; filename="{name}.xosc"'},
        )

    if settings.ui_dir and Path(settings.ui_dir).exists():
        app.mount("/", StaticFiles(directory=settings.ui_dir, html=True), name="ui")

    return app
