"""Command-line driver: parse, enumerate, build, serve.

Exit codes: 0 success, 1 domain error, 2 usage error (argparse default).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .diagrams import scenario_svg
from .errors import ScegenError
from .nlparse import parse_description
from .pipeline import (
    GeometryOptions,
    RunManifest,
    class_payload,
    enumerate_classes,
    make_gateway,
    parse_angles,
    parse_entries,
    resolved_manifest,
    run_manifest,
    write_build,
)
from .traffic import DEFAULT_RAW_CAP, FunctionalSpec


def _add_llm_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mock-llm", action="store_true",
                        help="answer LLM calls from the packaged offline fixtures")
    parser.add_argument("--llm-base-url", default=None)
    parser.add_argument("--llm-model", default=None)


def _gateway_from(args):
    return make_gateway(args.mock_llm, args.llm_base_url, args.llm_model)


def cmd_parse(args) -> int:
    if args.file:
        text = Path(args.file).read_text(encoding="utf-8")
    elif args.text:
        text = args.text
    else:
        print("error: provide a description or --file", file=sys.stderr)
        return 2
    outcome = parse_description(text, _gateway_from(args))
    payload = {
        "num_cars": len(outcome.spec.cars),
        "num_entries": outcome.spec.num_entries,
        "entries": list(outcome.spec.entries),
        "danger_targets": list(outcome.factors.targets),
        "unsupported": list(outcome.unsupported_actions),
    }
    print(json.dumps(payload, indent=None if args.json else 2))
    return 0


def cmd_enumerate(args) -> int:
    entries = parse_entries(args.cars)
    spec = FunctionalSpec.from_entries(args.entries, entries)
    classes = enumerate_classes(spec, args.reduction, args.cap)
    payloads = [class_payload(cls, i) for i, cls in enumerate(classes)]
    if args.svg:
        svg_dir = Path(args.svg)
        svg_dir.mkdir(parents=True, exist_ok=True)
        for i, cls in enumerate(classes):
            (svg_dir / f"class_{i:03d}.svg").write_text(
                scenario_svg(cls.representative), encoding="utf-8"
            )
    if args.json:
        print(json.dumps({"raw": sum(c.members for c in classes), "classes": payloads}))
    else:
        print(f"{len(payloads)} classes over {sum(c.members for c in classes)} raw scenarios "
              f"({args.reduction} reduction)")
        for p in payloads:
            conflicts = ", ".join(
                f"{c['car_a']}x{c['car_b']}:{c['kind']}" for c in p["conflicts"]
            ) or "none"
            print(f"  [{p['index']:3d}] {p['pattern']:<16} members={p['members']:<4} "
                  f"conflicts: {conflicts}")
    return 0


def _manifest_from_args(args) -> RunManifest:
    if args.manifest:
        data = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        return RunManifest.from_json(data)
    geometry = GeometryOptions(
        road_len=args.road_len,
        radius=args.radius,
        lanes=tuple(int(x) for x in args.lanes.split(",")),
        angles=parse_angles(args.angles) if args.angles else None,
    )
    entries = parse_entries(args.cars) if args.cars else None
    return RunManifest(
        seed=args.seed,
        class_index="all" if args.class_index == "all" else int(args.class_index),
        reduction=args.reduction,
        description=args.description,
        num_entries=args.entries,
        entries=entries,
        geometry=geometry,
        mutate=args.mutate,
        factors_description=args.factors,
        factors_targets=args.targets.split(",") if args.targets else None,
        intensity=args.intensity,
        mock_llm=args.mock_llm,
        raw_cap=args.cap,
    )


def cmd_build(args) -> int:
    manifest = _manifest_from_args(args)
    gateway = None
    if manifest.description or manifest.mutate == "llm":
        gateway = make_gateway(manifest.mock_llm, args.llm_base_url, args.llm_model)
    run = run_manifest(manifest, gateway)
    pinned = resolved_manifest(manifest, run.spec)
    out_root = Path(args.out)
    multi = manifest.class_index == "all"
    for index, output in sorted(run.outputs.items()):
        target = out_root / f"class_{index:03d}" if multi else out_root
        per_class = RunManifest.from_json(pinned.to_json())
        per_class.class_index = index
        written = write_build(target, output, per_class)
        if args.json:
            record = {
                "class_index": index,
                "files": [str(p) for p in written],
                "changed_fields": list(output.mutation.changed_fields) if output.mutation else [],
                "rationale": output.mutation.rationale if output.mutation else None,
            }
            print(json.dumps(record))
        else:
            print(f"class {index}: wrote {', '.join(p.name for p in written)} -> {target}")
            if output.mutation:
                changed = ", ".join(output.mutation.changed_fields) or "nothing"
                print(f"  mutation changed: {changed}")
                print(f"  rationale: {output.mutation.rationale}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceSettings, create_app

    settings = ServiceSettings(
        store_dir=Path(args.store_dir),
        mock_llm=args.mock_llm,
        llm_base_url=args.llm_base_url,
        llm_model=args.llm_model,
        raw_cap=args.raw_cap,
        ui_dir=Path(args.ui_dir) if args.ui_dir else None,
    )
    uvicorn.run(create_app(settings), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scegen",
        description="Generate intersection test scenarios: prose -> logical classes "
        "-> OpenDRIVE/OpenSCENARIO files with criticality mutation.",
    )
    parser.add_argument("--version", action="version", version=f"scegen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="stage 1: description -> functional spec JSON")
    p.add_argument("text", nargs="?", help="scenario description")
    p.add_argument("--file", help="read the description from a file")
    p.add_argument("--json", action="store_true", help="compact machine output")
    _add_llm_flags(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("enumerate", help="stage 2: enumerate + reduce logical scenarios")
    p.add_argument("--entries", type=int, required=True, help="number of junction legs")
    p.add_argument("--cars", required=True, help='comma-separated entry per car, e.g. "0,1,2"')
    p.add_argument("--reduction", choices=("pattern", "orbit"), default="pattern")
    p.add_argument("--cap", type=int, default=DEFAULT_RAW_CAP)
    p.add_argument("--svg", help="write one diagram per class into this directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("build", help="stage 3: concretize a class and write the file pair")
    p.add_argument("--manifest", help="replay a recorded run manifest verbatim")
    p.add_argument("--description", help="scenario prose (needs a gateway or --mock-llm)")
    p.add_argument("--entries", type=int, help="number of junction legs")
    p.add_argument("--cars", help="comma-separated entry per car")
    p.add_argument("--class", dest="class_index", default=0,
                   help='class index, or "all"')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reduction", choices=("pattern", "orbit"), default="pattern")
    p.add_argument("--road-len", type=float, default=100.0)
    p.add_argument("--radius", type=float, default=15.0)
    p.add_argument("--lanes", default="1,1", help='"left,right" lane counts per leg')
    p.add_argument("--angles", help="comma-separated leg angles in degrees (cumulative deltas)")
    p.add_argument("--mutate", choices=("heuristic", "llm"))
    p.add_argument("--factors", help="danger description for llm mutation")
    p.add_argument("--targets", help='comma subset of "angle,init_speed,change_lane"')
    p.add_argument("--intensity", type=float, default=0.5)
    p.add_argument("--cap", type=int, default=DEFAULT_RAW_CAP)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--json", action="store_true")
    _add_llm_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("serve", help="run the HTTP service (and UI when built)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--store-dir", default="./scegen-sessions")
    p.add_argument("--raw-cap", type=int, default=DEFAULT_RAW_CAP)
    p.add_argument("--ui-dir", help="directory with the built web UI bundle")
    _add_llm_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScegenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
