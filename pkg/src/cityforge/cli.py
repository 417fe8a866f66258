"""Command line: generate scenes, evaluate corpora, serve the HTTP API.

Exit codes: 0 success (and evaluator pass for generate), 2 evaluator fail,
1 any error. Diagnostics go to stderr; data goes to files or stdout.
Every flag can be defaulted through a CITYFORGE_<NAME> environment
variable (e.g. CITYFORGE_SEED=7).
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from pathlib import Path

from .engine import Engine, bundled_data
from .metrics import RunLog, er_at_1, format_rates, load_corpus, run_corpus
from .raster import Palette
from .scene import export_gltf, export_obj


def _env_default(name: str, fallback=None, cast=str):
    raw = os.environ.get(f"CITYFORGE_{name.upper()}")
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except (TypeError, ValueError):
        return fallback


def _load_palette(path: str | None) -> Palette:
    if not path:
        return Palette.default()
    return Palette.from_json(Path(path).read_text(encoding="utf-8"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cityforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a scene from input files")
    gen.add_argument("--osm", help="OSM XML input file")
    gen.add_argument("--semantic", help="semantic map PNG input file")
    gen.add_argument("--height", help="16-bit height field PNG")
    gen.add_argument("--seed", type=int, default=_env_default("seed", 0, int))
    gen.add_argument("--style", default=_env_default("style", "modern"))
    gen.add_argument("--weather", default=_env_default("weather", "clear"))
    gen.add_argument("--palette", default=_env_default("palette"))
    gen.add_argument("-o", "--output", default="city.glb", help="output .glb path")
    gen.add_argument("--obj", help="also write an OBJ file here")
    gen.add_argument("--report", help="report JSON path (default: <output>.report.json)")

    ev = sub.add_parser("eval", help="run a corpus and print ER@1 / SR@1")
    ev.add_argument("--corpus", help="instruction corpus, one per line (default: bundled)")
    ev.add_argument("--runlog", help="score an existing RunLog JSON instead of running")
    ev.add_argument("--osm", help="OSM file for the base scene (default: bundled sample)")
    ev.add_argument("--semantic", help="semantic map for the base scene")
    ev.add_argument("--seed", type=int, default=_env_default("seed", 0, int))
    ev.add_argument("--palette", default=_env_default("palette"))
    ev.add_argument("--out", help="write the RunLog JSON here")

    srv = sub.add_parser("serve", help="serve the HTTP API")
    srv.add_argument("--port", type=int, default=_env_default("port", 8080, int))
    srv.add_argument("--host", default=_env_default("host", "127.0.0.1"))
    srv.add_argument("--seed", type=int, default=_env_default("seed", 0, int))
    srv.add_argument("--palette", default=_env_default("palette"))
    srv.add_argument("--guidance-dir", default=_env_default("guidance_dir"))
    srv.add_argument("--model-endpoint", default=_env_default("model_endpoint"),
                     help="optional remote LLM/VLM client URL")
    srv.add_argument("--state-dir", default=_env_default("state_dir"),
                     help="optional directory for scene persistence")
    return parser


def cmd_generate(args) -> int:
    if not args.osm and not args.semantic:
        print("error: need --osm and/or --semantic input", file=sys.stderr)
        return 1
    try:
        engine = Engine(seed=args.seed, palette=_load_palette(args.palette),
                        style=args.style, weather=args.weather)
        osm = Path(args.osm).read_bytes() if args.osm else None
        semantic = Path(args.semantic).read_bytes() if args.semantic else None
        height = Path(args.height).read_bytes() if args.height else None
        session, result = engine.create_scene(osm=osm, semantic=semantic, height=height)
        bundle = export_gltf(session.state)
        out = Path(args.output)
        out.write_bytes(bundle.data)
        if args.obj:
            Path(args.obj).write_text(export_obj(session.state), encoding="utf-8")
        report_path = Path(args.report) if args.report else out.with_suffix(out.suffix + ".report.json")
        report_path.write_text(
            json.dumps(
                {
                    "inputs": {"osm": args.osm, "semantic": args.semantic, "height": args.height},
                    "seed": args.seed,
                    "objects": bundle.object_count,
                    "triangles": bundle.triangle_count,
                    "bytes": bundle.byte_length,
                    "steps": result.steps_run,
                    "report": result.report.to_json(),
                },
                indent=2,
            ),
            encoding="utf-8",
        )
        print(f"wrote {out} ({bundle.object_count} objects, {bundle.triangle_count} triangles)")
        return 0 if result.report.passed else 2
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def cmd_eval(args) -> int:
    try:
        if args.runlog:
            log = RunLog.from_json(Path(args.runlog).read_text(encoding="utf-8"))
        else:
            corpus_text = (
                Path(args.corpus).read_text(encoding="utf-8")
                if args.corpus
                else bundled_data("corpus.txt").decode("utf-8")
            )
            corpus = load_corpus(corpus_text)
            if not corpus:
                print("error: corpus is empty", file=sys.stderr)
                return 1
            engine = Engine(seed=args.seed, palette=_load_palette(args.palette))
            osm = Path(args.osm).read_bytes() if args.osm else bundled_data("sample.osm")
            semantic = Path(args.semantic).read_bytes() if args.semantic else None
            base, _ = engine.create_scene(osm=osm, semantic=semantic)
            log = run_corpus(corpus, base, seed=args.seed)
        print(format_rates(log))
        if args.out:
            Path(args.out).write_text(log.to_json(), encoding="utf-8")
        return 0
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def cmd_serve(args, run=None) -> int:
    # probe the port first so a bind failure exits cleanly
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((args.host, args.port))
        probe.close()
    except OSError as e:
        print(f"error: cannot bind {args.host}:{args.port}: {e}", file=sys.stderr)
        return 1
    try:
        from .service import create_app

        engine = Engine(
            seed=args.seed,
            palette=_load_palette(args.palette),
            guidance_dir=args.guidance_dir,
            model_endpoint=args.model_endpoint,
        )
        app = create_app(engine, state_dir=args.state_dir)
        print(f"cityforge serving on http://{args.host}:{args.port}/api/v1", flush=True)
        if run is None:
            import uvicorn

            run = uvicorn.run
        run(app, host=args.host, port=args.port, log_level="warning")
        return 0
    except KeyboardInterrupt:
        return 0
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command == "generate":
        return cmd_generate(args)
    if args.command == "eval":
        return cmd_eval(args)
    if args.command == "serve":
        return cmd_serve(args)
    parser.print_usage(sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
