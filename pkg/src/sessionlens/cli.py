"""Command line interface.

`serve` runs the HTTP API over a dataset directory, `synthgen` writes a
synthetic dataset from a spec file, and `client` is a thin JSON client for
a running server (used for scripting and smoke checks).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import urllib.parse
import urllib.request
from pathlib import Path

DATA_ENV_VAR = "SESSIONLENS_DATA"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sessionlens", description=__doc__)
    sub = parser.add_subparsers(required=True)

    serve = sub.add_parser("serve", help="serve a dataset over HTTP")
    serve.add_argument("--data", help=f"dataset root (fallback: ${DATA_ENV_VAR})")
    serve.add_argument("--bind", default="127.0.0.1:8000", help="addr:port to listen on")
    serve.add_argument("--embed-k", type=int, default=None, help="shapelet count")
    serve.add_argument("--embed-m", type=int, default=None, help="shapelet length")
    serve.add_argument("--embed-len", type=int, default=None, help="resample length")
    serve.add_argument("--embed-seed", type=int, default=None, help="embedding seed")
    serve.add_argument("--ui", default=None, help="directory of built UI assets to serve at /")
    serve.set_defaults(func=cmd_serve)

    synth = sub.add_parser("synthgen", help="generate a synthetic dataset")
    synth.add_argument("--spec", required=True, help="generator spec JSON file")
    synth.add_argument("--out", required=True, help="output dataset directory")
    synth.set_defaults(func=cmd_synthgen)

    client = sub.add_parser("client", help="query a running server, print JSON")
    client.add_argument("--server", default="http://127.0.0.1:8000", help="server base URL")
    csub = client.add_subparsers(required=True)

    def add(name: str, **params):
        cp = csub.add_parser(name)
        for flag, kwargs in params.items():
            cp.add_argument(flag, **kwargs)
        return cp

    add("health").set_defaults(func=cmd_client, path="/api/health")
    sessions = add(
        "sessions",
        **{
            "--top-k-trials": dict(type=int, default=None),
            "--subject": dict(action="append", default=None),
            "--trial": dict(action="append", default=None),
        },
    )
    sessions.set_defaults(func=cmd_client, path="/api/sessions")
    add("quality").set_defaults(func=cmd_client, path="/api/quality")
    embedding = add(
        "embedding",
        **{
            "--stream": dict(default="imu"),
            "--k": dict(type=int, default=None),
            "--m": dict(type=int, default=None),
            "--len": dict(type=int, default=None),
            "--seed": dict(type=int, default=None),
        },
    )
    embedding.set_defaults(func=cmd_client, path="/api/embedding")
    aggregate = add(
        "aggregate",
        **{
            "--ids": dict(required=True, help="comma-separated session ids"),
            "--group-by": dict(default="subject", choices=["subject", "trial"]),
            "--category": dict(default="attention"),
        },
    )
    aggregate.set_defaults(func=cmd_client_aggregate)
    timeline = add("timeline", **{"id": dict(), "--category": dict(default="attention")})
    timeline.set_defaults(func=cmd_client_session, suffix="timeline")
    matrix = add("matrix", **{"id": dict(), "--category": dict(default="attention")})
    matrix.set_defaults(func=cmd_client_session, suffix="matrix")
    brush = add(
        "brush",
        **{
            "id": dict(),
            "--t0": dict(type=float, required=True),
            "--t1": dict(type=float, required=True),
            "--category": dict(default="attention"),
        },
    )
    brush.set_defaults(func=cmd_client_session, suffix="brush")
    series = add(
        "series",
        **{
            "id": dict(),
            "--stream": dict(required=True),
            "--channel": dict(required=True),
            "--t0": dict(type=float, default=None),
            "--t1": dict(type=float, default=None),
            "--max-points": dict(type=int, default=None),
        },
    )
    series.set_defaults(func=cmd_client_session, suffix="series")
    return parser


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .embed import EmbedParams
    from .service import ServiceConfig, create_app

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    data = args.data or os.environ.get(DATA_ENV_VAR)
    if not data:
        print(f"error: --data or ${DATA_ENV_VAR} is required", file=sys.stderr)
        return 2
    defaults = EmbedParams()
    params = EmbedParams(
        k=args.embed_k if args.embed_k is not None else defaults.k,
        m=args.embed_m if args.embed_m is not None else defaults.m,
        length=args.embed_len if args.embed_len is not None else defaults.length,
        seed=args.embed_seed if args.embed_seed is not None else defaults.seed,
    )
    config = ServiceConfig(
        data_root=Path(data),
        embed_params=params,
        ui_dir=Path(args.ui) if args.ui else None,
    )
    try:
        app = create_app(config)
    except Exception as exc:
        print(f"error: failed to load dataset: {exc}", file=sys.stderr)
        return 1

    if hasattr(signal, "SIGHUP"):
        state = app.state.lens

        def reload_handler(_signum, _frame):
            logging.getLogger("sessionlens").info("SIGHUP: reloading dataset snapshot")
            state.reload()

        try:
            signal.signal(signal.SIGHUP, reload_handler)
        except ValueError:
            pass  # not on the main thread

    host, _, port = args.bind.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def cmd_synthgen(args: argparse.Namespace) -> int:
    from .synthgen import SpecError, generate_degraded, parse_spec

    try:
        raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        spec, degradations = parse_spec(raw)
        ids = generate_degraded(spec, degradations, args.out)
    except (OSError, json.JSONDecodeError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(ids)} session bundles to {args.out}")
    return 0


def _get(server: str, path: str, params: dict | None = None) -> int:
    url = server.rstrip("/") + path
    if params:
        clean = {k: v for k, v in params.items() if v is not None}
        pairs = []
        for key, value in clean.items():
            if isinstance(value, list):
                pairs.extend((key, v) for v in value)
            else:
                pairs.append((key, value))
        if pairs:
            url += "?" + urllib.parse.urlencode(pairs)
    return _request(urllib.request.Request(url))


def _request(req: urllib.request.Request) -> int:
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            body = resp.read().decode("utf-8")
            status = resp.status
    except urllib.error.HTTPError as exc:
        body = exc.read().decode("utf-8")
        status = exc.code
    try:
        print(json.dumps(json.loads(body), indent=2))
    except json.JSONDecodeError:
        print(body)
    return 0 if status < 400 else 1


def cmd_client(args: argparse.Namespace) -> int:
    params = {
        key: getattr(args, key)
        for key in ("top_k_trials", "subject", "trial", "stream", "k", "m", "len", "seed")
        if hasattr(args, key)
    }
    return _get(args.server, args.path, params)


def cmd_client_aggregate(args: argparse.Namespace) -> int:
    payload = {
        "session_ids": [s for s in args.ids.split(",") if s],
        "group_by": args.group_by,
        "category": args.category,
    }
    req = urllib.request.Request(
        args.server.rstrip("/") + "/api/aggregate",
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    return _request(req)


def cmd_client_session(args: argparse.Namespace) -> int:
    params = {}
    for key in ("category", "t0", "t1", "stream", "channel", "max_points"):
        if hasattr(args, key) and getattr(args, key) is not None:
            params[key] = getattr(args, key)
    return _get(args.server, f"/api/sessions/{args.id}/{args.suffix}", params)


if __name__ == "__main__":
    sys.exit(main())
