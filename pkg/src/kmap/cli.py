"""kmap command line: run nodes, ingest knowledge, navigate, search, verify.

Every command other than ``serve`` is a thin protocol client: it sends the
same messages a raw connection would and prints, under ``--json``, exactly
the response payloads it received (canonical JSON, sorted keys).

Exit codes: 0 ok, 1 input error, 2 usage, 3 connectivity, 4 coherence
violation.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import signal
import sys
import threading

from .errors import (
    AllTargetsFailed,
    DuplicateSite,
    KmapError,
    SiteUnreachable,
)
from .net.clients import CoreClient, SiteClient
from .net.nodes import CoreNode, SiteNode
from .net.transport import TcpSender, parse_address, serve_gateway, serve_tcp
from .store import LocalStore
from .util import canonical_json

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_USAGE = 2
EXIT_CONNECT = 3
EXIT_COHERENCE = 4

DEFAULT_CORE_ADDR = "127.0.0.1:7001"

_PROP_KEYS = ("data_type", "dimension", "mining_task", "data_size_bytes", "quality")


def _core_addr(args) -> str:
    return args.core or os.environ.get("KMAP_CORE_ADDR") or DEFAULT_CORE_ADDR


def _core_client(args) -> CoreClient:
    return CoreClient(TcpSender(_core_addr(args), timeout=args.timeout))


def _split_path(text: str) -> list[str]:
    return [seg.strip() for seg in text.split("/") if seg.strip()]


def _split_paths(text: str) -> list[list[str]]:
    return [_split_path(p) for p in text.split(",") if p.strip()]


def _parse_props(pairs, error) -> dict:
    props = {"data_type": "text", "dimension": 1, "mining_task": "other",
             "data_size_bytes": 0}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or key not in _PROP_KEYS:
            error(f"--props expects key=value with key in {', '.join(_PROP_KEYS)}: {pair!r}")
        if key in ("dimension", "data_size_bytes"):
            props[key] = int(value)
        elif key == "quality":
            props[key] = float(value)
        else:
            props[key] = value
    return props


def _exit_code_for(exc: Exception) -> int:
    if isinstance(exc, (SiteUnreachable, AllTargetsFailed)):
        return EXIT_CONNECT
    if isinstance(exc, KmapError):
        return EXIT_INPUT
    if isinstance(exc, (ConnectionError, OSError)):
        return EXIT_CONNECT
    return EXIT_INPUT


def _print_json(obj) -> None:
    print(canonical_json(obj))


# -- serve -------------------------------------------------------------------


def cmd_serve(args, parser) -> int:
    if args.role == "site":
        if not args.site_id or not (args.core or os.environ.get("KMAP_CORE_ADDR")):
            parser.error("--role site requires --site-id and --core")
        if not args.data:
            parser.error("--role site requires --data")

    stop = threading.Event()
    servers = []

    def shut_down(signum, frame):
        stop.set()

    signal.signal(signal.SIGTERM, shut_down)
    signal.signal(signal.SIGINT, shut_down)

    if args.role == "core":
        node = CoreNode(
            client_factory=lambda addr: SiteClient(TcpSender(addr, timeout=args.timeout)),
            max_depth=args.max_depth, data_dir=args.data,
            retrieve_timeout=args.timeout)
        servers.append(serve_tcp(node, args.listen))
        if args.gateway:
            servers.append(serve_gateway(node, args.gateway, ui_dir=args.ui_dir))
        print(f"core listening on {servers[0].address}"
              + (f", gateway on {servers[1].address}" if args.gateway else ""), flush=True)
        flush = node.flush
    else:
        store = LocalStore(data_dir=args.data)
        core_sender = TcpSender(_core_addr(args), timeout=args.timeout)
        node = SiteNode(store, site_id=args.site_id, core_sender=core_sender)
        server = serve_tcp(node, args.listen)
        servers.append(server)
        advertise = args.advertise
        if not advertise:
            host, port = parse_address(server.address)
            advertise = f"127.0.0.1:{port}" if host in ("0.0.0.0", "") else server.address
        try:
            CoreClient(core_sender).register_site(args.site_id, advertise)
        except DuplicateSite:
            pass
        except Exception as exc:
            print(f"warning: could not register at core: {exc}", file=sys.stderr, flush=True)
        print(f"site {args.site_id} listening on {server.address}", flush=True)
        flush = lambda: None  # site store writes through on every mutation

    stop.wait()
    flush()
    for server in servers:
        server.stop()
    return EXIT_OK


# -- ingest ---------------------------------------------------------------------


def _read_elements_jsonl(path: str) -> list[dict]:
    elements = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise ValueError(f"{path}: line {lineno}: element must be a JSON object")
            elements.append(obj)
    return elements


def cmd_ingest(args, parser) -> int:
    try:
        elements = _read_elements_jsonl(args.file)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    props = _parse_props(args.props, parser.error)
    client = _core_client(args)
    try:
        path = client.add_knowledge(
            args.site, args.kid, elements, props, args.desc or "",
            _split_path(args.domain), create_domain_if_missing=args.create_domain)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)
    if args.json:
        _print_json({"path": path})
    else:
        print(f"ingested {args.site}/{args.kid} under {'/'.join(path)}")
    return EXIT_OK


# -- search ------------------------------------------------------------------------


def _format_group(group: dict) -> list[str]:
    lines = [f"{group['site_id']}/{group['knowledge_id']}  [{group['status']}]"]
    for element in group["elements"]:
        attrs = " ".join(f"{k}={v}" for k, v in sorted(element["attributes"].items()))
        lines.append(f"  {element['eid']:>6}  {element['content']}" + (f"  ({attrs})" if attrs else ""))
    return lines


def cmd_search(args, parser) -> int:
    paths = _split_paths(args.domains)
    if not paths:
        parser.error("--domains requires at least one path")
    keywords = [k.strip() for k in (args.keywords or "").split(",") if k.strip()]
    client = _core_client(args)
    try:
        candidates = client.plan_retrieval(paths)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)

    if not candidates:
        if args.json:
            _print_json({"plan": {"candidates": []}, "retrieve": {"groups": []}})
        else:
            print("no candidate knowledge (empty intersection)")
        return EXIT_OK

    targets = [(c["site_id"], c["knowledge_id"]) for c in candidates]
    try:
        result = client.retrieve(targets, keywords)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)

    if args.json:
        _print_json({"plan": {"candidates": candidates}, "retrieve": result})
    else:
        for group in result["groups"]:
            for line in _format_group(group):
                print(line)
    if any(g["status"] == "site-unreachable" for g in result["groups"]):
        return EXIT_CONNECT
    return EXIT_OK


# -- verify -------------------------------------------------------------------------


def cmd_verify(args, parser) -> int:
    client = _core_client(args)
    try:
        report = client.verify_coherence()
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)
    if args.json:
        _print_json(report)
    else:
        violations = (report["dangling_mappings"] or report["orphan_headers"]
                      or report["stale_mappings"])
        if not violations and not report["unreachable_sites"]:
            print("coherent: no violations")
        for entry in report["dangling_mappings"]:
            print(f"dangling: {'/'.join(entry['path'])} -> "
                  f"{entry['site_id']}/{entry['knowledge_id']}")
        for entry in report["orphan_headers"]:
            print(f"orphan header: {entry['site_id']}/{entry['knowledge_id']}")
        for entry in report["stale_mappings"]:
            print(f"stale: {entry['site_id']}/{entry['knowledge_id']}")
        for site in report["unreachable_sites"]:
            print(f"unreachable site: {site}")
    if report["dangling_mappings"] or report["orphan_headers"] or report["stale_mappings"]:
        return EXIT_COHERENCE
    if report["unreachable_sites"]:
        return EXIT_CONNECT
    return EXIT_OK


# -- interactive navigator -------------------------------------------------------------


def _nav_print(args, payload) -> None:
    if args.json:
        _print_json(payload)


def cmd_nav(args, parser) -> int:
    client = _core_client(args)
    path: list[str] = []
    selection: list[tuple[str, str]] = []
    interactive = sys.stdin.isatty()

    def show(view: dict) -> None:
        if args.json:
            _print_json(view)

    while True:
        if interactive:
            sys.stderr.write(f"kmap:/{'/'.join(path)}> ")
            sys.stderr.flush()
        line = sys.stdin.readline()
        if not line:
            return EXIT_OK
        try:
            words = shlex.split(line)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            continue
        if not words:
            continue
        cmd, rest = words[0], words[1:]
        try:
            if cmd in ("quit", "exit"):
                return EXIT_OK
            elif cmd == "ls":
                view = client.navigate(path)
                show(view)
                if not args.json:
                    for child in view["children"]:
                        print(child)
            elif cmd == "cd":
                if not rest:
                    print("usage: cd <name>", file=sys.stderr)
                    continue
                view = client.navigate(path + [rest[0]])
                path.append(rest[0])
                show(view)
            elif cmd == "up":
                if path:
                    path.pop()
            elif cmd == "info":
                view = client.navigate(path)
                show(view)
                if not args.json:
                    for m in view["mappings"]:
                        p = m["properties"]
                        print(f"{m['site_id']}/{m['knowledge_id']}  task={p['mining_task']}  "
                              f"type={p['data_type']}  dim={p['dimension']}  "
                              f"size={p['data_size_bytes']}  {m['description']}")
            elif cmd == "pick":
                if not rest or "/" not in rest[0]:
                    print("usage: pick <site_id>/<knowledge_id>", file=sys.stderr)
                    continue
                site_id, kid = rest[0].split("/", 1)
                if (site_id, kid) not in selection:
                    selection.append((site_id, kid))
            elif cmd == "sel":
                if args.json:
                    _print_json({"selection": [list(t) for t in selection]})
                else:
                    for site_id, kid in selection:
                        print(f"{site_id}/{kid}")
            elif cmd == "search":
                if not selection:
                    print("error: empty selection, use pick first", file=sys.stderr)
                    continue
                result = client.retrieve(selection, rest)
                show(result)
                if not args.json:
                    for group in result["groups"]:
                        for out in _format_group(group):
                            print(out)
            else:
                print(f"unknown command: {cmd}", file=sys.stderr)
        except KmapError as exc:
            print(f"error: {exc}", file=sys.stderr)
        except (ConnectionError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONNECT


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmap", description="distributed knowledge catalog client and nodes")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--core", default=None,
                       help="core address host:port (default $KMAP_CORE_ADDR or "
                            f"{DEFAULT_CORE_ADDR})")
        p.add_argument("--timeout", type=float, default=5.0, help="per-request timeout (s)")
        p.add_argument("--json", action="store_true", help="machine output, canonical JSON")

    p = sub.add_parser("serve", help="run a core or site node")
    p.add_argument("--role", choices=("core", "site"), required=True)
    p.add_argument("--listen", default=":7001", help="listen address host:port")
    p.add_argument("--gateway", default=None, help="core only: HTTP gateway address")
    p.add_argument("--ui-dir", default=None, help="core only: static UI directory for the gateway")
    p.add_argument("--data", default=None, help="data directory (site: required)")
    p.add_argument("--max-depth", type=int, default=None, help="core only: domain depth limit")
    p.add_argument("--site-id", default=None, help="site only: this site's id")
    p.add_argument("--advertise", default=None, help="site only: address to register at the core")
    p.add_argument("--core", default=None, help="site only: core address host:port")
    p.add_argument("--timeout", type=float, default=5.0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("ingest", help="add one knowledge from a JSONL element file")
    p.add_argument("--site", required=True, help="site id to ingest into")
    p.add_argument("--kid", required=True, help="knowledge id")
    p.add_argument("--file", required=True, help="elements file, one JSON object per line")
    p.add_argument("--domain", required=True, help="domain path, e.g. meteorology/storm")
    p.add_argument("--props", action="append", default=[],
                   help="property key=value (data_type, dimension, mining_task, "
                        "data_size_bytes, quality)")
    p.add_argument("--desc", default="", help="knowledge description")
    p.add_argument("--create-domain", action="store_true",
                   help="create the domain path when missing")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("search", help="one-shot: intersect domains, retrieve by keywords")
    p.add_argument("--domains", required=True, help="comma-separated domain paths (a/b/c)")
    p.add_argument("--keywords", default="", help="comma-separated keywords")
    common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("nav", help="interactive navigator (ls, cd, up, info, pick, sel, "
                                   "search, quit)")
    common(p)
    p.set_defaults(func=cmd_nav)

    p = sub.add_parser("verify", help="check coherence between core and sites")
    common(p)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
