"""Transports: in-process loopback, TCP with NDJSON framing, HTTP gateway.

The loopback network is the default for tests and the scenario harness:
frames still go through encode/decode, so its semantics match the socket
path byte for byte, minus the socket.
"""

from __future__ import annotations

import itertools
import json
import os
import socket
import socketserver
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import MalformedRequest, SiteUnreachable, from_code
from . import protocol


def parse_address(address: str) -> tuple:
    """'host:port' or ':port' (all interfaces)."""
    host, sep, port = address.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {address!r}")
    return host or "0.0.0.0", int(port)


def _payload_of(response: dict, request_id: str | None = None) -> dict:
    if request_id is not None and response.get("request_id") != request_id:
        raise MalformedRequest(
            f"response id {response.get('request_id')!r} does not match request {request_id!r}")
    if response.get("status") == "ok":
        return response.get("payload", {})
    error = response.get("error", {})
    raise from_code(error.get("code", "InternalError"), error.get("message", ""))


class LoopbackNetwork:
    """Address -> node registry with deterministic request ids."""

    def __init__(self):
        self._nodes = {}
        self._ids = itertools.count(1)
        self._lock = threading.Lock()

    def bind(self, address: str, node) -> None:
        with self._lock:
            self._nodes[address] = node

    def next_request_id(self) -> str:
        with self._lock:
            return f"l{next(self._ids):06d}"

    def send(self, address: str, kind: str, payload: dict) -> dict:
        with self._lock:
            node = self._nodes.get(address)
        if node is None:
            raise SiteUnreachable(f"no node bound at {address!r}")
        request_id = self.next_request_id()
        line = protocol.encode(protocol.request(kind, payload, request_id))
        return _payload_of(json.loads(node.handle_line(line)), request_id)

    def sender(self, address: str):
        return lambda kind, payload: self.send(address, kind, payload)


class TcpSender:
    """One persistent NDJSON connection; one request at a time.

    Transport failures surface as SiteUnreachable; the connection is torn
    down and re-dialed on the next call.
    """

    def __init__(self, address: str, timeout: float = 5.0):
        self.address = address
        self.timeout = timeout
        self._lock = threading.Lock()
        self._ids = itertools.count(1)
        self._sock = None
        self._rfile = None

    def _connect(self):
        host, port = parse_address(self.address)
        sock = socket.create_connection((host if host != "0.0.0.0" else "127.0.0.1", port),
                                        timeout=self.timeout)
        self._sock = sock
        self._rfile = sock.makefile("r", encoding="utf-8", newline="\n")

    def close(self) -> None:
        with self._lock:
            self._teardown()

    def _teardown(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        self._sock = None
        self._rfile = None

    def __call__(self, kind: str, payload: dict) -> dict:
        request_id = f"t{next(self._ids):06d}"
        line = protocol.encode(protocol.request(kind, payload, request_id))
        with self._lock:
            try:
                if self._sock is None:
                    self._connect()
                self._sock.sendall(line.encode("utf-8"))
                response_line = self._rfile.readline()
            except (OSError, ValueError) as exc:
                self._teardown()
                raise SiteUnreachable(f"{self.address}: {exc}") from None
            if not response_line:
                self._teardown()
                raise SiteUnreachable(f"{self.address}: connection closed")
        response = protocol.decode_response_line(response_line)
        return _payload_of(response, request_id)


class _NdjsonHandler(socketserver.StreamRequestHandler):
    def handle(self):
        while True:
            try:
                line = self.rfile.readline()
            except OSError:
                return
            if not line:
                return
            text = line.decode("utf-8", errors="replace")
            if not text.strip():
                continue
            out = self.server.node.handle_line(text)
            try:
                self.wfile.write(out.encode("utf-8"))
                self.wfile.flush()
            except OSError:
                return


class TcpNodeServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, node, host: str, port: int):
        super().__init__((host, port), _NdjsonHandler)
        self.node = node
        self._thread = None

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "TcpNodeServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()


def serve_tcp(node, address: str) -> TcpNodeServer:
    host, port = parse_address(address)
    return TcpNodeServer(node, host, port).start()


class _GatewayHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):
        pass

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "POST, GET, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def do_OPTIONS(self):
        self.send_response(HTTPStatus.NO_CONTENT)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_POST(self):
        if self.path != "/v1/message":
            self._respond(HTTPStatus.NOT_FOUND, b'{"error":"unknown endpoint"}')
            return
        length = int(self.headers.get("Content-Length", "0") or "0")
        body = self.rfile.read(length).decode("utf-8", errors="replace")
        out = self.server.node.handle_line(body)
        self._respond(HTTPStatus.OK, out.encode("utf-8"))

    def do_GET(self):
        ui_dir = self.server.ui_dir
        if ui_dir is None:
            self._respond(HTTPStatus.NOT_FOUND, b'{"error":"no UI configured"}')
            return
        rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(ui_dir, rel))
        if not full.startswith(os.path.realpath(ui_dir)) or not os.path.isfile(full):
            self._respond(HTTPStatus.NOT_FOUND, b"not found")
            return
        ctype = {
            ".html": "text/html", ".js": "application/javascript",
            ".css": "text/css", ".json": "application/json",
        }.get(os.path.splitext(full)[1], "application/octet-stream")
        with open(full, "rb") as fh:
            data = fh.read()
        self._respond(HTTPStatus.OK, data, ctype)

    def _respond(self, status, body: bytes, ctype: str = "application/json"):
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", f"{ctype}; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class GatewayServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, node, host: str, port: int, ui_dir: str | None = None):
        super().__init__((host, port), _GatewayHandler)
        self.node = node
        self.ui_dir = ui_dir
        self._thread = None

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "GatewayServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()


def serve_gateway(node, address: str, ui_dir: str | None = None) -> GatewayServer:
    host, port = parse_address(address)
    return GatewayServer(node, host, port, ui_dir=ui_dir).start()
