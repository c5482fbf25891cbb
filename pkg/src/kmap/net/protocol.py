"""Message schema and framing: newline-delimited JSON, UTF-8, version 1.

A request is {"version": 1, "request_id": str, "kind": str, "payload": {}}.
Every request gets exactly one response with the same request_id:
{"version": 1, "request_id": str, "status": "ok", "payload": {}} or
{"version": 1, "request_id": str, "status": "error",
 "error": {"code": str, "message": str}}.

Unknown kinds and foreign versions answer with UnsupportedMessage; frames
that do not parse answer with MalformedRequest. Neither drops the
connection.
"""

from __future__ import annotations

import json

from ..errors import KmapError, MalformedRequest, UnsupportedMessage
from ..util import canonical_json

PROTOCOL_VERSION = 1

KINDS = frozenset({
    # core-directed
    "Navigate", "PlanRetrieval", "Retrieve", "AddDomain", "MoveMapping",
    "RegisterSite", "AddKnowledge", "RemoveKnowledge", "PropagateUpdate",
    "Reclassify", "VerifyCoherence", "EditMapping",
    # site-directed (AddKnowledge/RemoveKnowledge are also accepted by sites,
    # meaning the local ingest/delete step only)
    "ListHeaders", "Query", "GetElement", "UpdateKnowledge",
})


def request(kind: str, payload: dict, request_id: str) -> dict:
    return {"version": PROTOCOL_VERSION, "request_id": request_id,
            "kind": kind, "payload": payload}


def ok_response(request_id, payload: dict) -> dict:
    return {"version": PROTOCOL_VERSION, "request_id": request_id,
            "status": "ok", "payload": payload}


def error_response(request_id, code: str, message: str) -> dict:
    return {"version": PROTOCOL_VERSION, "request_id": request_id,
            "status": "error", "error": {"code": code, "message": message}}


def response_for_error(request_id, exc: Exception) -> dict:
    if isinstance(exc, KmapError):
        return error_response(request_id, exc.code, str(exc))
    return error_response(request_id, "InternalError", f"{type(exc).__name__}: {exc}")


def encode(message: dict) -> str:
    """One frame: canonical JSON plus the terminating newline."""
    return canonical_json(message) + "\n"


def decode_request(obj) -> dict:
    """Validate a parsed request object. Raises MalformedRequest or
    UnsupportedMessage; never mutates the input."""
    if not isinstance(obj, dict):
        raise MalformedRequest("request must be a JSON object")
    if obj.get("version") != PROTOCOL_VERSION:
        raise UnsupportedMessage(f"unsupported protocol version {obj.get('version')!r}")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise UnsupportedMessage(f"unknown message kind {kind!r}")
    if not isinstance(obj.get("request_id"), str):
        raise MalformedRequest("request_id must be a string")
    payload = obj.get("payload", {})
    if not isinstance(payload, dict):
        raise MalformedRequest("payload must be a JSON object")
    return {"version": PROTOCOL_VERSION, "request_id": obj["request_id"],
            "kind": kind, "payload": payload}


def decode_request_line(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRequest(f"frame is not valid JSON: {exc.msg}") from None
    return decode_request(obj)


def decode_response_line(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRequest(f"response frame is not valid JSON: {exc.msg}") from None
    if not isinstance(obj, dict) or obj.get("status") not in ("ok", "error"):
        raise MalformedRequest("response must carry status ok or error")
    return obj
