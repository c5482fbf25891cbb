"""Scripted multi-node runs with deterministic transcripts.

A scenario script declares its actors (one core plus any number of sites)
and an ordered list of steps. Each step sends one message from a named
actor's node and states the status it expects; the run aborts with a diff
at the first step whose outcome disagrees. Nodes run in-process over the
loopback transport with logical clocks and counted request ids, so the
same script always yields byte-identical transcripts.
"""

from __future__ import annotations

import difflib
import itertools
import json

from ..store import LocalStore
from ..util import canonical_json
from .clients import SiteClient
from .nodes import CoreNode, SiteNode
from .transport import LoopbackNetwork


class ScenarioMismatch(Exception):
    def __init__(self, step_index: int, expected, actual, diff: str):
        super().__init__(
            f"step {step_index}: expected {expected!r}, got {actual!r}\n{diff}")
        self.step_index = step_index
        self.expected = expected
        self.actual = actual
        self.diff = diff


def _diff(expected, actual) -> str:
    exp = json.dumps(expected, indent=2, sort_keys=True).splitlines()
    act = json.dumps(actual, indent=2, sort_keys=True).splitlines()
    return "\n".join(difflib.unified_diff(exp, act, "expected", "actual", lineterm=""))


def build_actors(actors_spec: dict):
    """Instantiate the nodes for a script. Returns (network, nodes by name)."""
    network = LoopbackNetwork()
    nodes = {}
    core_names = [n for n, spec in actors_spec.items() if spec.get("role") == "core"]
    if len(core_names) != 1:
        raise ValueError("a scenario needs exactly one core actor")
    core_name = core_names[0]
    logical_clock = itertools.count(1)
    core = CoreNode(
        client_factory=lambda addr: SiteClient(network.sender(addr)),
        max_depth=actors_spec[core_name].get("max_depth"),
        clock=lambda: float(next(logical_clock)))
    network.bind(core_name, core)
    nodes[core_name] = core
    for name, spec in actors_spec.items():
        if spec.get("role") == "core":
            continue
        if spec.get("role") != "site":
            raise ValueError(f"actor {name!r} must have role core or site")
        store = LocalStore(data_dir=spec.get("data_dir"))
        site = SiteNode(store, site_id=name, core_sender=network.sender(core_name))
        network.bind(name, site)
        nodes[name] = site
    return network, nodes


def run_scenario(script: dict) -> list:
    """Execute the script; returns the transcript (one entry per step)."""
    actors_spec = script.get("actors", {})
    steps = script.get("steps", [])
    for i, step in enumerate(steps):
        if step.get("actor") not in actors_spec:
            raise ValueError(f"step {i} references unknown actor {step.get('actor')!r}")
    _, nodes = build_actors(actors_spec)

    transcript = []
    for i, step in enumerate(steps):
        node = nodes[step["actor"]]
        frame = canonical_json({
            "version": 1, "request_id": f"s{i:05d}",
            "kind": step["kind"], "payload": step.get("payload", {}),
        }) + "\n"
        response = json.loads(node.handle_line(frame))
        if response["status"] == "ok":
            status = "ok"
            entry = {"step": i, "actor": step["actor"], "kind": step["kind"],
                     "status": status, "payload": response["payload"]}
        else:
            status = response["error"]["code"]
            entry = {"step": i, "actor": step["actor"], "kind": step["kind"],
                     "status": status, "error": response["error"]}
        transcript.append(entry)

        expect = step.get("expect", "ok")
        matches = (status == "ok") if expect == "ok" else \
                  (status != "ok") if expect == "error" else (status == expect)
        if not matches:
            raise ScenarioMismatch(i, expect, status, _diff({"expect": expect}, entry))
        if "response" in step and status == "ok":
            if response["payload"] != step["response"]:
                raise ScenarioMismatch(i, step["response"], response["payload"],
                                       _diff(step["response"], response["payload"]))
    return transcript


def run_scenario_file(path: str) -> list:
    with open(path, encoding="utf-8") as fh:
        return run_scenario(json.load(fh))


def transcript_json(transcript: list) -> str:
    """Canonical rendering used for byte-equality checks."""
    return canonical_json(transcript)
