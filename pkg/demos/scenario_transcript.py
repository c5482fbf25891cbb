"""Scripted-run demo: the same scenario twice gives byte-identical output.

Writes the script to demos/scenario.json so it can be replayed with
``run_scenario_file``, runs it twice, and diffs the transcripts.

Run:  python demos/scenario_transcript.py
"""

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from kmap.net.scenario import run_scenario, run_scenario_file, transcript_json

SCRIPT = {
    "actors": {
        "core": {"role": "core"},
        "siteX": {"role": "site"},
    },
    "steps": [
        {"actor": "core", "kind": "AddDomain",
         "payload": {"parent": [], "name": "meteorology"}},
        {"actor": "core", "kind": "AddDomain",
         "payload": {"parent": ["meteorology"], "name": "storm"}},
        {"actor": "core", "kind": "RegisterSite",
         "payload": {"site_id": "siteX", "address": "siteX"}},
        {"actor": "core", "kind": "AddKnowledge",
         "payload": {"site_id": "siteX", "knowledge_id": "16",
                     "elements": [
                         {"eid": 20, "content": "IF pressure < 950 THEN rapid",
                          "attributes": {}},
                         {"eid": 171, "content": "IF pressure AND cloud THEN surge",
                          "attributes": {}},
                     ],
                     "properties": {"data_type": "numeric-interval", "dimension": 12,
                                    "mining_task": "association-rules",
                                    "data_size_bytes": 0},
                     "description": "demo knowledge",
                     "domain_path": ["meteorology", "storm"],
                     "create_domain_if_missing": False}},
        {"actor": "siteX", "kind": "Query",
         "payload": {"knowledge_id": "16", "terms": ["pressure", "cloud"]}},
        {"actor": "core", "kind": "AddDomain",
         "payload": {"parent": [], "name": "meteorology"},
         "expect": "DuplicateSibling"},
        {"actor": "core", "kind": "VerifyCoherence", "payload": {}},
    ],
}


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    script_path = os.path.join(here, "scenario.json")
    with open(script_path, "w", encoding="utf-8") as fh:
        json.dump(SCRIPT, fh, indent=2)
    print(f"wrote {script_path}")

    first = transcript_json(run_scenario(SCRIPT))
    second = transcript_json(run_scenario_file(script_path))
    print("run 1 and run 2 byte-identical:", first == second)
    for entry in json.loads(first):
        print(f"  step {entry['step']:2d} {entry['actor']:5s} "
              f"{entry['kind']:16s} -> {entry['status']}")


if __name__ == "__main__":
    main()
