"""Shared fixtures and independent oracles for the test suite.

The oracles here are deliberately naive: full scans, flat sets of triples,
and brute-force set intersections. They never share code with the indexed
paths they check.
"""

import random

from kmap.catalog import DomainCatalog, KnowledgeMappingNode, KnowledgeProperties
from kmap.store import Tokenizer, is_opaque_ref

# The storm example tree: top-level domain with two levels of sub-domains.
STORM_TREE = {
    "meteorology": {
        "weather forecasting": {},
        "storm": {
            "thunder storm": {},
            "tropical cyclone": {},
            "tornado": {},
        },
        "climate": {},
    },
}

CYCLONE_PATH = ["meteorology", "storm", "tropical cyclone"]

EXAMPLE_SITE = "prgcluster.ucd.ie"
EXAMPLE_KID = "16"
EXAMPLE_PROPERTIES = {
    "data_type": "numeric-interval",
    "dimension": 12,
    "mining_task": "association-rules",
    "data_size_bytes": 60 * 2**30,
}
EXAMPLE_DESCRIPTION = "knowledge mined from Hurricane Isabel data"


def build_tree(catalog: DomainCatalog, tree=None, parent=()) -> None:
    for name, children in (tree if tree is not None else STORM_TREE).items():
        path = catalog.add_domain(parent, name)
        build_tree(catalog, children, path)


def make_props(**overrides) -> KnowledgeProperties:
    base = {"data_type": "text", "dimension": 1, "mining_task": "other",
            "data_size_bytes": 0}
    base.update(overrides)
    return KnowledgeProperties(**base)


def example_mapping_node() -> KnowledgeMappingNode:
    return KnowledgeMappingNode(
        site_id=EXAMPLE_SITE,
        knowledge_id=EXAMPLE_KID,
        properties=KnowledgeProperties.from_dict(EXAMPLE_PROPERTIES),
        description=EXAMPLE_DESCRIPTION,
    )


# Hurricane rule fixture: crafted so that exactly eids 25, 171, 360 contain
# "cloud", exactly 20 and 171 contain "pressure", and no other element uses
# either word.
HURRICANE_RULES = {
    7: ("IF wind_speed > 120 THEN category = 4", {"support": 0.41, "confidence": 0.77}),
    20: ("IF pressure < 950 THEN intensification = rapid", {"support": 0.35, "confidence": 0.81}),
    25: ("IF cloud = cirrus THEN outflow = strong", {"support": 0.52, "confidence": 0.7}),
    44: ("IF sst > 28 THEN genesis = likely", {"support": 0.63, "confidence": 0.88}),
    171: ("IF pressure < 920 AND cloud = cumulonimbus THEN surge = extreme",
          {"support": 0.6, "confidence": 0.9}),
    212: ("IF shear < 10 THEN organization = high", {"support": 0.44, "confidence": 0.69}),
    360: ("IF cloud = stratocumulus THEN rainband = outer", {"support": 0.3, "confidence": 0.66}),
}


def hurricane_elements() -> list[dict]:
    return [
        {"eid": eid, "content": content, "attributes": dict(attrs)}
        for eid, (content, attrs) in sorted(HURRICANE_RULES.items())
    ]


ELEMENT_171 = {
    "eid": 171,
    "content": "IF pressure < 920 AND cloud = cumulonimbus THEN surge = extreme",
    "attributes": {"support": 0.6, "confidence": 0.9},
}


def end_to_end_script() -> dict:
    """The storm/hurricane walkthrough: build the tree, ingest, navigate,
    retrieve element 171, verify coherence. Used by the scenario tests, the
    acceptance suite, and the demo."""
    cyclone = ["meteorology", "storm", "tropical cyclone"]
    steps = [
        {"actor": "core", "kind": "AddDomain",
         "payload": {"parent": [], "name": "meteorology"}},
        {"actor": "core", "kind": "AddDomain",
         "payload": {"parent": ["meteorology"], "name": "weather forecasting"}},
        {"actor": "core", "kind": "AddDomain",
         "payload": {"parent": ["meteorology"], "name": "storm"}},
        {"actor": "core", "kind": "AddDomain",
         "payload": {"parent": ["meteorology"], "name": "climate"}},
        {"actor": "core", "kind": "AddDomain",
         "payload": {"parent": ["meteorology", "storm"], "name": "thunder storm"}},
        {"actor": "core", "kind": "AddDomain",
         "payload": {"parent": ["meteorology", "storm"], "name": "tropical cyclone"}},
        {"actor": "core", "kind": "AddDomain",
         "payload": {"parent": ["meteorology", "storm"], "name": "tornado"}},
        {"actor": "core", "kind": "RegisterSite",
         "payload": {"site_id": "siteX", "address": "siteX"}},
        {"actor": "core", "kind": "AddKnowledge",
         "payload": {"site_id": "siteX", "knowledge_id": EXAMPLE_KID,
                     "elements": hurricane_elements(),
                     "properties": dict(EXAMPLE_PROPERTIES),
                     "description": EXAMPLE_DESCRIPTION,
                     "domain_path": cyclone, "create_domain_if_missing": False},
         "response": {"path": cyclone}},
        {"actor": "core", "kind": "Navigate", "payload": {"path": ["meteorology"]},
         "response": {"path": ["meteorology"],
                      "children": ["climate", "storm", "weather forecasting"],
                      "mappings": []}},
        {"actor": "core", "kind": "Navigate", "payload": {"path": cyclone},
         "response": {"path": cyclone, "children": [],
                      "mappings": [{"site_id": "siteX", "knowledge_id": EXAMPLE_KID,
                                    "properties": dict(EXAMPLE_PROPERTIES),
                                    "description": EXAMPLE_DESCRIPTION,
                                    "revision": 0}]}},
        {"actor": "core", "kind": "PlanRetrieval", "payload": {"paths": [cyclone]}},
        {"actor": "core", "kind": "Retrieve",
         "payload": {"targets": [{"site_id": "siteX", "knowledge_id": EXAMPLE_KID}],
                     "keywords": ["pressure", "cloud"]},
         "response": {"groups": [{"site_id": "siteX", "knowledge_id": EXAMPLE_KID,
                                  "status": "ok", "elements": [dict(ELEMENT_171)]}]}},
        {"actor": "siteX", "kind": "Query",
         "payload": {"knowledge_id": EXAMPLE_KID, "terms": ["pressure", "cloud"]},
         "response": {"elements": [dict(ELEMENT_171)]}},
        {"actor": "siteX", "kind": "GetElement",
         "payload": {"knowledge_id": EXAMPLE_KID, "eid": 171},
         "response": {"element": dict(ELEMENT_171)}},
        {"actor": "core", "kind": "VerifyCoherence", "payload": {},
         "response": {"dangling_mappings": [], "orphan_headers": [],
                      "stale_mappings": [], "unreachable_sites": []}},
    ]
    return {"actors": {"core": {"role": "core"}, "siteX": {"role": "site"}},
            "steps": steps}


# -- full-scan retrieval oracle ----------------------------------------------


def scan_terms(content: str, tokenizer: Tokenizer) -> set:
    if is_opaque_ref(content):
        return set()
    return set(tokenizer.tokens(content))


def scan_filter(elements, terms, tokenizer: Tokenizer) -> list:
    """Brute-force conjunctive filter over raw elements (dicts or objects)."""
    wanted = set()
    for term in terms:
        wanted.update(tokenizer.tokens(term))
    out = []
    for element in elements:
        content = element["content"] if isinstance(element, dict) else element.content
        eid = element["eid"] if isinstance(element, dict) else element.eid
        if wanted <= scan_terms(content, tokenizer):
            out.append(eid)
    return sorted(out)


def scan_postings(elements, tokenizer: Tokenizer) -> dict:
    """Brute-force inverted file: term -> sorted eids."""
    postings: dict = {}
    for element in elements:
        content = element["content"] if isinstance(element, dict) else element.content
        eid = element["eid"] if isinstance(element, dict) else element.eid
        for term in scan_terms(content, tokenizer):
            postings.setdefault(term, set()).add(eid)
    return {t: sorted(eids) for t, eids in postings.items()}


# -- random corpora ------------------------------------------------------------


def random_vocabulary(rng: random.Random, size: int) -> list:
    return [f"w{rng.randrange(10**6):06d}x{i:03d}" for i in range(size)]


def random_corpus(rng: random.Random, max_elements: int = 500,
                  vocab_size: int = 200, opaque_ratio: float = 0.05) -> list[dict]:
    vocab = random_vocabulary(rng, vocab_size)
    count = rng.randint(1, max_elements)
    eids = rng.sample(range(1, max_elements * 10), count)
    elements = []
    for eid in sorted(eids):
        if rng.random() < opaque_ratio:
            content = f"artifact://store/{eid}"
        else:
            words = rng.choices(vocab, k=rng.randint(1, 12))
            content = "IF " + " AND ".join(words[:-1] or words) + " THEN " + words[-1]
        elements.append({
            "eid": eid,
            "content": content,
            "attributes": {"support": round(rng.random(), 3),
                           "confidence": round(rng.random(), 3)},
        })
    return elements


# -- random catalogs with a flat-triple oracle ------------------------------------


class TripleOracle:
    """Flat set of (path, site_id, knowledge_id) mirroring every attach/detach."""

    def __init__(self):
        self.triples = set()

    def attach(self, path, site_id, kid):
        self.triples.add((tuple(path), site_id, kid))

    def detach(self, path, site_id, kid):
        self.triples.discard((tuple(path), site_id, kid))

    def keys_at(self, path) -> set:
        return {(s, k) for p, s, k in self.triples if p == tuple(path)}

    def intersect(self, paths) -> set:
        sets = [self.keys_at(p) for p in paths]
        out = sets[0]
        for s in sets[1:]:
            out = out & s
        return out


def random_catalog(rng: random.Random, max_mappings: int = 1000,
                   max_depth: int = 6, n_sites: int = 5):
    """Random tree plus random attachments; returns (catalog, oracle, paths)."""
    catalog = DomainCatalog(max_depth=max_depth)
    oracle = TripleOracle()
    paths = []
    for i in range(rng.randint(3, 40)):
        parent = rng.choice(paths) if paths and rng.random() < 0.7 else ()
        if len(parent) >= max_depth:
            parent = ()
        name = f"dom{i:03d}"
        paths.append(catalog.add_domain(parent, name))
    n_mappings = rng.randint(0, max_mappings)
    for i in range(n_mappings):
        path = rng.choice(paths)
        site = f"site{rng.randrange(n_sites)}"
        kid = f"k{rng.randrange(max_mappings // 2 + 1)}"
        if (site, kid) in oracle.keys_at(path):
            continue
        catalog.attach_mapping(path, KnowledgeMappingNode(
            site, kid, make_props(), f"mapping {i}"))
        oracle.attach(path, site, kid)
    return catalog, oracle, paths
