"""Walkthrough of the whole system in one process.

Builds the storm domain tree at the core, ingests a hurricane rule set at a
site, navigates to the tropical-cyclone node, intersects domains, retrieves
elements by keyword, pushes a metadata update back to the core, and checks
coherence at the end.

Run:  python demos/end_to_end.py
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from kmap import DomainCatalog, LocalStore, RetrievalRequest, navigate, retrieve
from kmap.coherence import CoherenceManager

HURRICANE_ELEMENTS = [
    {"eid": 7, "content": "IF wind_speed > 120 THEN category = 4",
     "attributes": {"support": 0.41, "confidence": 0.77}},
    {"eid": 20, "content": "IF pressure < 950 THEN intensification = rapid",
     "attributes": {"support": 0.35, "confidence": 0.81}},
    {"eid": 25, "content": "IF cloud = cirrus THEN outflow = strong",
     "attributes": {"support": 0.52, "confidence": 0.7}},
    {"eid": 171, "content": "IF pressure < 920 AND cloud = cumulonimbus THEN surge = extreme",
     "attributes": {"support": 0.6, "confidence": 0.9}},
    {"eid": 360, "content": "IF cloud = stratocumulus THEN rainband = outer",
     "attributes": {"support": 0.3, "confidence": 0.66}},
]

PROPERTIES = {
    "data_type": "numeric-interval",
    "dimension": 12,
    "mining_task": "association-rules",
    "data_size_bytes": 60 * 2**30,
}


class DirectClient:
    """Site client that skips the wire; fine inside one process."""

    def __init__(self, store):
        self.store = store

    def __getattr__(self, name):
        target = getattr(self.store, name)
        if name in ("ingest_knowledge", "update_knowledge"):
            return lambda *a, **kw: target(*a, **kw).summary()
        return target


def main():
    # one core catalog, one site store, a coherence manager wiring them
    catalog = DomainCatalog(max_depth=6)
    site_store = LocalStore()
    clients = {"prgcluster.ucd.ie": DirectClient(site_store)}
    manager = CoherenceManager(catalog, clients.__getitem__)
    manager.register_site("prgcluster.ucd.ie", "prgcluster.ucd.ie")

    print("== build the domain tree ==")
    catalog.add_domain(None, "meteorology")
    for name in ("weather forecasting", "storm", "climate"):
        catalog.add_domain(["meteorology"], name)
    for name in ("thunder storm", "tropical cyclone", "tornado"):
        catalog.add_domain(["meteorology", "storm"], name)
    print("children of storm:", catalog.lookup_domain(["meteorology", "storm"]).children)

    print("\n== ingest hurricane knowledge (site + core, atomically) ==")
    cyclone = ["meteorology", "storm", "tropical cyclone"]
    manager.add_knowledge("prgcluster.ucd.ie", "16", HURRICANE_ELEMENTS,
                          PROPERTIES, "knowledge mined from Hurricane Isabel data",
                          cyclone)
    print("postings('cloud')    =", site_store.postings("16", "cloud"))
    print("postings('pressure') =", site_store.postings("16", "pressure"))

    print("\n== navigate to the tropical cyclone node ==")
    view = navigate(catalog, cyclone)
    for m in view.mappings:
        print(f"candidate: {m['site_id']}/{m['knowledge_id']} "
              f"({m['properties']['mining_task']}) - {m['description']}")

    print("\n== retrieve by keywords 'pressure' and 'cloud' ==")
    result = retrieve(RetrievalRequest([("prgcluster.ucd.ie", "16")],
                                       ["pressure", "cloud"]),
                      manager.site_client)
    for group in result.groups:
        for element in group.elements:
            print(f"element {element.eid}: {element.content}  {element.attributes}")

    print("\n== update at the site, propagate to the core ==")
    site_store.update_knowledge("16", description="Isabel rules, revalidated")
    manager.propagate_update("prgcluster.ucd.ie", "16")
    print("core now shows:", navigate(catalog, cyclone).mappings[0]["description"])

    report = manager.verify_coherence()
    print("\ncoherence report empty:", report.is_empty())


if __name__ == "__main__":
    main()
