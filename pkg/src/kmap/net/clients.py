"""Typed client wrappers over a transport-agnostic send callable.

``send(kind, payload) -> payload`` hides the transport (loopback dispatch
or a TCP connection); error responses come back as the typed exceptions
from :mod:`kmap.errors`.
"""

from __future__ import annotations

from ..catalog import KnowledgeProperties
from ..store import KnowledgeElement


def _properties_dict(properties) -> dict:
    if isinstance(properties, KnowledgeProperties):
        return properties.to_dict()
    return dict(properties)


def _element_dicts(elements) -> list[dict]:
    return [e.to_dict() if isinstance(e, KnowledgeElement) else dict(e) for e in elements]


class SiteClient:
    """Client of one site node."""

    def __init__(self, send):
        self._send = send

    def query_elements(self, knowledge_id: str, terms) -> list[KnowledgeElement]:
        payload = self._send("Query", {"knowledge_id": knowledge_id, "terms": list(terms)})
        return [KnowledgeElement.from_dict(e) for e in payload["elements"]]

    def get_element(self, knowledge_id: str, eid: int) -> KnowledgeElement:
        payload = self._send("GetElement", {"knowledge_id": knowledge_id, "eid": eid})
        return KnowledgeElement.from_dict(payload["element"])

    def list_headers(self) -> list[dict]:
        return self._send("ListHeaders", {})["headers"]

    def ingest_knowledge(self, knowledge_id: str, elements, properties, description: str) -> dict:
        return self._send("AddKnowledge", {
            "knowledge_id": knowledge_id,
            "elements": _element_dicts(elements),
            "properties": _properties_dict(properties),
            "description": description,
        })["header"]

    def update_knowledge(self, knowledge_id: str, elements=None, properties=None,
                         description: str | None = None) -> dict:
        payload: dict = {"knowledge_id": knowledge_id}
        if elements is not None:
            payload["elements"] = _element_dicts(elements)
        if properties is not None:
            payload["properties"] = _properties_dict(properties)
        if description is not None:
            payload["description"] = description
        return self._send("UpdateKnowledge", payload)

    def remove_knowledge(self, knowledge_id: str) -> None:
        self._send("RemoveKnowledge", {"knowledge_id": knowledge_id})


class CoreClient:
    """Client of the core node."""

    def __init__(self, send):
        self._send = send

    def navigate(self, path=None) -> dict:
        return self._send("Navigate", {"path": list(path) if path else []})

    def plan_retrieval(self, paths) -> list[dict]:
        return self._send("PlanRetrieval", {"paths": [list(p) for p in paths]})["candidates"]

    def retrieve(self, targets, keywords) -> dict:
        return self._send("Retrieve", {
            "targets": [{"site_id": s, "knowledge_id": k} for s, k in targets],
            "keywords": list(keywords),
        })

    def add_domain(self, parent, name: str) -> list:
        return self._send("AddDomain", {"parent": list(parent) if parent else [],
                                        "name": name})["path"]

    def move_mapping(self, from_path, to_path, site_id: str, knowledge_id: str) -> None:
        self._send("MoveMapping", {"from": list(from_path), "to": list(to_path),
                                   "site_id": site_id, "knowledge_id": knowledge_id})

    def register_site(self, site_id: str, address: str) -> None:
        self._send("RegisterSite", {"site_id": site_id, "address": address})

    def add_knowledge(self, site_id: str, knowledge_id: str, elements, properties,
                      description: str, domain_path, create_domain_if_missing: bool = False) -> list:
        return self._send("AddKnowledge", {
            "site_id": site_id,
            "knowledge_id": knowledge_id,
            "elements": _element_dicts(elements),
            "properties": _properties_dict(properties),
            "description": description,
            "domain_path": list(domain_path),
            "create_domain_if_missing": create_domain_if_missing,
        })["path"]

    def remove_knowledge(self, site_id: str, knowledge_id: str) -> None:
        self._send("RemoveKnowledge", {"site_id": site_id, "knowledge_id": knowledge_id})

    def propagate_update(self, site_id: str, knowledge_id: str) -> int:
        return self._send("PropagateUpdate", {"site_id": site_id,
                                              "knowledge_id": knowledge_id})["updated"]

    def reclassify(self, site_id: str, knowledge_id: str, from_path, to_path) -> None:
        self._send("Reclassify", {"site_id": site_id, "knowledge_id": knowledge_id,
                                  "from": list(from_path), "to": list(to_path)})

    def verify_coherence(self) -> dict:
        return self._send("VerifyCoherence", {})

    def edit_mapping(self, path, site_id: str, knowledge_id: str, fields: dict) -> None:
        self._send("EditMapping", {"path": list(path), "site_id": site_id,
                                   "knowledge_id": knowledge_id, "fields": fields})
