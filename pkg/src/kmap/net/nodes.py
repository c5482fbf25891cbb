"""Message-level node runtimes: the core node and the site node.

Both expose ``handle`` (validated request dict -> response dict) and
``handle_line`` (one NDJSON frame in, one frame out), so every transport
shares a single dispatch path.
"""

from __future__ import annotations

import json
import os
import time

from .. import retrieval
from ..catalog import DomainCatalog, normalize_path
from ..coherence import CoherenceManager, SiteRegistration
from ..errors import MalformedRequest, UnsupportedMessage
from ..store import LocalStore
from ..util import atomic_write_text, canonical_json
from . import protocol

_MISSING = object()


def _field(payload: dict, name: str, default=_MISSING):
    value = payload.get(name, _MISSING)
    if value is _MISSING:
        if default is _MISSING:
            raise MalformedRequest(f"payload field {name!r} is required")
        return default
    return value


class _NodeBase:
    def handle(self, raw) -> dict:
        request_id = raw.get("request_id") if isinstance(raw, dict) else None
        try:
            msg = protocol.decode_request(raw)
            handler = getattr(self, f"_op_{msg['kind']}", None)
            if handler is None:
                raise UnsupportedMessage(f"kind {msg['kind']!r} not served by this node")
            payload = handler(msg["payload"])
            self._after_handle(msg["kind"])
            return protocol.ok_response(msg["request_id"], payload)
        except Exception as exc:
            return protocol.response_for_error(request_id, exc)

    def handle_line(self, line: str) -> str:
        try:
            msg = protocol.decode_request_line(line)
        except Exception as exc:
            request_id = None
            try:
                obj = json.loads(line)
                if isinstance(obj, dict):
                    request_id = obj.get("request_id")
            except (json.JSONDecodeError, TypeError):
                pass
            return protocol.encode(protocol.response_for_error(request_id, exc))
        return protocol.encode(self.handle(msg))

    def _after_handle(self, kind: str) -> None:
        pass


class CoreNode(_NodeBase):
    """Serves the knowledge map core: catalog structure, coherence flows,
    and retrieval fan-out.

    ``client_factory(address)`` builds the site clients used for fan-out and
    verification. With ``data_dir`` set, the catalog document and the site
    registry are persisted there after every mutating request.
    """

    MUTATING_KINDS = frozenset({
        "AddDomain", "MoveMapping", "RegisterSite", "AddKnowledge",
        "RemoveKnowledge", "PropagateUpdate", "Reclassify",
    })

    def __init__(self, client_factory, max_depth: int | None = None,
                 data_dir: str | None = None, clock=time.time,
                 retrieve_timeout: float = retrieval.DEFAULT_TARGET_TIMEOUT):
        self.data_dir = data_dir
        self.retrieve_timeout = retrieve_timeout
        catalog = None
        if data_dir and os.path.exists(os.path.join(data_dir, "catalog.json")):
            catalog = DomainCatalog.load(os.path.join(data_dir, "catalog.json"))
        if catalog is None:
            catalog = DomainCatalog(max_depth=max_depth or 6)
        elif max_depth is not None and catalog.max_depth != max_depth:
            catalog.max_depth = max_depth
        self.catalog = catalog
        self.manager = CoherenceManager(catalog, client_factory, clock=clock)
        if data_dir:
            self._load_sites()

    # -- persistence ---------------------------------------------------------

    def _load_sites(self) -> None:
        path = os.path.join(self.data_dir, "sites.json")
        if not os.path.exists(path):
            return
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        self.manager.restore_sites(
            SiteRegistration(s["site_id"], s["address"], s["registered_at"])
            for s in doc.get("sites", []))

    def flush(self) -> None:
        if not self.data_dir:
            return
        self.catalog.save(os.path.join(self.data_dir, "catalog.json"))
        sites = [{"site_id": s.site_id, "address": s.address, "registered_at": s.registered_at}
                 for s in self.manager.sites()]
        atomic_write_text(os.path.join(self.data_dir, "sites.json"),
                          canonical_json({"sites": sites}))

    def _after_handle(self, kind: str) -> None:
        if kind in self.MUTATING_KINDS:
            self.flush()

    # -- handlers ----------------------------------------------------------------

    def _op_Navigate(self, payload: dict) -> dict:
        return retrieval.navigate(self.catalog, _field(payload, "path", [])).to_dict()

    def _op_PlanRetrieval(self, payload: dict) -> dict:
        return {"candidates": retrieval.plan_retrieval(self.catalog, _field(payload, "paths"))}

    def _op_Retrieve(self, payload: dict) -> dict:
        targets = [(t["site_id"], t["knowledge_id"]) for t in _field(payload, "targets")]
        request = retrieval.RetrievalRequest(targets, _field(payload, "keywords", []))
        result = retrieval.retrieve(request, self.manager.site_client,
                                    timeout=self.retrieve_timeout)
        return result.to_dict()

    def _op_AddDomain(self, payload: dict) -> dict:
        path = self.catalog.add_domain(_field(payload, "parent", []), _field(payload, "name"))
        return {"path": list(path)}

    def _op_MoveMapping(self, payload: dict) -> dict:
        self.catalog.move_mapping(_field(payload, "from"), _field(payload, "to"),
                                  _field(payload, "site_id"), _field(payload, "knowledge_id"))
        return {}

    def _op_RegisterSite(self, payload: dict) -> dict:
        self.manager.register_site(_field(payload, "site_id"), _field(payload, "address"))
        return {}

    def _op_AddKnowledge(self, payload: dict) -> dict:
        path = self.manager.add_knowledge(
            _field(payload, "site_id"), _field(payload, "knowledge_id"),
            _field(payload, "elements"), _field(payload, "properties"),
            _field(payload, "description", ""), _field(payload, "domain_path"),
            create_domain_if_missing=bool(_field(payload, "create_domain_if_missing", False)))
        return {"path": list(path)}

    def _op_RemoveKnowledge(self, payload: dict) -> dict:
        self.manager.remove_knowledge(_field(payload, "site_id"),
                                      _field(payload, "knowledge_id"))
        return {}

    def _op_PropagateUpdate(self, payload: dict) -> dict:
        updated = self.manager.propagate_update(_field(payload, "site_id"),
                                                _field(payload, "knowledge_id"))
        return {"updated": updated}

    def _op_Reclassify(self, payload: dict) -> dict:
        self.manager.reclassify_knowledge(
            _field(payload, "site_id"), _field(payload, "knowledge_id"),
            _field(payload, "from"), _field(payload, "to"))
        return {}

    def _op_VerifyCoherence(self, payload: dict) -> dict:
        return self.manager.verify_coherence().to_dict()

    def _op_EditMapping(self, payload: dict) -> dict:
        self.manager.reject_core_edit(
            normalize_path(_field(payload, "path", [])), _field(payload, "site_id", ""),
            _field(payload, "knowledge_id", ""), _field(payload, "fields", {}))
        return {}


class SiteNode(_NodeBase):
    """Serves one site's local knowledge map.

    When ``core_sender`` is wired (``send(kind, payload) -> payload`` against
    the core), local updates propagate their new metadata synchronously.
    Query answers are bounded at ``page_limit`` elements; there is no
    streaming of larger sets.
    """

    def __init__(self, store: LocalStore, site_id: str, core_sender=None,
                 page_limit: int = 10_000):
        self.store = store
        self.site_id = site_id
        self.core_sender = core_sender
        self.page_limit = page_limit

    def _op_Query(self, payload: dict) -> dict:
        elements = self.store.query_elements(_field(payload, "knowledge_id"),
                                             _field(payload, "terms", []))
        return {"elements": [e.to_dict() for e in elements[:self.page_limit]]}

    def _op_GetElement(self, payload: dict) -> dict:
        element = self.store.get_element(_field(payload, "knowledge_id"),
                                         _field(payload, "eid"))
        return {"element": element.to_dict()}

    def _op_ListHeaders(self, payload: dict) -> dict:
        return {"headers": self.store.list_headers()}

    def _op_AddKnowledge(self, payload: dict) -> dict:
        header = self.store.ingest_knowledge(
            _field(payload, "knowledge_id"), _field(payload, "elements"),
            _field(payload, "properties"), _field(payload, "description", ""))
        return {"header": header.summary()}

    def _op_UpdateKnowledge(self, payload: dict) -> dict:
        header = self.store.update_knowledge(
            _field(payload, "knowledge_id"),
            elements=payload.get("elements"),
            properties=payload.get("properties"),
            description=payload.get("description"))
        propagated = False
        if self.core_sender is not None:
            self.core_sender("PropagateUpdate", {"site_id": self.site_id,
                                                 "knowledge_id": header.knowledge_id})
            propagated = True
        return {"header": header.summary(), "propagated": propagated}

    def _op_RemoveKnowledge(self, payload: dict) -> dict:
        self.store.remove_knowledge(_field(payload, "knowledge_id"))
        return {}
