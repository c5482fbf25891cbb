"""Keeps the core catalog and the site stores telling the same story.

Knowledge metadata flows one way: sites own it, the core mirrors it.
Editing mapping metadata at the core is refused; only domain structure
(adding domains, moving mappings between them) is a core-side edit.

The add/remove flows write an intent journal before touching anything;
a flow that dies mid-way is finished or unwound by ``recover``, so the
observable outcome is always fully-applied or fully-absent. Test harnesses
inject failures through ``fault_hook``: raising ``SimulatedCrash`` there
models a crash (no inline compensation, journal survives); any other
exception is compensated inline before it propagates.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from .catalog import DomainCatalog, KnowledgeMappingNode, KnowledgeProperties, normalize_path
from .errors import (
    DomainNotFound,
    DuplicateSite,
    EditProhibited,
    KnowledgeNotFound,
    MappingNotFound,
    SiteNotFound,
)


class SimulatedCrash(Exception):
    """Raised by fault hooks to model a process crash at a step boundary."""


@dataclass(frozen=True)
class SiteRegistration:
    site_id: str
    address: str
    registered_at: float


@dataclass
class CoherenceReport:
    """Empty dangling/orphan/stale lists mean the system is coherent;
    unreachable sites could not be checked and are reported separately."""

    dangling_mappings: list = field(default_factory=list)
    orphan_headers: list = field(default_factory=list)
    stale_mappings: list = field(default_factory=list)
    unreachable_sites: list = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.dangling_mappings or self.orphan_headers or self.stale_mappings)

    def to_dict(self) -> dict:
        return {
            "dangling_mappings": [
                {"path": list(path), "site_id": s, "knowledge_id": k}
                for path, s, k in self.dangling_mappings
            ],
            "orphan_headers": [
                {"site_id": s, "knowledge_id": k} for s, k in self.orphan_headers
            ],
            "stale_mappings": [
                {"site_id": s, "knowledge_id": k} for s, k in self.stale_mappings
            ],
            "unreachable_sites": list(self.unreachable_sites),
        }


class CoherenceManager:
    """Core-side coordinator for site registration, ingest flows, metadata
    propagation, and coherence verification.

    ``client_factory(address)`` builds a site client exposing
    ``ingest_knowledge``, ``update_knowledge``, ``remove_knowledge``,
    ``list_headers`` and ``query_elements``.
    """

    def __init__(self, catalog: DomainCatalog, client_factory, clock=time.time):
        self.catalog = catalog
        self._client_factory = client_factory
        self._clock = clock
        self._sites: dict[str, SiteRegistration] = {}
        self._journal: dict[tuple, dict] = {}
        self._guard = threading.Lock()
        self._key_locks: dict[tuple, threading.RLock] = {}
        self.fault_hook = None

    # -- plumbing ------------------------------------------------------------

    def _key_lock(self, site_id: str, knowledge_id: str) -> threading.RLock:
        with self._guard:
            return self._key_locks.setdefault((site_id, knowledge_id), threading.RLock())

    def _fault(self, stage: str) -> None:
        if self.fault_hook is not None:
            self.fault_hook(stage)

    def register_site(self, site_id: str, address: str) -> None:
        with self._guard:
            if site_id in self._sites:
                raise DuplicateSite(site_id)
            self._sites[site_id] = SiteRegistration(site_id, address, self._clock())

    def sites(self) -> list[SiteRegistration]:
        with self._guard:
            return sorted(self._sites.values(), key=lambda s: s.site_id)

    def restore_sites(self, registrations) -> None:
        """Reload registrations from a persisted snapshot (node restart)."""
        with self._guard:
            for reg in registrations:
                self._sites[reg.site_id] = reg

    def site_client(self, site_id: str):
        with self._guard:
            registration = self._sites.get(site_id)
        if registration is None:
            raise SiteNotFound(site_id)
        return self._client_factory(registration.address)

    def journal_entries(self) -> list[dict]:
        with self._guard:
            return [dict(v) for v in self._journal.values()]

    # -- maintenance flows -----------------------------------------------------

    def _ensure_domain(self, path: tuple) -> None:
        for depth in range(1, len(path) + 1):
            prefix = path[:depth]
            if not self.catalog.domain_exists(prefix):
                self.catalog.add_domain(prefix[:-1], prefix[-1])

    def add_knowledge(self, site_id: str, knowledge_id: str, elements, properties,
                      description: str, domain_path, create_domain_if_missing: bool = False):
        """Ingest at the site, then attach the mapping at the core.

        Atomic end to end: any failure leaves neither the site header nor
        the core mapping behind.
        """
        if not isinstance(properties, KnowledgeProperties):
            properties = KnowledgeProperties.from_dict(properties)
        path = normalize_path(domain_path)
        client = self.site_client(site_id)
        if not create_domain_if_missing and not self.catalog.domain_exists(path):
            raise DomainNotFound("/".join(path))

        key = (site_id, knowledge_id)
        with self._key_lock(site_id, knowledge_id):
            intent = {
                "op": "add", "site_id": site_id, "knowledge_id": knowledge_id,
                "domain_path": path, "site_done": False, "core_done": False,
            }
            with self._guard:
                self._journal[key] = intent
            try:
                self._fault("add:journaled")
                header = client.ingest_knowledge(knowledge_id, elements, properties, description)
                intent["site_done"] = True
                self._fault("add:site-ingested")
                if create_domain_if_missing:
                    self._ensure_domain(path)
                revision = header["revision"] if isinstance(header, dict) else header.revision
                self.catalog.attach_mapping(path, KnowledgeMappingNode(
                    site_id, knowledge_id, properties, description, revision))
                intent["core_done"] = True
                self._fault("add:core-attached")
            except SimulatedCrash:
                raise
            except BaseException:
                self._rollback_add(intent)
                with self._guard:
                    self._journal.pop(key, None)
                raise
            with self._guard:
                self._journal.pop(key, None)
        return path

    def _rollback_add(self, intent: dict) -> None:
        site_id, knowledge_id = intent["site_id"], intent["knowledge_id"]
        if intent["core_done"]:
            try:
                self.catalog.detach_mapping(intent["domain_path"], site_id, knowledge_id)
            except (DomainNotFound, MappingNotFound):
                pass
        if intent["site_done"]:
            try:
                self.site_client(site_id).remove_knowledge(knowledge_id)
            except KnowledgeNotFound:
                pass

    def remove_knowledge(self, site_id: str, knowledge_id: str) -> None:
        """Remove at the site and detach every core mapping for the key.
        A partial remove rolls forward: once journaled, recovery completes
        it rather than resurrecting the knowledge."""
        client = self.site_client(site_id)
        key = (site_id, knowledge_id)
        with self._key_lock(site_id, knowledge_id):
            intent = {"op": "remove", "site_id": site_id, "knowledge_id": knowledge_id}
            with self._guard:
                self._journal[key] = intent
            try:
                self._fault("remove:journaled")
                removed_at_site = True
                try:
                    client.remove_knowledge(knowledge_id)
                except KnowledgeNotFound:
                    removed_at_site = False
                self._fault("remove:site-removed")
                detached = self.catalog.detach_mapping_everywhere(site_id, knowledge_id)
                self._fault("remove:core-detached")
            except SimulatedCrash:
                raise
            except BaseException:
                self._finish_remove(intent)
                with self._guard:
                    self._journal.pop(key, None)
                raise
            with self._guard:
                self._journal.pop(key, None)
            if not removed_at_site and not detached:
                raise KnowledgeNotFound(f"{site_id}/{knowledge_id}")

    def _finish_remove(self, intent: dict) -> None:
        site_id, knowledge_id = intent["site_id"], intent["knowledge_id"]
        try:
            self.site_client(site_id).remove_knowledge(knowledge_id)
        except KnowledgeNotFound:
            pass
        self.catalog.detach_mapping_everywhere(site_id, knowledge_id)

    def recover(self) -> list[tuple]:
        """Finish or unwind every journaled flow left behind by a crash."""
        with self._guard:
            pending = list(self._journal.items())
        settled = []
        for key, intent in pending:
            if intent["op"] == "add":
                self._rollback_add(intent)
            else:
                self._finish_remove(intent)
            with self._guard:
                self._journal.pop(key, None)
            settled.append(key)
        return settled

    def propagate_update(self, site_id: str, knowledge_id: str) -> int:
        """Push the site header's current metadata to every core mapping
        holding the key. Each record is swapped whole; copies already at the
        header's revision are untouched, so propagating twice equals once."""
        client = self.site_client(site_id)
        with self._key_lock(site_id, knowledge_id):
            summary = next((h for h in client.list_headers()
                            if h["knowledge_id"] == knowledge_id), None)
            if summary is None:
                raise KnowledgeNotFound(f"{site_id}/{knowledge_id}")
            return self.catalog.update_mappings_for_key(
                site_id, knowledge_id,
                KnowledgeProperties.from_dict(summary["properties"]),
                summary["description"], summary["revision"])

    def reclassify_knowledge(self, site_id: str, knowledge_id: str, from_path, to_path) -> None:
        with self._key_lock(site_id, knowledge_id):
            self.catalog.move_mapping(from_path, to_path, site_id, knowledge_id)

    def reject_core_edit(self, path, site_id: str, knowledge_id: str, fields: dict):
        """Mapping metadata is owned by the sites; the core refuses edits."""
        raise EditProhibited(
            f"mapping metadata at the core is read-only ({site_id}/{knowledge_id}); "
            "update the local knowledge map and propagate instead")

    # -- verification -------------------------------------------------------------

    def verify_coherence(self) -> CoherenceReport:
        report = CoherenceReport()
        core_mappings = self.catalog.iter_mappings()
        by_site: dict[str, list] = {}
        for path, mapping in core_mappings:
            by_site.setdefault(mapping.site_id, []).append((path, mapping))

        with self._guard:
            registered = dict(self._sites)

        site_ids = sorted(set(by_site) | set(registered))
        for site_id in site_ids:
            entries = by_site.get(site_id, [])
            if site_id not in registered:
                for path, mapping in entries:
                    report.dangling_mappings.append((path, site_id, mapping.knowledge_id))
                continue
            try:
                headers = {h["knowledge_id"]: h
                           for h in self._client_factory(registered[site_id].address).list_headers()}
            except Exception:
                report.unreachable_sites.append(site_id)
                continue
            stale_keys = set()
            mapped_kids = set()
            for path, mapping in entries:
                mapped_kids.add(mapping.knowledge_id)
                header = headers.get(mapping.knowledge_id)
                if header is None:
                    report.dangling_mappings.append((path, site_id, mapping.knowledge_id))
                elif (mapping.properties.to_dict() != header["properties"]
                      or mapping.description != header["description"]):
                    stale_keys.add(mapping.knowledge_id)
            report.stale_mappings.extend((site_id, kid) for kid in sorted(stale_keys))
            report.orphan_headers.extend(
                (site_id, kid) for kid in sorted(headers) if kid not in mapped_kids)
        return report
