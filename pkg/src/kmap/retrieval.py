"""Navigation and cross-site retrieval.

Navigation returns structure and metadata only, never element contents;
retrieval fans out to the chosen sites concurrently and reports a status
per target instead of failing the whole request when one site is down.
All operations here are read-only against the catalog and the sites.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .catalog import DomainCatalog, normalize_path
from .errors import AllTargetsFailed, KnowledgeNotFound, MalformedRequest

STATUS_OK = "ok"
STATUS_UNREACHABLE = "site-unreachable"
STATUS_MISSING = "knowledge-missing"

DEFAULT_TARGET_TIMEOUT = 5.0


@dataclass
class RetrievalRequest:
    """Targets are (site_id, knowledge_id) pairs; keywords may be empty
    (an empty conjunction retrieves every element of each target)."""

    targets: list
    keywords: list = field(default_factory=list)

    def __post_init__(self):
        if not self.targets:
            raise MalformedRequest("retrieval request needs at least one target")
        self.targets = [(str(s), str(k)) for s, k in self.targets]
        self.keywords = [str(k) for k in self.keywords]


@dataclass
class TargetGroup:
    site_id: str
    knowledge_id: str
    status: str
    elements: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "site_id": self.site_id,
            "knowledge_id": self.knowledge_id,
            "status": self.status,
            "elements": [e.to_dict() for e in self.elements],
        }


@dataclass
class RetrievalResult:
    groups: list

    def ok_groups(self) -> list:
        return [g for g in self.groups if g.status == STATUS_OK]

    def to_dict(self) -> dict:
        return {"groups": [g.to_dict() for g in self.groups]}


@dataclass
class NavigateView:
    """What a navigating user sees at one node: children plus the node's
    mapping summaries. Metadata only."""

    path: tuple
    children: list
    mappings: list

    def to_dict(self) -> dict:
        return {
            "path": list(self.path),
            "children": list(self.children),
            "mappings": list(self.mappings),
        }


def navigate(catalog: DomainCatalog, path=None) -> NavigateView:
    norm = normalize_path(path)
    summary = catalog.lookup_domain(norm)
    mappings = [m.to_dict() for m in catalog.list_mappings(norm)] if norm else []
    return NavigateView(norm, summary.children, mappings)


def plan_retrieval(catalog: DomainCatalog, paths) -> list[dict]:
    """Candidates under one node, or the intersection across several."""
    nodes = catalog.intersect_mappings(paths)
    return [m.to_dict() for m in nodes]


def retrieve(request: RetrievalRequest, site_resolver,
             timeout: float = DEFAULT_TARGET_TIMEOUT) -> RetrievalResult:
    """Run the keyword query on every target site and group the answers.

    ``site_resolver(site_id)`` yields a client exposing
    ``query_elements(knowledge_id, keywords)``. Per-target failures become
    group statuses; only when every group fails is AllTargetsFailed raised
    (with the result attached as ``exc.result``).
    """

    def fetch(target):
        site_id, knowledge_id = target
        try:
            client = site_resolver(site_id)
            elements = client.query_elements(knowledge_id, request.keywords)
            return TargetGroup(site_id, knowledge_id, STATUS_OK, elements)
        except KnowledgeNotFound:
            return TargetGroup(site_id, knowledge_id, STATUS_MISSING)
        except Exception:
            return TargetGroup(site_id, knowledge_id, STATUS_UNREACHABLE)

    pool = ThreadPoolExecutor(max_workers=max(1, len(request.targets)))
    try:
        futures = [pool.submit(fetch, t) for t in request.targets]
        groups = []
        for target, future in zip(request.targets, futures):
            try:
                groups.append(future.result(timeout=timeout))
            except Exception:
                groups.append(TargetGroup(target[0], target[1], STATUS_UNREACHABLE))
    finally:
        pool.shutdown(wait=False)

    result = RetrievalResult(groups)
    if not result.ok_groups():
        detail = "; ".join(f"{g.site_id}/{g.knowledge_id}: {g.status}" for g in groups)
        exc = AllTargetsFailed(f"every target failed ({detail})")
        exc.result = result
        raise exc
    return result
