"""Core-node domain catalog: a bounded-depth hierarchy of named domains.

Each node carries a mapping list that locates knowledge held on sites by
(site_id, knowledge_id). Sibling lookup goes through a sorted child array
so the comparison cost per level is logarithmic in the fan-out; the
metrics object records those comparison counts (and nothing ever reads
them back to make decisions).

Thread model: one lock serializes writers; readers that walk the tree take
the same lock briefly. Mapping lists are never mutated in place, they are
replaced wholesale, so any list handed out stays frozen for its holder and
a half-applied move is never observable.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

from . import ordered, util
from .errors import (
    DepthExceeded,
    DomainNotFound,
    DuplicateMapping,
    DuplicateSibling,
    EmptySelection,
    MalformedRequest,
    MappingNotFound,
    ParentNotFound,
)

DEFAULT_MAX_DEPTH = 6

# Canonical mining-task tags; any other non-empty string is accepted as a
# custom task.
MINING_TASKS = ("association-rules", "classification", "clustering")


@dataclass(frozen=True)
class KnowledgeProperties:
    """Descriptive features of one knowledge: what was mined, how, how big."""

    data_type: str
    dimension: int
    mining_task: str
    data_size_bytes: int
    quality: float | None = None

    def __post_init__(self):
        if not isinstance(self.dimension, int) or self.dimension < 1:
            raise MalformedRequest("dimension must be an integer >= 1")
        if not isinstance(self.data_size_bytes, int) or self.data_size_bytes < 0:
            raise MalformedRequest("data_size_bytes must be a non-negative integer")
        if not self.mining_task:
            raise MalformedRequest("mining_task must be non-empty")
        if self.quality is not None and not (0.0 <= self.quality <= 1.0):
            raise MalformedRequest("quality must lie in [0, 1]")

    def to_dict(self) -> dict:
        d = {
            "data_type": self.data_type,
            "dimension": self.dimension,
            "mining_task": self.mining_task,
            "data_size_bytes": self.data_size_bytes,
        }
        if self.quality is not None:
            d["quality"] = self.quality
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KnowledgeProperties":
        try:
            return cls(
                data_type=d["data_type"],
                dimension=d["dimension"],
                mining_task=d["mining_task"],
                data_size_bytes=d["data_size_bytes"],
                quality=d.get("quality"),
            )
        except KeyError as exc:
            raise MalformedRequest(f"properties missing field {exc}") from None


@dataclass(frozen=True)
class KnowledgeMappingNode:
    """Core-side locator of one knowledge: where it lives plus its metadata.

    ``revision`` mirrors the owning site header's revision counter so the
    coherence manager can tell a stale copy from a current one.
    """

    site_id: str
    knowledge_id: str
    properties: KnowledgeProperties
    description: str
    revision: int = 0

    def key(self) -> tuple:
        return (self.site_id, self.knowledge_id)

    def to_dict(self) -> dict:
        return {
            "site_id": self.site_id,
            "knowledge_id": self.knowledge_id,
            "properties": self.properties.to_dict(),
            "description": self.description,
            "revision": self.revision,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KnowledgeMappingNode":
        return cls(
            site_id=d["site_id"],
            knowledge_id=d["knowledge_id"],
            properties=KnowledgeProperties.from_dict(d["properties"]),
            description=d["description"],
            revision=d.get("revision", 0),
        )


@dataclass
class DomainSummary:
    name: str
    children: list
    mapping_count: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "children": list(self.children),
            "mapping_count": self.mapping_count,
        }


@dataclass
class CatalogMetrics:
    """Observational counters; operations never consult them.

    Event counters accumulate; gauges reflect the latest known value.
    """

    domain_lookups: int = 0
    domain_lookup_comparisons: int = 0
    last_lookup_comparisons: int = 0
    mapping_inserts: int = 0
    mapping_insert_comparisons: int = 0
    term_lookups: int = 0
    term_lookup_comparisons: int = 0
    top_level_domains: int = 0
    max_fanout: int = 0
    header_count: int = 0
    last_query_term_count: int = 0

    def record_lookup(self, comparisons: int) -> None:
        self.domain_lookups += 1
        self.domain_lookup_comparisons += comparisons
        self.last_lookup_comparisons = comparisons

    def record_mapping_insert(self, comparisons: int) -> None:
        self.mapping_inserts += 1
        self.mapping_insert_comparisons += comparisons

    def record_term_lookup(self, comparisons: int) -> None:
        self.term_lookups += 1
        self.term_lookup_comparisons += comparisons

    def mean_lookup_comparisons(self) -> float:
        return self.domain_lookup_comparisons / self.domain_lookups if self.domain_lookups else 0.0

    def mean_term_comparisons(self) -> float:
        return self.term_lookup_comparisons / self.term_lookups if self.term_lookups else 0.0

    def reset_counters(self) -> None:
        self.domain_lookups = 0
        self.domain_lookup_comparisons = 0
        self.last_lookup_comparisons = 0
        self.mapping_inserts = 0
        self.mapping_insert_comparisons = 0
        self.term_lookups = 0
        self.term_lookup_comparisons = 0


class DomainNode:
    """One concept-map node. Children stay sorted by name; names are unique."""

    __slots__ = ("name", "_child_names", "_child_nodes", "mappings")

    def __init__(self, name: str):
        self.name = name
        self._child_names: list[str] = []
        self._child_nodes: list[DomainNode] = []
        self.mappings: list[KnowledgeMappingNode] = []

    def child_names(self) -> list[str]:
        return list(self._child_names)

    def child_count(self) -> int:
        return len(self._child_names)

    def find_child(self, name: str):
        """Counted ordered lookup. Returns (node_or_None, comparisons)."""
        pos, found, comparisons = ordered.locate(self._child_names, name)
        return (self._child_nodes[pos] if found else None), comparisons

    def insert_child(self, node: "DomainNode") -> int:
        """Insert keeping order; returns comparisons. Caller checks duplicates."""
        pos, found, comparisons = ordered.locate(self._child_names, node.name)
        if found:
            raise DuplicateSibling(node.name)
        self._child_names.insert(pos, node.name)
        self._child_nodes.insert(pos, node)
        return comparisons

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "children": [c.to_dict() for c in self._child_nodes],
            "mappings": [m.to_dict() for m in self.mappings],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DomainNode":
        node = cls(d["name"])
        node.mappings = [KnowledgeMappingNode.from_dict(m) for m in d.get("mappings", [])]
        for child in d.get("children", []):
            node.insert_child(cls.from_dict(child))
        return node


def normalize_name(name: str) -> str:
    """Case-fold and trim a domain name; empty names are rejected."""
    if not isinstance(name, str):
        raise MalformedRequest("domain name must be a string")
    folded = name.strip().casefold()
    if not folded:
        raise MalformedRequest("domain name must be non-empty")
    return folded


def normalize_path(path) -> tuple:
    """Normalize a path given as an iterable of segment names."""
    if path is None:
        return ()
    if isinstance(path, str):
        raise MalformedRequest("domain path must be a sequence of names, not a string")
    return tuple(normalize_name(seg) for seg in path)


class DomainCatalog:
    """The knowledge map held at the core: domain tree plus mapping lists."""

    def __init__(self, max_depth: int = DEFAULT_MAX_DEPTH, metrics: CatalogMetrics | None = None):
        if max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        self.max_depth = max_depth
        self.metrics = metrics or CatalogMetrics()
        self._root = DomainNode("")
        self._lock = threading.RLock()

    # -- traversal ---------------------------------------------------------

    def _walk(self, path: tuple) -> tuple:
        """Resolve a normalized path. Returns (node, comparisons)."""
        node = self._root
        comparisons = 0
        for segment in path:
            node, c = node.find_child(segment)
            comparisons += c
            if node is None:
                raise DomainNotFound("/".join(path))
        return node, comparisons

    def domain_exists(self, path) -> bool:
        path = normalize_path(path)
        with self._lock:
            try:
                self._walk(path)
            except DomainNotFound:
                return False
        return True

    # -- domain structure ---------------------------------------------------

    def add_domain(self, parent, name: str) -> tuple:
        parent_path = normalize_path(parent)
        child = normalize_name(name)
        if len(parent_path) + 1 > self.max_depth:
            raise DepthExceeded(f"depth limit {self.max_depth}")
        with self._lock:
            try:
                parent_node, _ = self._walk(parent_path)
            except DomainNotFound:
                raise ParentNotFound("/".join(parent_path)) from None
            existing, _ = parent_node.find_child(child)
            if existing is not None:
                raise DuplicateSibling(child)
            parent_node.insert_child(DomainNode(child))
            if not parent_path:
                self.metrics.top_level_domains = self._root.child_count()
            self.metrics.max_fanout = max(self.metrics.max_fanout, parent_node.child_count())
        return parent_path + (child,)

    def lookup_domain(self, path) -> DomainSummary:
        path = normalize_path(path)
        with self._lock:
            node, comparisons = self._walk(path)
            self.metrics.record_lookup(comparisons)
            return DomainSummary(node.name, node.child_names(), len(node.mappings))

    # -- mapping lists -------------------------------------------------------

    def attach_mapping(self, path, node: KnowledgeMappingNode) -> None:
        path = normalize_path(path)
        with self._lock:
            domain, walk_cmp = self._walk(path)
            scan = 0
            for existing in domain.mappings:
                scan += 1
                if existing.key() == node.key():
                    raise DuplicateMapping(f"{node.site_id}/{node.knowledge_id}")
            domain.mappings = domain.mappings + [node]
            self.metrics.record_mapping_insert(walk_cmp + scan + 1)

    def detach_mapping(self, path, site_id: str, knowledge_id: str) -> None:
        path = normalize_path(path)
        key = (site_id, knowledge_id)
        with self._lock:
            domain, _ = self._walk(path)
            remaining = [m for m in domain.mappings if m.key() != key]
            if len(remaining) == len(domain.mappings):
                raise MappingNotFound(f"{site_id}/{knowledge_id}")
            domain.mappings = remaining

    def list_mappings(self, path) -> list:
        path = normalize_path(path)
        with self._lock:
            domain, _ = self._walk(path)
            return domain.mappings

    def intersect_mappings(self, paths) -> list:
        if not paths:
            raise EmptySelection("at least one domain path required")
        norm = [normalize_path(p) for p in paths]
        with self._lock:
            lists = [self._walk(p)[0].mappings for p in norm]
        key_sets = [frozenset(m.key() for m in lst) for lst in lists[1:]]
        result, seen = [], set()
        for mapping in lists[0]:
            k = mapping.key()
            if k in seen:
                continue
            if all(k in ks for ks in key_sets):
                seen.add(k)
                result.append(mapping)
        return result

    def move_mapping(self, from_path, to_path, site_id: str, knowledge_id: str) -> None:
        """Relocate one occurrence; attaches at the destination before it
        detaches from the source, so the key is never absent from both."""
        from_path = normalize_path(from_path)
        to_path = normalize_path(to_path)
        key = (site_id, knowledge_id)
        with self._lock:
            src, _ = self._walk(from_path)
            dst, _ = self._walk(to_path)
            moving = next((m for m in src.mappings if m.key() == key), None)
            if moving is None:
                raise MappingNotFound(f"{site_id}/{knowledge_id}")
            if src is not dst and any(m.key() == key for m in dst.mappings):
                raise DuplicateMapping(f"{site_id}/{knowledge_id}")
            if src is dst:
                return
            dst.mappings = dst.mappings + [moving]
            src.mappings = [m for m in src.mappings if m.key() != key]

    # -- coherence-facing helpers (the local -> core update path) -----------

    def iter_mappings(self) -> list:
        """All (path, mapping) pairs, preorder, insertion order per node."""
        out = []
        with self._lock:
            stack = [((), self._root)]
            while stack:
                path, node = stack.pop()
                for m in node.mappings:
                    out.append((path, m))
                for name, child in zip(reversed(node._child_names), reversed(node._child_nodes)):
                    stack.append((path + (name,), child))
        return out

    def update_mappings_for_key(self, site_id: str, knowledge_id: str,
                                properties: KnowledgeProperties, description: str,
                                revision: int) -> int:
        """Replace every mapping record for the key with fresh metadata.

        Records already at ``revision`` are left alone. Each record is
        swapped as one object, so a reader holds either the old or the new
        record, never a blend.
        """
        key = (site_id, knowledge_id)
        updated = 0
        with self._lock:
            stack = [self._root]
            while stack:
                node = stack.pop()
                if any(m.key() == key and m.revision != revision for m in node.mappings):
                    node.mappings = [
                        KnowledgeMappingNode(site_id, knowledge_id, properties, description, revision)
                        if m.key() == key else m
                        for m in node.mappings
                    ]
                    updated += 1
                stack.extend(node._child_nodes)
        return updated

    def detach_mapping_everywhere(self, site_id: str, knowledge_id: str) -> int:
        key = (site_id, knowledge_id)
        removed = 0
        with self._lock:
            stack = [self._root]
            while stack:
                node = stack.pop()
                if any(m.key() == key for m in node.mappings):
                    node.mappings = [m for m in node.mappings if m.key() != key]
                    removed += 1
                stack.extend(node._child_nodes)
        return removed

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        with self._lock:
            return {
                "max_depth": self.max_depth,
                "roots": [c.to_dict() for c in self._root._child_nodes],
            }

    @classmethod
    def from_dict(cls, d: dict) -> "DomainCatalog":
        catalog = cls(max_depth=d.get("max_depth", DEFAULT_MAX_DEPTH))
        for root in d.get("roots", []):
            catalog._root.insert_child(DomainNode.from_dict(root))
        catalog.metrics.top_level_domains = catalog._root.child_count()
        return catalog

    def save(self, path: str) -> None:
        util.atomic_write_text(path, util.canonical_json(self.to_dict()))

    @classmethod
    def load(cls, path: str) -> "DomainCatalog":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def state_hash(self) -> str:
        return util.state_hash(self.to_dict())
