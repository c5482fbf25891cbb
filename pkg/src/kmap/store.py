"""Site-local knowledge store: headers, element tables, inverted-file indexes.

A knowledge is a set of mined elements (typically production rules). Each
knowledge is held as one immutable (header, table, index) record; updates
build a fresh record and swap it in, so a reader never sees a table newer
than the index that serves it.

On-disk layout under a data directory (all writes are temp-file + rename):

    headers.json                      all headers for the site
    knowledge/<kid>/table.jsonl       one element per line
    knowledge/<kid>/index.json        posting lists per term
"""

from __future__ import annotations

import json
import numbers
import os
import re
import shutil
import threading
import urllib.parse
from dataclasses import dataclass, field

from . import ordered, util
from .catalog import CatalogMetrics, KnowledgeProperties
from .errors import (
    DuplicateKnowledgeId,
    ElementNotFound,
    KnowledgeNotFound,
    MalformedElement,
)

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
_OPAQUE_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*://\S+$")

# Attribute names whose values must stay inside [0, 1].
_UNIT_RANGE_ATTRS = ("support", "confidence")


def is_opaque_ref(content: str) -> bool:
    """URI-like contents point at external artifacts and carry no index terms."""
    return bool(_OPAQUE_RE.match(content))


class Tokenizer:
    """Case-folds, splits on non-alphanumeric runs, drops short tokens.

    No stemming. The stopword list is empty unless configured. Query terms
    go through the same normalization as element contents.
    """

    def __init__(self, min_token_len: int = 2, stopwords=()):
        self.min_token_len = min_token_len
        self.stopwords = frozenset(w.casefold() for w in stopwords)

    def tokens(self, text: str) -> list[str]:
        return [
            t for t in _WORD_RE.findall(text.casefold())
            if len(t) >= self.min_token_len and t not in self.stopwords
        ]

    def element_terms(self, content: str) -> set[str]:
        if is_opaque_ref(content):
            return set()
        return set(self.tokens(content))


@dataclass(frozen=True)
class KnowledgeElement:
    """One mined element: a rule string (or an opaque reference) plus
    numeric attributes such as support and confidence."""

    eid: int
    content: str
    attributes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.eid, int) or isinstance(self.eid, bool) or self.eid < 1:
            raise MalformedElement(f"eid must be an integer >= 1, got {self.eid!r}")
        if not isinstance(self.content, str):
            raise MalformedElement(f"content must be a string (eid {self.eid})")
        for name, value in self.attributes.items():
            if not isinstance(value, numbers.Real) or isinstance(value, bool):
                raise MalformedElement(f"attribute {name!r} must be numeric (eid {self.eid})")
            if name in _UNIT_RANGE_ATTRS and not (0.0 <= value <= 1.0):
                raise MalformedElement(f"attribute {name!r} must lie in [0, 1] (eid {self.eid})")

    def to_dict(self) -> dict:
        return {"eid": self.eid, "content": self.content, "attributes": dict(self.attributes)}

    @classmethod
    def from_dict(cls, d: dict) -> "KnowledgeElement":
        if not isinstance(d, dict) or "eid" not in d or "content" not in d:
            raise MalformedElement(f"element requires eid and content: {d!r}")
        return cls(eid=d["eid"], content=d["content"], attributes=dict(d.get("attributes", {})))


def coerce_elements(elements) -> list[KnowledgeElement]:
    return [e if isinstance(e, KnowledgeElement) else KnowledgeElement.from_dict(e) for e in elements]


class KnowledgeTable:
    """Elements of one knowledge, sorted by eid, eids unique."""

    def __init__(self, elements):
        elems = sorted(coerce_elements(elements), key=lambda e: e.eid)
        for a, b in zip(elems, elems[1:]):
            if a.eid == b.eid:
                raise MalformedElement(f"duplicate eid {a.eid}")
        self.elements = elems
        self._by_eid = {e.eid: e for e in elems}

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def get(self, eid: int):
        return self._by_eid.get(eid)

    def eids(self) -> list[int]:
        return [e.eid for e in self.elements]


class IndexTable:
    """Inverted file: sorted vocabulary, one ascending posting list per term."""

    def __init__(self, terms: list[str], postings: list[list[int]]):
        self._terms = terms
        self._postings = postings

    @classmethod
    def build(cls, table: KnowledgeTable, tokenizer: Tokenizer) -> "IndexTable":
        """Scan the table; table order is eid order, so lists come out sorted."""
        mapping: dict[str, list[int]] = {}
        for element in table:
            for term in sorted(tokenizer.element_terms(element.content)):
                mapping.setdefault(term, []).append(element.eid)
        terms = sorted(mapping)
        return cls(terms, [mapping[t] for t in terms])

    def postings(self, term: str):
        """Counted ordered lookup. Returns (posting_list, comparisons)."""
        pos, found, comparisons = ordered.locate(self._terms, term)
        return (self._postings[pos] if found else []), comparisons

    def vocabulary(self) -> list[str]:
        return list(self._terms)

    def vocabulary_size(self) -> int:
        return len(self._terms)

    def as_postings_dict(self) -> dict:
        return {t: list(p) for t, p in zip(self._terms, self._postings)}

    def __eq__(self, other):
        return isinstance(other, IndexTable) and self.as_postings_dict() == other.as_postings_dict()

    @classmethod
    def from_postings_dict(cls, d: dict) -> "IndexTable":
        terms = sorted(d)
        return cls(terms, [sorted(int(e) for e in d[t]) for t in terms])


def intersect_sorted(lists: list[list[int]]) -> list[int]:
    """Merge-intersect ascending id lists, smallest list first."""
    if not lists:
        return []
    lists = sorted(lists, key=len)
    result = lists[0]
    for other in lists[1:]:
        if not result:
            return []
        merged = []
        i = j = 0
        while i < len(result) and j < len(other):
            a, b = result[i], other[j]
            if a == b:
                merged.append(a)
                i += 1
                j += 1
            elif a < b:
                i += 1
            else:
                j += 1
        result = merged
    return result


@dataclass(frozen=True)
class KnowledgeHeader:
    """Management record for one knowledge: metadata plus locators of its
    table and index. ``revision`` increments on every update."""

    knowledge_id: str
    properties: KnowledgeProperties
    description: str
    table_ref: str
    index_ref: str
    revision: int = 0

    def summary(self) -> dict:
        return {
            "knowledge_id": self.knowledge_id,
            "properties": self.properties.to_dict(),
            "description": self.description,
            "revision": self.revision,
        }

    def to_dict(self) -> dict:
        d = self.summary()
        d["table_ref"] = self.table_ref
        d["index_ref"] = self.index_ref
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KnowledgeHeader":
        return cls(
            knowledge_id=d["knowledge_id"],
            properties=KnowledgeProperties.from_dict(d["properties"]),
            description=d["description"],
            table_ref=d["table_ref"],
            index_ref=d["index_ref"],
            revision=d.get("revision", 0),
        )


def _kid_dir(knowledge_id: str) -> str:
    return urllib.parse.quote(knowledge_id, safe="")


class LocalStore:
    """All knowledge held at one site, optionally persisted write-through."""

    def __init__(self, data_dir: str | None = None, tokenizer: Tokenizer | None = None,
                 metrics: CatalogMetrics | None = None):
        self.data_dir = data_dir
        self.tokenizer = tokenizer or Tokenizer()
        self.metrics = metrics or CatalogMetrics()
        self._records: dict[str, tuple[KnowledgeHeader, KnowledgeTable, IndexTable]] = {}
        self._lock = threading.RLock()
        if data_dir:
            self._load()

    # -- record plumbing -----------------------------------------------------

    def _record(self, knowledge_id: str):
        record = self._records.get(knowledge_id)
        if record is None:
            raise KnowledgeNotFound(knowledge_id)
        return record

    def knowledge_ids(self) -> list[str]:
        return sorted(self._records)

    def resolve(self, locator: str):
        """Dereference a header's table_ref or index_ref to the live object."""
        for header, table, index in self._records.values():
            if locator == header.table_ref:
                return table
            if locator == header.index_ref:
                return index
        raise KnowledgeNotFound(locator)

    # -- operations ------------------------------------------------------------

    def ingest_knowledge(self, knowledge_id: str, elements, properties,
                         description: str) -> KnowledgeHeader:
        if not isinstance(properties, KnowledgeProperties):
            properties = KnowledgeProperties.from_dict(properties)
        table = KnowledgeTable(elements)
        index = IndexTable.build(table, self.tokenizer)
        rel = f"knowledge/{_kid_dir(knowledge_id)}"
        header = KnowledgeHeader(
            knowledge_id=knowledge_id,
            properties=properties,
            description=description,
            table_ref=f"{rel}/table.jsonl",
            index_ref=f"{rel}/index.json",
            revision=0,
        )
        with self._lock:
            if knowledge_id in self._records:
                raise DuplicateKnowledgeId(knowledge_id)
            self._records[knowledge_id] = (header, table, index)
            self.metrics.header_count = len(self._records)
            self._persist(knowledge_id)
        return header

    def build_index(self, knowledge_id: str) -> IndexTable:
        """Rebuild from the table scan; rebuilding an unchanged table yields
        an index equal to the stored one."""
        with self._lock:
            header, table, _ = self._record(knowledge_id)
            index = IndexTable.build(table, self.tokenizer)
            self._records[knowledge_id] = (header, table, index)
            self._persist(knowledge_id)
        return index

    def postings(self, knowledge_id: str, term: str) -> list[int]:
        _, _, index = self._record(knowledge_id)
        plist, comparisons = index.postings(term.strip().casefold())
        self.metrics.record_term_lookup(comparisons)
        return list(plist)

    def query_elements(self, knowledge_id: str, terms) -> list:
        """Conjunctive retrieval. Query terms are normalized by the
        tokenizer; a term that normalizes to nothing constrains nothing, and
        an empty term list returns the whole table."""
        _, table, index = self._record(knowledge_id)
        self.metrics.last_query_term_count = len(terms)
        conjuncts = set()
        for term in terms:
            conjuncts.update(self.tokenizer.tokens(term))
        if not conjuncts:
            return list(table.elements)
        lists = []
        for token in sorted(conjuncts):
            plist, comparisons = index.postings(token)
            self.metrics.record_term_lookup(comparisons)
            lists.append(plist)
        eids = intersect_sorted(lists)
        return [table.get(eid) for eid in eids]

    def get_element(self, knowledge_id: str, eid: int) -> KnowledgeElement:
        _, table, _ = self._record(knowledge_id)
        element = table.get(eid)
        if element is None:
            raise ElementNotFound(f"{knowledge_id}/{eid}")
        return element

    def get_header(self, knowledge_id: str) -> KnowledgeHeader:
        return self._record(knowledge_id)[0]

    def list_headers(self) -> list[dict]:
        with self._lock:
            return [self._records[kid][0].summary() for kid in sorted(self._records)]

    def update_knowledge(self, knowledge_id: str, elements=None, properties=None,
                         description: str | None = None) -> KnowledgeHeader:
        """Replace elements and/or metadata; bumps the revision counter.
        The index is rebuilt only when elements change."""
        with self._lock:
            header, table, index = self._record(knowledge_id)
            if elements is not None:
                table = KnowledgeTable(elements)
                index = IndexTable.build(table, self.tokenizer)
            if properties is not None and not isinstance(properties, KnowledgeProperties):
                properties = KnowledgeProperties.from_dict(properties)
            header = KnowledgeHeader(
                knowledge_id=knowledge_id,
                properties=properties if properties is not None else header.properties,
                description=description if description is not None else header.description,
                table_ref=header.table_ref,
                index_ref=header.index_ref,
                revision=header.revision + 1,
            )
            self._records[knowledge_id] = (header, table, index)
            self._persist(knowledge_id)
        return header

    def remove_knowledge(self, knowledge_id: str) -> None:
        with self._lock:
            self._record(knowledge_id)
            del self._records[knowledge_id]
            self.metrics.header_count = len(self._records)
            if self.data_dir:
                shutil.rmtree(os.path.join(self.data_dir, "knowledge", _kid_dir(knowledge_id)),
                              ignore_errors=True)
                self._persist_headers()

    def state_hash(self) -> str:
        with self._lock:
            return util.state_hash({
                kid: {
                    "header": header.to_dict(),
                    "elements": [e.to_dict() for e in table],
                    "postings": index.as_postings_dict(),
                }
                for kid, (header, table, index) in self._records.items()
            })

    # -- persistence -------------------------------------------------------------

    def _persist(self, knowledge_id: str) -> None:
        if not self.data_dir:
            return
        header, table, index = self._records[knowledge_id]
        base = os.path.join(self.data_dir, "knowledge", _kid_dir(knowledge_id))
        lines = "".join(util.canonical_json(e.to_dict()) + "\n" for e in table)
        util.atomic_write_text(os.path.join(base, "table.jsonl"), lines)
        util.atomic_write_text(os.path.join(base, "index.json"),
                               util.canonical_json({"postings": index.as_postings_dict()}))
        self._persist_headers()

    def _persist_headers(self) -> None:
        headers = [self._records[kid][0].to_dict() for kid in sorted(self._records)]
        util.atomic_write_text(os.path.join(self.data_dir, "headers.json"),
                               util.canonical_json({"headers": headers}))

    def _load(self) -> None:
        headers_path = os.path.join(self.data_dir, "headers.json")
        if not os.path.exists(headers_path):
            return
        with open(headers_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        for hd in doc.get("headers", []):
            header = KnowledgeHeader.from_dict(hd)
            base = os.path.join(self.data_dir, "knowledge", _kid_dir(header.knowledge_id))
            elements = []
            with open(os.path.join(base, "table.jsonl"), encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        elements.append(KnowledgeElement.from_dict(json.loads(line)))
            table = KnowledgeTable(elements)
            index_path = os.path.join(base, "index.json")
            if os.path.exists(index_path):
                with open(index_path, encoding="utf-8") as fh:
                    index = IndexTable.from_postings_dict(json.load(fh)["postings"])
            else:
                index = IndexTable.build(table, self.tokenizer)
            self._records[header.knowledge_id] = (header, table, index)
        self.metrics.header_count = len(self._records)
