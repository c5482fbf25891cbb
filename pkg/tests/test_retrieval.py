import random
import time

import pytest

from helpers import (
    CYCLONE_PATH,
    EXAMPLE_KID,
    EXAMPLE_SITE,
    build_tree,
    example_mapping_node,
    hurricane_elements,
    make_props,
    random_catalog,
)
from kmap.catalog import DomainCatalog, KnowledgeMappingNode
from kmap.errors import AllTargetsFailed, DomainNotFound, MalformedRequest, SiteNotFound
from kmap.retrieval import (
    STATUS_MISSING,
    STATUS_OK,
    STATUS_UNREACHABLE,
    RetrievalRequest,
    navigate,
    plan_retrieval,
    retrieve,
)
from kmap.store import LocalStore


class DirectSiteClient:
    """In-process stand-in for a wire client; answers from a LocalStore."""

    def __init__(self, store):
        self.store = store

    def query_elements(self, knowledge_id, terms):
        return self.store.query_elements(knowledge_id, terms)


class DownSiteClient:
    def query_elements(self, knowledge_id, terms):
        raise ConnectionError("site is down")


class SlowSiteClient:
    def __init__(self, delay):
        self.delay = delay

    def query_elements(self, knowledge_id, terms):
        time.sleep(self.delay)
        return []


def make_resolver(clients: dict):
    def resolver(site_id):
        if site_id not in clients:
            raise SiteNotFound(site_id)
        return clients[site_id]
    return resolver


def isabel_site() -> LocalStore:
    store = LocalStore()
    store.ingest_knowledge(EXAMPLE_KID, hurricane_elements(),
                           make_props(data_type="numeric-interval", dimension=12,
                                      mining_task="association-rules",
                                      data_size_bytes=60 * 2**30),
                           "isabel")
    return store


class TestNavigate:
    def test_meteorology_children(self):
        catalog = DomainCatalog()
        build_tree(catalog)
        view = navigate(catalog, ["meteorology"])
        assert set(view.children) == {"weather forecasting", "storm", "climate"}

    def test_example_node_summary(self):
        catalog = DomainCatalog()
        build_tree(catalog)
        catalog.attach_mapping(CYCLONE_PATH, example_mapping_node())
        view = navigate(catalog, CYCLONE_PATH)
        (summary,) = view.mappings
        assert summary["site_id"] == EXAMPLE_SITE
        assert summary["knowledge_id"] == EXAMPLE_KID
        assert summary["properties"]["mining_task"] == "association-rules"

    def test_empty_catalog_root(self):
        view = navigate(DomainCatalog(), None)
        assert view.children == [] and view.mappings == []

    def test_missing_path(self):
        with pytest.raises(DomainNotFound):
            navigate(DomainCatalog(), ["nope"])

    def test_structure_only_no_element_contents(self):
        catalog = DomainCatalog()
        build_tree(catalog)
        catalog.attach_mapping(CYCLONE_PATH, example_mapping_node())
        payload = navigate(catalog, CYCLONE_PATH).to_dict()
        assert set(payload) == {"path", "children", "mappings"}
        for summary in payload["mappings"]:
            assert set(summary) == {"site_id", "knowledge_id", "properties",
                                    "description", "revision"}


class TestPlan:
    def test_single_path_equals_list_mappings(self):
        catalog = DomainCatalog()
        build_tree(catalog)
        catalog.attach_mapping(CYCLONE_PATH, example_mapping_node())
        plan = plan_retrieval(catalog, [CYCLONE_PATH])
        assert plan == [m.to_dict() for m in catalog.list_mappings(CYCLONE_PATH)]

    def test_disjoint_paths_empty(self):
        catalog = DomainCatalog()
        a = catalog.add_domain(None, "a")
        b = catalog.add_domain(None, "b")
        catalog.attach_mapping(a, KnowledgeMappingNode("X", "1", make_props(), ""))
        catalog.attach_mapping(b, KnowledgeMappingNode("X", "2", make_props(), ""))
        assert plan_retrieval(catalog, [a, b]) == []

    def test_matches_set_oracle(self):
        rng = random.Random(909)
        for _ in range(10):
            catalog, oracle, paths = random_catalog(rng, max_mappings=150)
            for _ in range(20):
                chosen = [rng.choice(paths) for _ in range(rng.randint(1, 3))]
                got = {(c["site_id"], c["knowledge_id"])
                       for c in plan_retrieval(catalog, chosen)}
                assert got == oracle.intersect(chosen)


class TestRetrieve:
    def test_paper_worked_example(self):
        clients = {EXAMPLE_SITE: DirectSiteClient(isabel_site())}
        request = RetrievalRequest([(EXAMPLE_SITE, EXAMPLE_KID)], ["pressure", "cloud"])
        result = retrieve(request, make_resolver(clients))
        (group,) = result.groups
        assert group.status == STATUS_OK
        assert [e.eid for e in group.elements] == [171]

    def test_two_sites_filtered_independently(self):
        store_y = LocalStore()
        store_y.ingest_knowledge("k9", [
            {"eid": 1, "content": "IF pressure drop THEN cloud tower"},
            {"eid": 2, "content": "IF heat THEN haze"},
        ], make_props(), "site y knowledge")
        clients = {
            EXAMPLE_SITE: DirectSiteClient(isabel_site()),
            "siteY": DirectSiteClient(store_y),
        }
        request = RetrievalRequest(
            [(EXAMPLE_SITE, EXAMPLE_KID), ("siteY", "k9")], ["pressure", "cloud"])
        result = retrieve(request, make_resolver(clients))
        assert len(result.groups) == 2
        by_site = {g.site_id: g for g in result.groups}
        assert [e.eid for e in by_site[EXAMPLE_SITE].elements] == [171]
        assert [e.eid for e in by_site["siteY"].elements] == [1]

    def test_groups_match_site_local_query_verbatim(self):
        store = isabel_site()
        clients = {EXAMPLE_SITE: DirectSiteClient(store)}
        request = RetrievalRequest([(EXAMPLE_SITE, EXAMPLE_KID)], ["cloud"])
        result = retrieve(request, make_resolver(clients))
        local = store.query_elements(EXAMPLE_KID, ["cloud"])
        assert [e.to_dict() for e in result.groups[0].elements] == \
            [e.to_dict() for e in local]

    def test_one_site_down_isolated(self):
        clients = {
            EXAMPLE_SITE: DirectSiteClient(isabel_site()),
            "deadsite": DownSiteClient(),
        }
        request = RetrievalRequest(
            [(EXAMPLE_SITE, EXAMPLE_KID), ("deadsite", "k")], ["cloud"])
        result = retrieve(request, make_resolver(clients))
        by_site = {g.site_id: g.status for g in result.groups}
        assert by_site[EXAMPLE_SITE] == STATUS_OK
        assert by_site["deadsite"] == STATUS_UNREACHABLE

    def test_unregistered_site_unreachable(self):
        clients = {EXAMPLE_SITE: DirectSiteClient(isabel_site())}
        request = RetrievalRequest(
            [(EXAMPLE_SITE, EXAMPLE_KID), ("ghost", "k")], [])
        result = retrieve(request, make_resolver(clients))
        assert {g.site_id: g.status for g in result.groups}["ghost"] == STATUS_UNREACHABLE

    def test_missing_knowledge_status(self):
        clients = {EXAMPLE_SITE: DirectSiteClient(isabel_site())}
        request = RetrievalRequest([(EXAMPLE_SITE, "no-such-kid")], ["cloud"])
        with pytest.raises(AllTargetsFailed) as exc_info:
            retrieve(request, make_resolver(clients))
        (group,) = exc_info.value.result.groups
        assert group.status == STATUS_MISSING

    def test_all_targets_failed(self):
        request = RetrievalRequest([("a", "1"), ("b", "2")], [])
        with pytest.raises(AllTargetsFailed):
            retrieve(request, make_resolver({}))

    def test_timeout_marks_unreachable(self):
        clients = {
            "slow": SlowSiteClient(2.0),
            EXAMPLE_SITE: DirectSiteClient(isabel_site()),
        }
        request = RetrievalRequest(
            [("slow", "k"), (EXAMPLE_SITE, EXAMPLE_KID)], [])
        result = retrieve(request, make_resolver(clients), timeout=0.2)
        statuses = {g.site_id: g.status for g in result.groups}
        assert statuses["slow"] == STATUS_UNREACHABLE
        assert statuses[EXAMPLE_SITE] == STATUS_OK

    def test_one_group_per_target_in_request_order(self):
        store = isabel_site()
        clients = {EXAMPLE_SITE: DirectSiteClient(store)}
        targets = [(EXAMPLE_SITE, EXAMPLE_KID), ("ghost", "g"), (EXAMPLE_SITE, EXAMPLE_KID)]
        result = retrieve(RetrievalRequest(targets, []), make_resolver(clients))
        assert [(g.site_id, g.knowledge_id) for g in result.groups] == targets

    def test_empty_targets_rejected(self):
        with pytest.raises(MalformedRequest):
            RetrievalRequest([], ["x"])

    def test_read_only(self):
        catalog = DomainCatalog()
        build_tree(catalog)
        catalog.attach_mapping(CYCLONE_PATH, example_mapping_node())
        store = isabel_site()
        clients = {EXAMPLE_SITE: DirectSiteClient(store)}
        before = (catalog.state_hash(), store.state_hash())
        navigate(catalog, ["meteorology"])
        plan_retrieval(catalog, [CYCLONE_PATH])
        retrieve(RetrievalRequest([(EXAMPLE_SITE, EXAMPLE_KID)], ["cloud"]),
                 make_resolver(clients))
        assert (catalog.state_hash(), store.state_hash()) == before
