"""kmap: a distributed knowledge catalog.

A core node holds a bounded-depth map of application domains whose nodes
point at knowledge held on sites; each site keeps its mined knowledge in
element tables with inverted-file indexes. Users navigate the domain map,
intersect domains to shortlist candidate knowledge, and retrieve elements
by keyword across sites.
"""

from .catalog import (  # noqa: F401
    CatalogMetrics,
    DomainCatalog,
    DomainSummary,
    KnowledgeMappingNode,
    KnowledgeProperties,
)
from .coherence import CoherenceManager, CoherenceReport, SiteRegistration  # noqa: F401
from .retrieval import (  # noqa: F401
    NavigateView,
    RetrievalRequest,
    RetrievalResult,
    navigate,
    plan_retrieval,
    retrieve,
)
from .store import (  # noqa: F401
    IndexTable,
    KnowledgeElement,
    KnowledgeHeader,
    KnowledgeTable,
    LocalStore,
    Tokenizer,
)

__version__ = "0.1.0"
