"""Error types shared across the catalog, stores, and wire protocol.

Every error carries a stable ``code`` string so servers can put it on the
wire and clients can re-raise the matching type.
"""


class KmapError(Exception):
    code = "InternalError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# domain catalog

class ParentNotFound(KmapError):
    code = "ParentNotFound"


class DuplicateSibling(KmapError):
    code = "DuplicateSibling"


class DepthExceeded(KmapError):
    code = "DepthExceeded"


class DomainNotFound(KmapError):
    code = "DomainNotFound"


class DuplicateMapping(KmapError):
    code = "DuplicateMapping"


class MappingNotFound(KmapError):
    code = "MappingNotFound"


class EmptySelection(KmapError):
    code = "EmptySelection"


# local store

class DuplicateKnowledgeId(KmapError):
    code = "DuplicateKnowledgeId"


class MalformedElement(KmapError):
    code = "MalformedElement"


class KnowledgeNotFound(KmapError):
    code = "KnowledgeNotFound"


class ElementNotFound(KmapError):
    code = "ElementNotFound"


# coherence / topology

class DuplicateSite(KmapError):
    code = "DuplicateSite"


class SiteNotFound(KmapError):
    code = "SiteNotFound"


class SiteUnreachable(KmapError):
    code = "SiteUnreachable"


class EditProhibited(KmapError):
    code = "EditProhibited"


class AllTargetsFailed(KmapError):
    code = "AllTargetsFailed"


# wire protocol

class MalformedRequest(KmapError):
    code = "MalformedRequest"


class UnsupportedMessage(KmapError):
    code = "UnsupportedMessage"


def _registry() -> dict:
    reg = {}
    stack = [KmapError]
    while stack:
        cls = stack.pop()
        reg[cls.code] = cls
        stack.extend(cls.__subclasses__())
    return reg


_BY_CODE = _registry()


def from_code(code: str, message: str = "") -> KmapError:
    """Rebuild the typed error for a wire-level error code."""
    cls = _BY_CODE.get(code)
    if cls is None:
        err = KmapError(message or code)
        err.code = code
        return err
    return cls(message)
