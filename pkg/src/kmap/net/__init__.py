"""Wire protocol, node runtimes, transports, and the scenario harness."""

from .protocol import PROTOCOL_VERSION, KINDS  # noqa: F401
