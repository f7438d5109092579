"""HTTP/WebSocket/UDP service wrapping the session engine."""

from .app import create_app, create_default_app
from .runtime import SessionRuntime
from .udp import UdpIngest

__all__ = ["create_app", "create_default_app", "SessionRuntime", "UdpIngest"]
