"""Recording service: durable session storage and the HTTP API."""

from swallowmon.service.store import SessionRecord, SessionStore

__all__ = ["SessionRecord", "SessionStore"]
