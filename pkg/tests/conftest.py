import pytest

from chatminder.notify import NotifierService
from chatminder.store import EventStore


@pytest.fixture
def store_path(tmp_path):
    return tmp_path / "events.jsonl"


@pytest.fixture
def store(store_path):
    s = EventStore(store_path)
    yield s
    s.close()


def make_service(path, now=None, **kwargs):
    """Service with a controllable clock and quiet sinks."""
    kwargs.setdefault("sinks", [])
    if now is not None:
        kwargs.setdefault("now_fn", lambda: now)
    return NotifierService(EventStore(path), **kwargs)
