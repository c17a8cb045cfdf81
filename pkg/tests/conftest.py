import socket
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


class NetworkForbidden(AssertionError):
    pass


@pytest.fixture
def no_network(monkeypatch):
    """Arms a guard that fails the test on any socket connection attempt."""

    def blocked(*args, **kwargs):
        raise NetworkForbidden("network syscall attempted in offline test")

    monkeypatch.setattr(socket.socket, "connect", blocked)
    monkeypatch.setattr(socket, "create_connection", blocked)
    yield


@pytest.fixture
def seed_taxonomy():
    from skillscope.taxonomy import seed_taxonomy as load

    return load()
