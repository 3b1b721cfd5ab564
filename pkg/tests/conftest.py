import pytest

from vidcurate.scorers import serve_mock


@pytest.fixture(scope="session")
def mock_scorer():
    handle = serve_mock(port=0, seed=1234, record_requests=True)
    yield handle
    handle.stop()
