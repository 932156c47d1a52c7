import zlib

import pytest

from bri2d.rng import stream


@pytest.fixture
def rng(request):
    """Generator keyed by the test id, so every test is reproducible and
    independent of the others."""
    return stream(20190101, zlib.crc32(request.node.nodeid.encode()))


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: full-size acceptance criteria (slow)")


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
