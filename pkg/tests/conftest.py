import pytest

from lavgap.domain_grid import build_disk_mesh

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def mesh8():
    return build_disk_mesh(1.0, 1 / 8)


@pytest.fixture(scope="session")
def mesh16():
    return build_disk_mesh(1.0, 1 / 16)


@pytest.fixture(scope="session")
def mesh32():
    return build_disk_mesh(1.0, 1 / 32)


@pytest.fixture
def record():
    """record(k, passed, detail): one line per acceptance criterion in the summary."""
    def _rec(k, passed, detail):
        _ACCEPTANCE[k] = (bool(passed), detail)
        print(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
    return _rec


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
