import re

import pytest

from partialfair.functionality import ProtocolConfig, xor_functionality

_ACCEPTANCE: dict[int, list[str]] = {}
_CRITERION = re.compile(r"test_acceptance\.py::test_(\d\d)_")


@pytest.fixture
def xor4():
    return xor_functionality(4)


@pytest.fixture
def xor4_config(xor4):
    return ProtocolConfig(xor4, t=2, p=1, r=4, corrupt=frozenset({1, 2}), master_seed=11)


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m and (report.when == "call" or report.outcome != "passed"):
        _ACCEPTANCE.setdefault(int(m.group(1)), []).append(report.outcome)


def pytest_deselected(items):
    for item in items:
        m = _CRITERION.search(item.nodeid)
        if m:
            _ACCEPTANCE.setdefault(int(m.group(1)), []).append("deselected")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        outcomes = _ACCEPTANCE[k]
        ran = [o for o in outcomes if o != "deselected"]
        if not ran:
            continue
        verdict = "PASS" if all(o == "passed" for o in ran) else "FAIL"
        if len(ran) < len(outcomes):
            verdict += " (partial: some checks deselected)"
        terminalreporter.write_line(f"criterion {k}: {verdict}")
