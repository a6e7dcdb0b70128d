import pytest

from friedelsum.potential import square_well, zero_potential


@pytest.fixture(scope="session")
def well():
    return square_well(-5.0, 1.0)


@pytest.fixture(scope="session")
def barrier():
    return square_well(5.0, 1.0)


@pytest.fixture(scope="session")
def free():
    return zero_potential()


# one summary line per acceptance criterion, from the actual test outcomes
_CRITERIA = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or report.outcome != "passed":
        entry = _CRITERIA.setdefault(props["criterion"], {"ok": True, "details": []})
        entry["ok"] &= report.outcome == "passed"
        if report.when == "call":
            entry["details"].append(f"{report.nodeid.split('::')[-1]}: {props.get('detail', '')}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda c: (int(str(c).split("-")[0]), str(c))):
        entry = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if entry['ok'] else 'FAIL'}")
        for d in entry["details"]:
            terminalreporter.write_line(f"    {d}")
