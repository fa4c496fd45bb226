import numpy as np
import pytest

from conflictscore.core import Level, ObservationPanel, format_windows, yearly_window

_acceptance = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion of the build")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = report.user_properties and dict(report.user_properties).get("acceptance")
    if marker:
        _acceptance.append((marker, report.nodeid.split("::")[-1], report.outcome))


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    m = item.get_closest_marker("acceptance")
    if m:
        item.user_properties.append(("acceptance", f"{m.args[0]:>2}. {m.args[1]}"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, test, outcome in _acceptance:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}  ({test})")


def make_panel(level, rows):
    """rows: {unit: (first_month, [values...])}"""
    first = {u: m for u, (m, _) in rows.items()}
    values = {u: np.asarray(v, dtype=np.int64) for u, (_, v) in rows.items()}
    return ObservationPanel(Level(level), first, values)


@pytest.fixture
def test_windows():
    return [yearly_window(y) for y in range(2018, 2024)]


@pytest.fixture
def windows_file(tmp_path, test_windows):
    path = tmp_path / "windows.txt"
    path.write_text(format_windows(test_windows))
    return path
