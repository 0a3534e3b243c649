import numpy as np
import pandas as pd
import pytest

from namemd.series import MultichannelSeries


@pytest.fixture
def write_rows(tmp_path):
    """Write ``date,<names>`` CSV text lines and return the path."""

    def _write(lines, name="data.csv"):
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write


@pytest.fixture
def monthly():
    def _make(values, names=None, start="2001-01"):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        names = names or tuple(f"c{j}" for j in range(values.shape[1]))
        return MultichannelSeries(values, tuple(names), pd.Period(start, freq="M"))

    return _make


# --- acceptance summary -------------------------------------------------------------
# Tests marked ``@pytest.mark.acceptance(n, "title")`` get one PASS/FAIL line
# each at the end of the run, whatever the capture settings.

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


def pytest_runtest_setup(item):
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        item.user_properties.append(("acceptance", mark.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "acceptance" not in props:
        return
    number, title = props["acceptance"]
    detail = next((v for k, v in report.user_properties if k == "detail"), "")
    if report.when == "call" or report.outcome != "passed":
        status = "PASS" if report.outcome == "passed" else "FAIL"
        if number not in _ACCEPTANCE or status == "FAIL":
            _ACCEPTANCE[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status, detail = _ACCEPTANCE[number]
        line = f"criterion {number} [{status}] {title}"
        terminalreporter.write_line(line + (f" -- {detail}" if detail else ""))
