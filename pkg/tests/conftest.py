from __future__ import annotations

from pathlib import Path

import pytest

from sl_assure.argument import load_argument
from sl_assure.monitor import Detection, FrameRecord, GtObject

EXAMPLE_PATH = Path(__file__).resolve().parents[1] / "src" / "sl_assure" / "data" / "example_argument.json"

_acceptance_results: dict[int, tuple[str, str]] = {}


def make_frame(frame_id, n_gt, n_missed=0, *, distance=10.0, far=0, far_missed=0, cls="cone"):
    """Frame with ``n_gt`` cones at ``distance`` of which the first
    ``n_missed`` are undetected, plus ``far`` cones beyond 1 km."""
    gts, dets = [], []
    for j in range(n_gt):
        gts.append(GtObject(f"g{j}", cls, distance))
        if j >= n_missed:
            dets.append(Detection(f"g{j}", cls, 0.9))
    for j in range(far):
        gts.append(GtObject(f"far{j}", cls, 1000.0))
        if j >= far_missed:
            dets.append(Detection(f"far{j}", cls, 0.9))
    return FrameRecord(frame_id, frame_id / 10.0, tuple(gts), tuple(dets))


@pytest.fixture
def example_path() -> Path:
    return EXAMPLE_PATH


@pytest.fixture
def example_graph():
    return load_argument(EXAMPLE_PATH)


def pytest_runtest_logreport(report):
    marker = getattr(report, "_acceptance", None)
    if marker is None:
        return
    number, title = marker
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "PASS" if report.passed else "FAIL"
        if _acceptance_results.get(number, (title, "PASS"))[1] == "FAIL":
            status = "FAIL"
        _acceptance_results[number] = (title, status)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result()._acceptance = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance_results):
        title, status = _acceptance_results[number]
        terminalreporter.write_line(f"{status}  criterion {number}: {title}")
