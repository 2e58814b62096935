import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vfog.config import ExperimentConfig  # noqa: E402
from vfog.simcore import Kernel, RngStreams  # noqa: E402
from vfog.world import World  # noqa: E402


def small_config(**overrides) -> ExperimentConfig:
    """Default config with dotted overrides; a ``run.training_episodes`` override applies to every learner."""
    if "run.training_episodes" in overrides:
        for name in ("q_learning", "dqn", "actor_critic"):
            overrides.setdefault(f"policies.{name}.training_episodes", -1)
    return ExperimentConfig().replace(**overrides)


def make_world(seed: int = 0, horizon: float = float("inf"), **overrides):
    cfg = small_config(**overrides)
    kernel = Kernel(horizon)
    return World(cfg, kernel, RngStreams(seed)), kernel


@pytest.fixture
def world():
    w, _ = make_world()
    return w


# -- acceptance reporting ---------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and report.passed):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "tests": 0})
    if report.when == "call":
        entry["tests"] += 1
    if report.failed or (report.when == "call" and report.skipped):
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["passed"] and e["tests"] else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {number:2d}: {e['title']}")
