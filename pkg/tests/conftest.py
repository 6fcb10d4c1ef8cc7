import itertools

import pytest

from mailgraph.classify import ClassifierConfig
from mailgraph.service import AppConfig, Engine


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One explicit pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in nodeid:
                name = nodeid.split("::", 1)[1]
                lines.append((name, outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(lines):
            terminalreporter.write_line(f"{outcome:4}  {name}")


@pytest.fixture
def make_engine(tmp_path):
    """Engine factory over a tmp data dir.

    Every engine gets its own deterministic clock so two runs over the
    same inputs produce byte-identical stores.
    """

    def factory(subdir: str = "data", accounts=(), classifier=None, **kwargs) -> Engine:
        config = AppConfig(
            data_dir=tmp_path / subdir,
            accounts=list(accounts),
            classifier=classifier or ClassifierConfig(),
            **kwargs,
        )
        counter = itertools.count(1)
        return Engine(config, clock=lambda: float(next(counter)))

    return factory
