"""Shared fixtures and the acceptance summary section."""

from __future__ import annotations

from pathlib import Path

import pytest

from kgcollab import (
    ScriptedBackend,
    load_dataset,
    load_schema,
    load_team_config,
)

DATA_DIR = Path(__file__).parent / "data"

BORDER_TEXT = (
    "Six Palestinian police officers were allowed to return to the "
    "Palestinian section of the border crossing, which had been taken over "
    "by Israeli troops shortly after the start of the uprising."
)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def border_text() -> str:
    return BORDER_TEXT


@pytest.fixture(scope="session")
def ner_schema():
    return load_schema(DATA_DIR / "schema_ner.json")


@pytest.fixture(scope="session")
def re_schema():
    return load_schema(DATA_DIR / "schema_re.json")


@pytest.fixture(scope="session")
def ee_schema():
    return load_schema(DATA_DIR / "schema_ee.json")


@pytest.fixture(scope="session")
def team():
    return load_team_config(DATA_DIR / "team_scripted.json")


@pytest.fixture()
def echo_backend():
    return ScriptedBackend.from_file(DATA_DIR / "echo_script.json")


@pytest.fixture()
def border_backend():
    return ScriptedBackend.from_file(DATA_DIR / "border_crossing_script.json")


@pytest.fixture(scope="session")
def corpus():
    return load_dataset(DATA_DIR / "corpus20.jsonl")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL/SKIP line per acceptance test at the end of the run."""
    outcomes: dict[str, str] = {}
    for status in ("failed", "error", "skipped", "passed"):
        for report in terminalreporter.stats.get(status, ()):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid:
                outcomes.setdefault(nodeid, status)
    if not outcomes:
        return
    labels = {"passed": "PASS", "failed": "FAIL", "error": "FAIL", "skipped": "SKIP"}
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(outcomes):
        terminalreporter.write_line(
            f"{labels[outcomes[nodeid]]}  {nodeid.split('::')[-1]}"
        )
