import os

from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERIA = []


def record_criterion(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}"
    _CRITERIA.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


# expensive experiment runs shared between the slow tests and the acceptance suite

import dataclasses
from pathlib import Path

import pytest

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def _run(path, **changes):
    from tv_euler.experiment import load_config, run_experiment

    cfg = load_config(CONFIG_DIR / path)
    if changes:
        cfg = dataclasses.replace(cfg, **changes)
    return cfg, run_experiment(cfg)


@pytest.fixture(scope="session")
def theta1_paper_scale():
    """Inward table at the published scale, rows T/4 .. T/32."""
    return _run("paper/theta1_table.toml", steps=(4, 8, 16, 32))


@pytest.fixture(scope="session")
def theta1_desk():
    return _run("desk/theta1_desk.toml")


@pytest.fixture(scope="session")
def theta1_T5_desk():
    return _run("desk/theta1_T5_desk.toml")


@pytest.fixture(scope="session")
def outward_desk():
    return _run("desk/outward_desk.toml")


@pytest.fixture(scope="session")
def fat_cantor_desk():
    return _run("desk/fat_cantor.toml")
