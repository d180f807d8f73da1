"""
Shared pytest fixtures and progressive test levels for cavity_gate.

Levels follow TEST_LEVEL (default P1_BASIC):
    P1_BASIC          closed-form numbers and small propagations (seconds)
    P2_INTERMEDIATE   property suites on small spaces
    P3_COMPREHENSIVE  full gate-time propagation of the N=3 reference set (minutes)

Mark a test with ``@pytest.mark.level(2)`` or ``@pytest.mark.level(3)``;
unmarked tests are level 1.

Usage:
    TEST_LEVEL=P2_INTERMEDIATE pytest tests/
    TEST_LEVEL=P3_COMPREHENSIVE pytest tests/ -n 8
"""

import os
from enum import IntEnum

import pytest

from models.cavity_gate.presets import paper_n3_config, paper_n4_config, ring_config


class TestLevel(IntEnum):
    P1_BASIC = 1
    P2_INTERMEDIATE = 2
    P3_COMPREHENSIVE = 3


def selected_level() -> TestLevel:
    level_str = os.environ.get("TEST_LEVEL", "P1_BASIC")
    try:
        return TestLevel[level_str.upper()]
    except KeyError:
        return TestLevel.P1_BASIC


def pytest_configure(config):
    config.addinivalue_line("markers", "level(n): progressive test level (1-3)")


def pytest_collection_modifyitems(config, items):
    current = selected_level()
    for item in items:
        marker = item.get_closest_marker("level")
        needed = marker.args[0] if marker else 1
        if needed > current:
            item.add_marker(pytest.mark.skip(
                reason=f"needs TEST_LEVEL ≥ {TestLevel(needed).name} (running {current.name})"
            ))


@pytest.fixture(scope="session")
def cfg_n3():
    return paper_n3_config()


@pytest.fixture(scope="session")
def cfg_n4():
    return paper_n4_config()


@pytest.fixture(scope="session")
def cfg_n2_weak():
    """Two sites, weak drives, one photon per mode: small and close to the dispersive limit."""
    return ring_config(2, (18.0,), rabi=0.2, n_max=1)
