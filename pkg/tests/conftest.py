"""Shared fixtures plus the acceptance-criteria summary hook."""

from decimal import Decimal

import numpy as np
import pytest

from wtnrank import MoneyMatrix
from wtnrank.testkit import SyntheticSpec, synthetic_money, synthetic_registry


@pytest.fixture
def small_money():
    """The reference random fixture used across the oracle suites."""
    return synthetic_money(SyntheticSpec(seed=1, n_countries=5, n_products=2))


@pytest.fixture
def symmetric_money():
    """Two countries trading identical values both ways in every product."""
    registry = synthetic_registry(2)
    entries = {}
    for p in range(2):
        value = Decimal(100 + 10 * p)
        entries[(p, 0, 1)] = value
        entries[(p, 1, 0)] = value
    return MoneyMatrix(registry, 2018, entries, 2)


def money_from_dense(dense: np.ndarray, year: int = 2018) -> MoneyMatrix:
    """Dense (n_products, n_c, n_c) array -> MoneyMatrix with C-coded registry."""
    dense = np.asarray(dense, dtype=float)
    registry = synthetic_registry(dense.shape[1])
    return MoneyMatrix.from_dense(dense, registry, year)


def pytest_configure(config):
    config._criterion_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
