"""Shared helpers for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

# Allow `import oracles` (the reference implementations) from any test.
sys.path.insert(0, str(Path(__file__).parent))

from teflow.panel import Panel


def daily_dates(start: str, n: int) -> np.ndarray:
    return np.datetime64(start, "D") + np.arange(n)


def make_panel(values, names=None, start="2020-01-01", meta=None) -> Panel:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if names is None:
        names = [f"c{i}" for i in range(values.shape[1])]
    return Panel(daily_dates(start, len(values)), list(names), values,
                 meta=dict(meta or {}))


@pytest.fixture
def tiny_panel() -> Panel:
    rng = np.random.default_rng(7)
    return make_panel(rng.normal(size=(40, 3)), names=["a", "b", "c"])
