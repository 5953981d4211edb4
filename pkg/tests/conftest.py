from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from marv.ingest import (
    Attribute,
    Dataset,
    StudySeries,
    demo_spec,
    generate_synthetic,
)


def make_series(
    columns: dict[str, list[list[float]]],
    labels: list[str] | None = None,
    loads: list[float] | None = None,
    units: dict[str, str] | None = None,
    name: str = "test-study",
) -> StudySeries:
    """Series from explicit per-attribute, per-step value lists."""
    names = list(columns)
    steps = len(next(iter(columns.values())))
    units = units or {}
    attributes = tuple(Attribute(n, units.get(n, "")) for n in names)
    datasets = []
    for t in range(steps):
        values = np.column_stack([
            np.asarray(columns[n][t], dtype=np.float64) for n in names
        ])
        datasets.append(Dataset(
            label=labels[t] if labels else f"step{t}",
            load_newtons=loads[t] if loads else float(t),
            attributes=attributes,
            values=values,
        ))
    return StudySeries(name=name, time_steps=tuple(datasets))


def random_series(
    rng: np.random.Generator,
    steps: int = 3,
    attrs: int = 4,
    min_records: int = 20,
    max_records: int = 200,
) -> StudySeries:
    """Random study with varying record counts per step."""
    names = [f"A{a}" for a in range(attrs)]
    columns: dict[str, list[list[float]]] = {n: [] for n in names}
    for _ in range(steps):
        count = int(rng.integers(min_records, max_records + 1))
        for a, n in enumerate(names):
            center = float(rng.uniform(-5, 5))
            spread = float(rng.uniform(0.5, 3.0))
            columns[n].append(list(rng.normal(center, spread, count)))
    return make_series(columns)


@pytest.fixture
def small_study():
    """3-step, 9-attribute fiber-like study with its geometry binding."""
    spec, binding = demo_spec(steps=3, records=400)
    return generate_synthetic(spec, seed=7), binding


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
