"""Model-based fiber geometry and bin-driven highlight selection.

Fibers render as analytic cylinders (two endpoints plus a radius taken
from the bound start/end/diameter columns); tessellation is a viewer
concern. Highlights never claim identity between fibers of different
time steps: segmentation re-runs per step, so all cross-step comparisons
stay at the distribution level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import Dataset, GeometryBinding, StudySeries
from .scene import Transform

Vec3 = tuple[float, float, float]


class SpatialError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class FiberCylinder:
    fiber_index: int     # row index within its time step
    start: Vec3
    end: Vec3
    radius: float


@dataclass(frozen=True)
class HighlightSet:
    """Fibers of two adjacent steps whose attribute falls in a value range.

    Roles are color roles only: earlier = red, later = yellow. Index lists
    are sorted row indices within each step; no mapping between them is
    implied.
    """

    attribute: str
    value_range: tuple[float, float]
    earlier_step: int
    later_step: int
    earlier_indices: tuple[int, ...]
    later_indices: tuple[int, ...]


def build_fibers(
    dataset: Dataset, binding: GeometryBinding
) -> tuple[FiberCylinder, ...]:
    """One cylinder per record; radius is half the diameter column."""
    cols = {name: dataset.column(name) for name in binding.fields()}
    diameters = cols[binding.diameter]
    starts = np.column_stack(
        [cols[binding.start_x], cols[binding.start_y], cols[binding.start_z]]
    )
    ends = np.column_stack(
        [cols[binding.end_x], cols[binding.end_y], cols[binding.end_z]]
    )
    bad_diameter = np.nonzero(diameters <= 0)[0]
    if bad_diameter.size:
        row = int(bad_diameter[0])
        raise SpatialError(
            f"non-positive diameter {diameters[row]} at row {row}"
        )
    coincident = np.nonzero((starts == ends).all(axis=1))[0]
    if coincident.size:
        raise SpatialError(f"coincident endpoints at row {int(coincident[0])}")
    start_rows = starts.tolist()
    end_rows = ends.tolist()
    radii = (diameters / 2.0).tolist()
    return tuple(
        FiberCylinder(fiber_index=i, start=tuple(s), end=tuple(e), radius=r)
        for i, (s, e, r) in enumerate(zip(start_rows, end_rows, radii))
    )


def select_by_range(
    series: StudySeries,
    attribute: str,
    value_range: tuple[float, float],
    earlier_step: int,
    later_step: int,
    *,
    include_upper: bool = False,
) -> HighlightSet:
    """Fibers of two adjacent steps whose value lies in [lo, hi).

    `include_upper` closes the upper edge, matching the histogram
    convention for the final bin so highlight sizes equal bin counts
    exactly. Membership is filtered per step; fiber identity across steps
    is never assumed.
    """
    if later_step != earlier_step + 1:
        raise SpatialError(
            f"steps must be adjacent, got {earlier_step} and {later_step}"
        )
    if not (0 <= earlier_step and later_step < len(series.time_steps)):
        raise SpatialError(f"step pair ({earlier_step}, {later_step}) out of range")
    series.attribute_index(attribute)  # raises KeyError for unknown names
    lo, hi = value_range

    def pick(step_index: int) -> tuple[int, ...]:
        column = series.time_steps[step_index].column(attribute)
        if include_upper:
            mask = (column >= lo) & (column <= hi)
        else:
            mask = (column >= lo) & (column < hi)
        return tuple(int(i) for i in np.nonzero(mask)[0])

    return HighlightSet(
        attribute=attribute,
        value_range=(float(lo), float(hi)),
        earlier_step=earlier_step,
        later_step=later_step,
        earlier_indices=pick(earlier_step),
        later_indices=pick(later_step),
    )


def grid_layout(count: int, spacing: float) -> tuple[Transform, ...]:
    """Row-major near-square grid of anchors, centered on the origin.

    Cell (row, col) sits at (col - (cols-1)/2, 0, row - (rows-1)/2) times
    the spacing; order follows time-step order.
    """
    if count < 1:
        raise ValueError("need at least one dataset")
    cols = math.ceil(math.sqrt(count))
    rows = math.ceil(count / cols)
    anchors = []
    for i in range(count):
        r, c = divmod(i, cols)
        anchors.append(Transform(position=(
            (c - (cols - 1) / 2.0) * spacing,
            0.0,
            (r - (rows - 1) / 2.0) * spacing,
        )))
    return tuple(anchors)
