"""Bivariate skewness/kurtosis glyph coloring.

A 3x3 categorical matrix tiles the (skewness, excess kurtosis) plane:
columns by skewness (purple / blue / red), rows by kurtosis with
luminance rising along the row index. Selecting a cell zooms into it
(detailed view, a nine-step single-hue ramp over the cell's sub-ranges);
selecting again restores the categorical view. Cell (1, 1) is the
normal-distribution center, and boundary values stick to the center so
sampling noise cannot flip a normal-like attribute out of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from . import palette
from .config import SK_THRESHOLDS, SKThresholds


@dataclass(frozen=True)
class SKCell:
    col: int  # skewness axis, 0..2
    row: int  # kurtosis axis, 0..2

    def __post_init__(self) -> None:
        if not (0 <= self.col <= 2 and 0 <= self.row <= 2):
            raise ValueError(f"cell indices out of range: ({self.col}, {self.row})")


class SKMode(Enum):
    CATEGORICAL = "categorical"
    DETAILED = "detailed"


@dataclass(frozen=True)
class SKMapperState:
    mode: SKMode = SKMode.CATEGORICAL
    selected_cell: SKCell | None = None
    skew_range: tuple[float, float] | None = None
    kurt_range: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.mode is SKMode.DETAILED:
            if self.selected_cell is None or self.skew_range is None or self.kurt_range is None:
                raise ValueError("detailed mode requires a cell and both ranges")
            if self.skew_range[0] > self.skew_range[1] or self.kurt_range[0] > self.kurt_range[1]:
                raise ValueError("detailed ranges must be nonempty")


def _axis_cell(value: float, half_width: float) -> int:
    if value < -half_width:
        return 0
    if value > half_width:
        return 2
    return 1


def classify_categorical(
    skew: float, kurt: float, thresholds: SKThresholds = SK_THRESHOLDS
) -> SKCell:
    """Cell for a (skewness, excess kurtosis) pair; boundaries go center."""
    if not (math.isfinite(skew) and math.isfinite(kurt)):
        raise ValueError("skewness and kurtosis must be finite")
    return SKCell(
        col=_axis_cell(skew, thresholds.half_width),
        row=_axis_cell(kurt, thresholds.half_width),
    )


def color_categorical(cell: SKCell) -> palette.RGBA:
    return palette.CATEGORICAL[cell.col][cell.row]


def _cell_interval(
    index: int, half_width: float, observed: tuple[float, float]
) -> tuple[float, float]:
    """A cell's axis interval, with unbounded edges clamped to the data."""
    lo, hi = observed
    if index == 0:
        return (min(lo, -half_width), -half_width)
    if index == 2:
        return (half_width, max(hi, half_width))
    return (-half_width, half_width)


def select_cell(
    state: SKMapperState,
    cell: SKCell,
    population: list[tuple[float, float]],
    thresholds: SKThresholds = SK_THRESHOLDS,
) -> SKMapperState:
    """Toggle between the categorical and detailed views.

    From categorical mode, zoom into the touched cell with sub-ranges
    clamped to the population's observed extent; from detailed mode any
    touch restores the categorical view.
    """
    if state.mode is SKMode.DETAILED:
        return SKMapperState()
    if not population:
        raise ValueError("population must be nonempty")
    skews = [s for s, _ in population]
    kurts = [k for _, k in population]
    return SKMapperState(
        mode=SKMode.DETAILED,
        selected_cell=cell,
        skew_range=_cell_interval(cell.col, thresholds.half_width,
                                  (min(skews), max(skews))),
        kurt_range=_cell_interval(cell.row, thresholds.half_width,
                                  (min(kurts), max(kurts))),
    )


def _third(value: float, lo: float, hi: float) -> int:
    if hi <= lo:
        return 0
    t = (value - lo) / (hi - lo)
    return min(2, int(t * 3.0))


def color_detailed(skew: float, kurt: float, state: SKMapperState) -> palette.RGBA:
    """Ramp color inside the zoomed ranges; desaturated gray outside."""
    if state.mode is not SKMode.DETAILED:
        raise ValueError("state must be in detailed mode")
    assert state.selected_cell and state.skew_range and state.kurt_range
    s_lo, s_hi = state.skew_range
    k_lo, k_hi = state.kurt_range
    if not (s_lo <= skew <= s_hi and k_lo <= kurt <= k_hi):
        return palette.OUT_OF_FOCUS
    i = _third(skew, s_lo, s_hi)
    j = _third(kurt, k_lo, k_hi)
    return palette.DETAILED[state.selected_cell.col][j * 3 + i]


def glyph_color(
    skew: float | None, kurt: float | None, state: SKMapperState
) -> palette.RGBA:
    """Color for one glyph under the current mapper state.

    Degenerate glyphs (no defined moments) always take the reserved
    neutral color, in either mode.
    """
    if skew is None or kurt is None:
        return palette.DEGENERATE_NEUTRAL
    if state.mode is SKMode.CATEGORICAL:
        return color_categorical(classify_categorical(skew, kurt))
    return color_detailed(skew, kurt, state)
