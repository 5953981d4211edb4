"""Frozen configuration records shared by the statistics and layout code.

Every tunable that affects chart output lives here so that the engine,
its tests, and any connected viewer agree on one set of constants. The
viewer receives the interaction constants through the protocol handshake.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ModalityConfig:
    """Parameters of the bin-roughness peak estimator."""

    scan_min: int = 4
    scan_max: int = 64
    uniformity_threshold: float = 0.25
    peak_floor: float = 0.10

    def scan_set(self, n: int) -> range:
        """Bin counts to scan for a sample of size n."""
        hi = min(self.scan_max, max(self.scan_min, math.ceil(math.sqrt(n))))
        return range(self.scan_min, hi + 1)


@dataclass(frozen=True)
class SKThresholds:
    """Categorical cell boundaries on skewness and excess kurtosis.

    Values inside [-half_width, half_width] map to the center column/row,
    so the normal-like cell is closed and sticky against sampling noise.
    """

    half_width: float = 0.5


@dataclass(frozen=True)
class LayoutParams:
    """Chart geometry constants, sized for a roughly 1 m virtual chart."""

    # distribution glyph chart
    bar_width: float = 0.04
    attr_pitch: float = 0.08
    z_pitch: float = 0.10
    chart_height: float = 1.0

    # temporal tracker
    gap_min: float = 0.04
    gap_scale: float = 0.20
    line_width_min: float = 0.004
    line_width_max: float = 0.024
    cube_size: float = 0.03

    # stacked bins chart
    unit_height: float = 0.00003
    inter_bin_gap: float = 0.01
    step_pitch: float = 0.12
    chrono_bar_width: float = 0.05
    alpha_min: float = 0.25
    alpha_max: float = 0.95

    handle_size: float = 0.05


@dataclass(frozen=True)
class ViewConstants:
    """Interaction constants shipped to viewers in the handshake.

    The top-down representation switch uses an enter/exit hysteresis so a
    camera hovering near the threshold does not flap between charts.
    """

    tet_enter_deg: float = 30.0
    tet_exit_deg: float = 35.0


@dataclass(frozen=True)
class Anchors:
    """Default world-space anchors (meters, y up) for freshly opened scenes."""

    chart_position: tuple[float, float, float] = (0.0, 1.2, -0.7)
    sk_panel_offset: tuple[float, float, float] = (0.9, 0.3, 0.0)
    grid_center: tuple[float, float, float] = (0.0, 1.2, -1.8)
    grid_spacing: float = 0.6
    chrono_offset_x: float = 1.2
    fiber_view_extent: float = 0.4


MODALITY = ModalityConfig()
SK_THRESHOLDS = SKThresholds()
LAYOUT = LayoutParams()
VIEW = ViewConstants()
ANCHORS = Anchors()
