"""Pure layout builders: statistics in, chart geometry out.

Three charts share one vocabulary: the distribution glyph chart (bars
encoding median/IQR, colored by the skewness/kurtosis mapper), the
temporal tracker (per-attribute cube stacks whose gaps and links encode
normalized drift), and the stacked-bins chart (per-step histograms with
colored delta areas). Builders are deterministic: identical inputs give
identical layouts.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from . import palette
from .config import LAYOUT, LayoutParams
from .ingest import StudySeries
from .skmapper import SKMapperState, glyph_color
from .stats import DriftMatrix, StudyStats, histogram, normalize_value


class MddMode(enum.Enum):
    SINGLE_DATASET = "single"   # z axis = modality class
    MULTI_DATASET = "multi"     # z axis = time step


@dataclass(frozen=True)
class MddGlyph:
    attribute_index: int
    time_step: int
    z_slot: int
    center_y: float          # [0, 1], clipped with height
    height: float            # [0, 1]
    color: palette.RGBA
    width: float             # equals depth


@dataclass(frozen=True)
class AxisLabel:
    axis: str                # "x" | "y" | "z"
    slot: float
    text: str
    unit: str = ""


@dataclass(frozen=True)
class MddLayout:
    mode: MddMode
    glyphs: tuple[MddGlyph, ...]
    labels: tuple[AxisLabel, ...]


def _clip_bar(center: float, height: float) -> tuple[float, float]:
    lo = max(0.0, center - height / 2.0)
    hi = min(1.0, center + height / 2.0)
    if hi < lo:
        lo = hi = min(1.0, max(0.0, center))
    return (lo + hi) / 2.0, hi - lo


def build_mdd(
    series: StudySeries,
    stats: StudyStats,
    sk_state: SKMapperState,
    mode: MddMode,
    params: LayoutParams = LAYOUT,
) -> MddLayout:
    """Glyph per attribute (and per step in multi-dataset mode).

    x slot is the attribute index; the bar's center is the normalized
    median and its height the normalized interquartile range; color comes
    from the mapper state applied to the glyph's own (skew, kurt) pair.
    """
    if not series.time_steps:
        raise ValueError("empty series")
    steps = (
        range(len(series.time_steps)) if mode is MddMode.MULTI_DATASET else (0,)
    )
    glyphs: list[MddGlyph] = []
    for a in range(len(series.attributes)):
        for t in steps:
            st = stats.stats_for(t, a)
            span = st.norm_max - st.norm_min
            center = normalize_value(st.median, st.norm_min, st.norm_max)
            height = st.iqr / span if span > 0 else 0.0
            center, height = _clip_bar(center, height)
            z_slot = int(st.modality) if mode is MddMode.SINGLE_DATASET else t
            glyphs.append(MddGlyph(
                attribute_index=a,
                time_step=t,
                z_slot=z_slot,
                center_y=center,
                height=height,
                color=glyph_color(st.skewness, st.kurtosis_excess, sk_state),
                width=params.bar_width,
            ))
    # slot -1 carries the axis title, slots >= 0 the tick labels
    labels = [AxisLabel("x", -1.0, "Attributes")]
    labels.extend(
        AxisLabel("x", float(a), attr.name, attr.unit)
        for a, attr in enumerate(series.attributes)
    )
    labels.append(AxisLabel("y", 0.5, "Attributes Value"))
    if mode is MddMode.SINGLE_DATASET:
        labels.append(AxisLabel("z", -1.0, "Modality"))
        for cls_value, cls_name in enumerate(
            ("Uniform", "Unimodal", "Bimodal", "Multimodal")
        ):
            labels.append(AxisLabel("z", float(cls_value), cls_name))
    else:
        labels.append(AxisLabel("z", -1.0, "Datasets"))
        for t, step in enumerate(series.time_steps):
            labels.append(AxisLabel("z", float(t), step.label))
    return MddLayout(mode=mode, glyphs=tuple(glyphs), labels=tuple(labels))


@dataclass(frozen=True)
class TetLink:
    time_pair: tuple[int, int]
    drift: float
    thickness: float
    color: palette.RGBA


@dataclass(frozen=True)
class TetColumn:
    attribute_index: int
    cube_y: tuple[float, ...]     # strictly increasing with time step
    links: tuple[TetLink, ...]


@dataclass(frozen=True)
class TetLayout:
    columns: tuple[TetColumn, ...]
    labels: tuple[AxisLabel, ...]


def build_tet(
    drift: DriftMatrix,
    attribute_names: tuple[str, ...],
    params: LayoutParams = LAYOUT,
) -> TetLayout:
    """Cube stacks: gap, link thickness, and link color all encode drift.

    y(0) = 0 and y(t) grows by gap_min plus gap_scale times the normalized
    drift of the (t-1, t) pair, so unchanged attributes cluster their
    cubes while strong shifts spread them apart.
    """
    pairs, attr_count = drift.shape
    if pairs < 1:
        raise ValueError("temporal tracker needs at least 2 time steps")
    if attr_count != len(attribute_names):
        raise ValueError("attribute name count does not match drift matrix")
    columns: list[TetColumn] = []
    for a in range(attr_count):
        ys = [0.0]
        links: list[TetLink] = []
        for t in range(pairs):
            value = drift.normalized[t][a]
            ys.append(ys[-1] + params.gap_min + params.gap_scale * value)
            links.append(TetLink(
                time_pair=(t, t + 1),
                drift=value,
                thickness=params.line_width_min
                + (params.line_width_max - params.line_width_min) * value,
                color=palette.tet_ramp(value),
            ))
        columns.append(TetColumn(
            attribute_index=a, cube_y=tuple(ys), links=tuple(links)
        ))
    labels = tuple(
        AxisLabel("x", float(a), name) for a, name in enumerate(attribute_names)
    )
    return TetLayout(columns=tuple(columns), labels=labels)


class DeltaClass(enum.Enum):
    INCREASE = "increase"     # magenta
    DECREASE = "decrease"     # green
    UNCHANGED = "unchanged"   # gray


_DELTA_COLOR = {
    DeltaClass.INCREASE: palette.CHRONO_INCREASE,
    DeltaClass.DECREASE: palette.CHRONO_DECREASE,
    DeltaClass.UNCHANGED: palette.CHRONO_UNCHANGED,
}


def delta_color(cls: DeltaClass) -> palette.RGBA:
    return _DELTA_COLOR[cls]


@dataclass(frozen=True)
class BinRect:
    bin_index: int
    count: int
    x0: float
    x1: float
    y0: float
    y1: float


@dataclass(frozen=True)
class ChronoStack:
    time_step: int
    rects: tuple[BinRect, ...]


@dataclass(frozen=True)
class DeltaQuad:
    bin_index: int
    time_pair: tuple[int, int]
    delta_count: int
    delta_class: DeltaClass
    opacity: float
    corners: tuple[tuple[float, float], ...]  # (x, y) quad, left edge then right


@dataclass(frozen=True)
class ChronoLayout:
    attribute: str
    unit: str
    bin_edges: tuple[float, ...]
    stacks: tuple[ChronoStack, ...]
    quads: tuple[DeltaQuad, ...]
    bin_labels: tuple[AxisLabel, ...]    # right edge, one per bin
    step_labels: tuple[AxisLabel, ...]   # one per time step
    max_count: int


def build_chrono(
    series: StudySeries,
    attribute: str,
    bin_edges: tuple[float, ...],
    params: LayoutParams = LAYOUT,
) -> ChronoLayout:
    """Stacked per-step histograms with colored inter-step delta areas.

    Bin 0 sits at the bottom of every stack, matching the right-edge
    value-range labels; quad opacity scales with |delta| over the chart's
    maximum absolute delta so the strongest changes stand out.
    """
    attr_index = series.attribute_index(attribute)
    unit = series.attributes[attr_index].unit
    counts = [
        histogram(step.values[:, attr_index], bin_edges).counts
        for step in series.time_steps
    ]
    bins = len(bin_edges) - 1
    stacks: list[ChronoStack] = []
    tops: list[tuple[tuple[float, float], ...]] = []  # (y0, y1) per bin per step
    for t, step_counts in enumerate(counts):
        x0 = t * params.step_pitch
        x1 = x0 + params.chrono_bar_width
        y = 0.0
        rects: list[BinRect] = []
        spans: list[tuple[float, float]] = []
        for b in range(bins):
            height = step_counts[b] * params.unit_height
            rects.append(BinRect(bin_index=b, count=step_counts[b],
                                 x0=x0, x1=x1, y0=y, y1=y + height))
            spans.append((y, y + height))
            y += height + params.inter_bin_gap
        stacks.append(ChronoStack(time_step=t, rects=tuple(rects)))
        tops.append(tuple(spans))

    max_abs_delta = 0
    deltas: list[list[int]] = []
    for t in range(len(counts) - 1):
        row = [counts[t + 1][b] - counts[t][b] for b in range(bins)]
        deltas.append(row)
        max_abs_delta = max(max_abs_delta, max(abs(d) for d in row) if row else 0)

    quads: list[DeltaQuad] = []
    for t, row in enumerate(deltas):
        left = stacks[t].rects
        right = stacks[t + 1].rects
        for b, delta in enumerate(row):
            if delta > 0:
                cls = DeltaClass.INCREASE
            elif delta < 0:
                cls = DeltaClass.DECREASE
            else:
                cls = DeltaClass.UNCHANGED
            scale = abs(delta) / max_abs_delta if max_abs_delta > 0 else 0.0
            opacity = params.alpha_min + (params.alpha_max - params.alpha_min) * scale
            quads.append(DeltaQuad(
                bin_index=b,
                time_pair=(t, t + 1),
                delta_count=delta,
                delta_class=cls,
                opacity=opacity,
                corners=(
                    (left[b].x1, left[b].y0), (left[b].x1, left[b].y1),
                    (right[b].x0, right[b].y1), (right[b].x0, right[b].y0),
                ),
            ))

    last = stacks[-1].rects
    bin_labels = tuple(
        AxisLabel(
            "y",
            (last[b].y0 + last[b].y1) / 2.0,
            f"{bin_edges[b]:.2f}-{bin_edges[b + 1]:.2f}",
            unit,
        )
        for b in range(bins)
    )
    step_labels = tuple(
        AxisLabel("x", t * params.step_pitch + params.chrono_bar_width / 2.0,
                  step.label)
        for t, step in enumerate(series.time_steps)
    )
    return ChronoLayout(
        attribute=attribute,
        unit=unit,
        bin_edges=tuple(bin_edges),
        stacks=tuple(stacks),
        quads=tuple(quads),
        bin_labels=bin_labels,
        step_labels=step_labels,
        max_count=max(sum(c) for c in counts),
    )


def rank_drift(
    drift: DriftMatrix, *, min_drift: float = 0.0
) -> tuple[tuple[int, tuple[int, int], float], ...]:
    """(attribute index, time pair, normalized drift) sorted strongest first.

    Entries at or below min_drift are dropped, so an all-zero matrix ranks
    nothing; ties break stably by attribute index then time index.
    """
    entries = [
        (a, (t, t + 1), drift.normalized[t][a])
        for t in range(drift.shape[0])
        for a in range(drift.shape[1])
        if drift.normalized[t][a] > min_drift
    ]
    entries.sort(key=lambda e: (-e[2], e[0], e[1][0]))
    return tuple(entries)
