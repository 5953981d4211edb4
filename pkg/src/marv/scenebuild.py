"""Layouts and fibers to scene nodes, with pick metadata on everything
a viewer can touch.

Chart roots are gray handle cubes; dragging a handle moves the whole
chart because the chart content hangs off it as children. Node ids are
zero-padded so the canonical by-id ordering follows build order.
"""
from __future__ import annotations

from . import palette
from .charts import ChronoLayout, MddLayout, TetLayout, delta_color
from .config import ANCHORS, LAYOUT, Anchors, LayoutParams
from .ingest import StudySeries
from .skmapper import SKMapperState, SKMode
from .spatial import FiberCylinder
from .scene import (
    NodeKind,
    PickInfo,
    PickSemantic,
    SceneNode,
    Transform,
)

Vec3 = tuple[float, float, float]


def _label(node_id: str, text: str, unit: str, position: Vec3) -> SceneNode:
    return SceneNode(
        id=node_id,
        kind=NodeKind.LABEL,
        transform=Transform(position=position),
        color=palette.LABEL_COLOR,
        text=text,
        unit=unit,
    )


def chart_root(chart_id: str, anchor: Transform,
               children: tuple[SceneNode, ...],
               params: LayoutParams = LAYOUT) -> SceneNode:
    """The gray handle cube every chart hangs off."""
    return SceneNode(
        id=f"chart/{chart_id}",
        kind=NodeKind.HANDLE,
        transform=anchor,
        color=palette.HANDLE_GRAY,
        pick=PickInfo.make(PickSemantic.CHART_HANDLE, chartId=chart_id),
        children=children,
        width=params.handle_size,
    )


def sk_panel_nodes(
    chart_id: str, state: SKMapperState, params: LayoutParams = LAYOUT,
    anchors: Anchors = ANCHORS,
) -> tuple[SceneNode, ...]:
    """The 3x3 mapper panel; cells are pickable quads showing the active
    color space (categorical colors, or the zoom ramp while detailed)."""
    ox, oy, oz = anchors.sk_panel_offset
    cell = 0.1
    gap = 0.012
    nodes = []
    for col in range(3):
        for row in range(3):
            if state.mode is SKMode.DETAILED and state.selected_cell is not None:
                color = palette.DETAILED[state.selected_cell.col][row * 3 + col]
            else:
                color = palette.CATEGORICAL[col][row]
            x = ox + col * (cell + gap)
            y = oy + row * (cell + gap)
            nodes.append(SceneNode(
                id=f"chart/{chart_id}/sk/{col}{row}",
                kind=NodeKind.QUAD,
                color=color,
                pick=PickInfo.make(PickSemantic.SK_CELL, cell=[col, row]),
                points=(
                    (x, y, oz), (x, y + cell, oz),
                    (x + cell, y + cell, oz), (x + cell, y, oz),
                ),
            ))
    return tuple(nodes)


def mdd_nodes(
    chart_id: str,
    layout: MddLayout,
    series: StudySeries,
    params: LayoutParams = LAYOUT,
) -> tuple[SceneNode, ...]:
    nodes: list[SceneNode] = []
    for g in layout.glyphs:
        attr = series.attributes[g.attribute_index]
        nodes.append(SceneNode(
            id=(f"chart/{chart_id}/glyph/a{g.attribute_index:03d}"
                f"/s{g.time_step:03d}"),
            kind=NodeKind.BOX,
            transform=Transform(
                position=(
                    g.attribute_index * params.attr_pitch,
                    g.center_y * params.chart_height,
                    g.z_slot * params.z_pitch,
                ),
                scale=(g.width, max(g.height * params.chart_height, 1e-4), g.width),
            ),
            color=g.color,
            pick=PickInfo.make(
                PickSemantic.ATTRIBUTE_COLUMN,
                chartId=chart_id, attribute=attr.name,
            ),
        ))
    for i, lab in enumerate(layout.labels):
        if lab.axis == "x":
            pos = (lab.slot * params.attr_pitch, -0.06, 0.0)
        elif lab.axis == "y":
            pos = (-0.1, lab.slot * params.chart_height, 0.0)
        else:
            pos = (-0.1, -0.06, lab.slot * params.z_pitch)
        nodes.append(_label(
            f"chart/{chart_id}/label/{lab.axis}/{i:03d}", lab.text, lab.unit, pos
        ))
    return tuple(nodes)


def tet_nodes(
    chart_id: str,
    layout: TetLayout,
    series: StudySeries,
    params: LayoutParams = LAYOUT,
) -> tuple[SceneNode, ...]:
    nodes: list[SceneNode] = []
    for column in layout.columns:
        a = column.attribute_index
        x = a * params.attr_pitch
        attr = series.attributes[a]
        for t, y in enumerate(column.cube_y):
            nodes.append(SceneNode(
                id=f"chart/{chart_id}/tet/a{a:03d}/cube/{t:03d}",
                kind=NodeKind.CUBE,
                transform=Transform(
                    position=(x, y, 0.0),
                    scale=(params.cube_size,) * 3,
                ),
                color=palette.TET_CUBE,
                pick=PickInfo.make(
                    PickSemantic.TET_CUBE,
                    chartId=chart_id, attribute=attr.name, timeStep=t,
                ),
            ))
        for link in column.links:
            t0, t1 = link.time_pair
            nodes.append(SceneNode(
                id=f"chart/{chart_id}/tet/a{a:03d}/link/{t0:03d}",
                kind=NodeKind.LINE,
                color=link.color,
                width=link.thickness,
                points=(
                    (x, column.cube_y[t0], 0.0),
                    (x, column.cube_y[t1], 0.0),
                ),
            ))
    for i, lab in enumerate(layout.labels):
        nodes.append(_label(
            f"chart/{chart_id}/tet/label/x/{i:03d}", lab.text, lab.unit,
            (lab.slot * params.attr_pitch, -0.06, 0.0),
        ))
    return tuple(nodes)


def chrono_nodes(
    chart_id: str,
    layout: ChronoLayout,
    params: LayoutParams = LAYOUT,
) -> tuple[SceneNode, ...]:
    nodes: list[SceneNode] = []
    for stack in layout.stacks:
        for rect in stack.rects:
            nodes.append(SceneNode(
                id=(f"chart/{chart_id}/stack/{stack.time_step:03d}"
                    f"/bin/{rect.bin_index:03d}"),
                kind=NodeKind.BOX,
                transform=Transform(
                    position=(
                        (rect.x0 + rect.x1) / 2.0,
                        (rect.y0 + rect.y1) / 2.0,
                        0.0,
                    ),
                    scale=(
                        rect.x1 - rect.x0,
                        max(rect.y1 - rect.y0, 1e-5),
                        0.01,
                    ),
                ),
                color=palette.CHRONO_BIN,
                pick=PickInfo.make(
                    PickSemantic.CHRONO_BIN,
                    chartId=chart_id, binIndex=rect.bin_index,
                    timeStep=stack.time_step,
                ),
            ))
    for quad in layout.quads:
        t0, _ = quad.time_pair
        base = delta_color(quad.delta_class)
        nodes.append(SceneNode(
            id=f"chart/{chart_id}/quad/{t0:03d}/{quad.bin_index:03d}",
            kind=NodeKind.QUAD,
            color=(base[0], base[1], base[2], quad.opacity),
            pick=PickInfo.make(
                PickSemantic.CHRONO_QUAD,
                chartId=chart_id, binIndex=quad.bin_index,
                timePair=list(quad.time_pair),
            ),
            points=tuple((x, y, 0.0) for x, y in quad.corners),
        ))
    for i, lab in enumerate(layout.bin_labels):
        last_stack_x = layout.stacks[-1].rects[0].x1 if layout.stacks else 0.0
        nodes.append(_label(
            f"chart/{chart_id}/label/bin/{i:03d}", lab.text, lab.unit,
            (last_stack_x + 0.04, lab.slot, 0.0),
        ))
    for i, lab in enumerate(layout.step_labels):
        nodes.append(_label(
            f"chart/{chart_id}/label/step/{i:03d}", lab.text, lab.unit,
            (lab.slot, -0.05, 0.0),
        ))
    nodes.append(_label(
        f"chart/{chart_id}/label/max", str(layout.max_count), "fibers",
        (-0.08, layout.max_count * params.unit_height, 0.0),
    ))
    nodes.sort(key=lambda n: n.id)
    return tuple(nodes)


def fiber_nodes(
    time_step: int,
    fibers: tuple[FiberCylinder, ...],
    anchor: Transform,
    colors: dict[int, palette.RGBA] | None = None,
    base_color: palette.RGBA = palette.FIBER_BASE,
) -> SceneNode:
    """A grid cell: pickable anchor cube with one cylinder child per fiber."""
    colors = colors or {}
    children = tuple(
        SceneNode(
            id=f"grid/{time_step:03d}/fiber/{f.fiber_index:05d}",
            kind=NodeKind.CYLINDER,
            color=colors.get(f.fiber_index, base_color),
            points=(f.start, f.end),
            radius=f.radius,
        )
        for f in fibers
    )
    return SceneNode(
        id=f"grid/{time_step:03d}",
        kind=NodeKind.CUBE,
        transform=anchor,
        color=palette.HANDLE_GRAY,
        pick=PickInfo.make(PickSemantic.GRID_ITEM, timeStep=time_step),
        children=children,
    )
