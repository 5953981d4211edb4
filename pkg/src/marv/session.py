"""Stateful analysis session: one study, one scene, serial mutations.

Every mutating request is transactional: the next scene is computed in
full, diffed against the current one, and only then committed. The scene
version counts successful mutations, so replaying a recorded request log
against the same study reproduces byte-identical snapshots at every
version. The distribution glyph chart and the temporal tracker are two
representations of one chart entity; switching draws the other form
without creating a new chart.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from . import scenebuild
from .charts import MddMode, build_chrono, build_mdd, build_tet
from .config import ANCHORS, LAYOUT, VIEW, Anchors, LayoutParams
from .ingest import GeometryBinding, IngestError, StudySeries, load_manifest
from .palette import HIGHLIGHT_EARLIER, HIGHLIGHT_LATER, FIBER_BASE, palette_dict
from .scene import (
    Scene,
    ScenePatch,
    SceneNode,
    Transform,
    diff_scenes,
    serialize_patch,
    serialize_scene,
)
from .skmapper import SKCell, SKMapperState, select_cell
from .spatial import HighlightSet, build_fibers, grid_layout, select_by_range
from .stats import StudyStats, attribute_stats

PROTOCOL = "marv-wire/1"

MDD_CHART_ID = "mdd0"


class SessionError(Exception):
    code = "bad_request"


class UnknownChartError(SessionError):
    code = "unknown_chart"


class DuplicateChartError(SessionError):
    code = "duplicate_chart"


@dataclass(frozen=True)
class ChartEntry:
    kind: str                      # "mdd" | "chrono"
    representation: str = "MDD"    # for the mdd entity: "MDD" | "TET"
    attribute: str | None = None   # for chrono charts
    slot: int = 0                  # anchor slot for chrono charts


@dataclass(frozen=True)
class Highlight:
    selection: HighlightSet
    dim_others: bool = False


class Session:
    """Single-study session; mutations are serialized by the caller."""

    def __init__(
        self,
        series: StudySeries,
        binding: GeometryBinding,
        *,
        drift_norm: str = "global",
        layout: LayoutParams = LAYOUT,
        anchors: Anchors = ANCHORS,
    ) -> None:
        binding.validate(series)
        self.series = series
        self.binding = binding
        self.layout = layout
        self.anchors = anchors
        self.stats: StudyStats = attribute_stats(series, drift_norm=drift_norm)
        self.sk_state = SKMapperState()
        self.charts: dict[str, ChartEntry] = {MDD_CHART_ID: ChartEntry(kind="mdd")}
        self.highlights: dict[str, Highlight] = {}
        self.scene_version = 0
        self._fibers = tuple(
            build_fibers(step, binding) for step in series.time_steps
        )
        self._fiber_anchors = self._compute_fiber_anchors()
        # fiber nodes only ever change color, so the base nodes are built
        # once and highlight rebuilds touch just the recolored indices
        self._fiber_base = tuple(
            scenebuild.fiber_nodes(t, fibers, self._fiber_anchors[t])
            for t, fibers in enumerate(self._fibers)
        )
        self.scene: Scene = self._build_scene()

    # -- construction ------------------------------------------------------

    @classmethod
    def open_study(cls, manifest_path: str | Path, *, delimiter: str = ",",
                   drift_norm: str = "global") -> "Session":
        series, binding = load_manifest(manifest_path, delimiter=delimiter)
        return cls(series, binding, drift_norm=drift_norm)

    def _compute_fiber_anchors(self) -> tuple[Transform, ...]:
        axes = (
            (self.binding.start_x, self.binding.end_x),
            (self.binding.start_y, self.binding.end_y),
            (self.binding.start_z, self.binding.end_z),
        )
        lo = [min(float(step.column(name).min())
                  for step in self.series.time_steps for name in pair)
              for pair in axes]
        hi = [max(float(step.column(name).max())
                  for step in self.series.time_steps for name in pair)
              for pair in axes]
        extent = max(h - l for h, l in zip(hi, lo))
        scale = self.anchors.fiber_view_extent / extent if extent > 0 else 1.0
        center = tuple((h + l) / 2.0 for h, l in zip(hi, lo))
        gx, gy, gz = self.anchors.grid_center
        anchors = []
        for t in grid_layout(len(self.series.time_steps),
                             self.anchors.grid_spacing):
            px, py, pz = t.position
            anchors.append(Transform(
                position=(
                    gx + px - scale * center[0],
                    gy + py - scale * center[1],
                    gz + pz - scale * center[2],
                ),
                scale=(scale, scale, scale),
            ))
        return tuple(anchors)

    @property
    def mdd_mode(self) -> MddMode:
        return (MddMode.MULTI_DATASET if len(self.series.time_steps) > 1
                else MddMode.SINGLE_DATASET)

    # -- scene construction --------------------------------------------------

    def _fiber_colors(self, time_step: int) -> dict[int, tuple]:
        colors: dict[int, tuple] = {}
        dim = (FIBER_BASE[0], FIBER_BASE[1], FIBER_BASE[2], 0.15)
        for chart_id in sorted(self.highlights):
            h = self.highlights[chart_id]
            sel = h.selection
            if h.dim_others and time_step in (sel.earlier_step, sel.later_step):
                for i in range(self.series.time_steps[time_step].record_count):
                    colors[i] = dim
            if time_step == sel.earlier_step:
                for i in sel.earlier_indices:
                    colors[i] = HIGHLIGHT_EARLIER
            if time_step == sel.later_step:
                for i in sel.later_indices:
                    colors[i] = HIGHLIGHT_LATER
        return colors

    def _chart_nodes(self) -> list[SceneNode]:
        nodes: list[SceneNode] = []
        for chart_id in sorted(self.charts):
            entry = self.charts[chart_id]
            if entry.kind == "mdd":
                anchor = Transform(position=self.anchors.chart_position)
                if entry.representation == "MDD":
                    layout = build_mdd(self.series, self.stats, self.sk_state,
                                       self.mdd_mode, self.layout)
                    children = scenebuild.mdd_nodes(
                        chart_id, layout, self.series, self.layout
                    ) + scenebuild.sk_panel_nodes(
                        chart_id, self.sk_state, self.layout, self.anchors
                    )
                else:
                    assert self.stats.drift is not None
                    tet = build_tet(
                        self.stats.drift,
                        tuple(a.name for a in self.series.attributes),
                        self.layout,
                    )
                    children = scenebuild.tet_nodes(
                        chart_id, tet, self.series, self.layout
                    )
            else:
                assert entry.attribute is not None
                attr_index = self.series.attribute_index(entry.attribute)
                edges = self.stats.edges[attr_index]
                assert edges is not None
                chrono = build_chrono(self.series, entry.attribute, edges,
                                      self.layout)
                cx, cy, cz = self.anchors.chart_position
                anchor = Transform(position=(
                    cx + self.anchors.chrono_offset_x * (entry.slot + 1), cy, cz,
                ))
                children = scenebuild.chrono_nodes(chart_id, chrono, self.layout)
            nodes.append(scenebuild.chart_root(chart_id, anchor, children,
                                               self.layout))
        return nodes

    def _grid_node(self, time_step: int) -> SceneNode:
        colors = self._fiber_colors(time_step)
        base = self._fiber_base[time_step]
        if not colors:
            return base
        children = list(base.children)
        for i, node in enumerate(children):
            fiber_index = self._fibers[time_step][i].fiber_index
            color = colors.get(fiber_index)
            if color is not None and node.color != color:
                children[i] = replace(node, color=color)
        return replace(base, children=tuple(children))

    def _build_scene(self) -> Scene:
        # children are emitted in id order, so the scene is canonical by
        # construction (asserted by the test suite)
        nodes = self._chart_nodes()
        nodes.extend(self._grid_node(t) for t in range(len(self._fibers)))
        return Scene(nodes=tuple(nodes))

    def _commit(self) -> ScenePatch:
        new_scene = self._build_scene()
        patch = diff_scenes(self.scene, new_scene)
        self.scene = new_scene
        self.scene_version += 1
        return patch

    # -- mutating operations ------------------------------------------------

    def set_representation(self, chart_id: str, representation: str) -> ScenePatch:
        entry = self.charts.get(chart_id)
        if entry is None or entry.kind != "mdd":
            raise UnknownChartError(f"no glyph/tracker chart {chart_id!r}")
        if representation not in ("MDD", "TET"):
            raise SessionError(f"unknown representation {representation!r}")
        if representation == "TET" and self.stats.drift is None:
            raise SessionError("temporal tracker needs at least 2 time steps")
        self.charts[chart_id] = replace(entry, representation=representation)
        return self._commit()

    def extract_chrono(self, attribute: str) -> tuple[str, ScenePatch]:
        try:
            attr_index = self.series.attribute_index(attribute)
        except KeyError:
            raise SessionError(f"unknown attribute {attribute!r}") from None
        chart_id = f"chrono-a{attr_index:03d}"
        if chart_id in self.charts:
            raise DuplicateChartError(
                f"a stacked-bins chart for {attribute!r} already exists"
            )
        if self.stats.edges[attr_index] is None:
            raise SessionError(f"attribute {attribute!r} is constant; nothing to bin")
        used = {e.slot for e in self.charts.values() if e.kind == "chrono"}
        slot = next(i for i in range(len(self.charts) + 1) if i not in used)
        self.charts[chart_id] = ChartEntry(kind="chrono", attribute=attribute,
                                           slot=slot)
        return chart_id, self._commit()

    def dismiss_chrono(self, chart_id: str) -> ScenePatch:
        entry = self.charts.get(chart_id)
        if entry is None or entry.kind != "chrono":
            raise UnknownChartError(f"no stacked-bins chart {chart_id!r}")
        del self.charts[chart_id]
        self.highlights.pop(chart_id, None)
        return self._commit()

    def click_chrono_quad(
        self,
        chart_id: str,
        bin_index: int,
        time_pair: tuple[int, int],
        *,
        dim_others: bool = False,
    ) -> ScenePatch:
        entry = self.charts.get(chart_id)
        if entry is None or entry.kind != "chrono" or entry.attribute is None:
            raise UnknownChartError(f"no stacked-bins chart {chart_id!r}")
        attr_index = self.series.attribute_index(entry.attribute)
        edges = self.stats.edges[attr_index]
        assert edges is not None
        bins = len(edges) - 1
        if not 0 <= bin_index < bins:
            raise SessionError(f"bin index {bin_index} out of range 0..{bins - 1}")
        earlier, later = time_pair
        if not (later == earlier + 1 and 0 <= earlier
                and later < len(self.series.time_steps)):
            raise SessionError(f"invalid time pair {time_pair}")
        selection = select_by_range(
            self.series, entry.attribute,
            (edges[bin_index], edges[bin_index + 1]),
            earlier, later,
            include_upper=(bin_index == bins - 1),
        )
        self.highlights[chart_id] = Highlight(selection, dim_others)
        return self._commit()

    def sk_select(self, cell: SKCell) -> ScenePatch:
        population = [
            (st.skewness, st.kurtosis_excess)
            for step in self.stats.per_step
            for st in step
            if st.skewness is not None and st.kurtosis_excess is not None
        ]
        if not population:
            raise SessionError("no non-degenerate attributes to map")
        self.sk_state = select_cell(self.sk_state, cell, population)
        return self._commit()

    # -- serialization / protocol --------------------------------------------

    def snapshot_bytes(self) -> bytes:
        return serialize_scene(self.scene)

    def handshake(self) -> dict[str, Any]:
        return {
            "type": "handshake",
            "protocol": PROTOCOL,
            "sceneVersion": self.scene_version,
            "constants": {
                "tetEnterDeg": VIEW.tet_enter_deg,
                "tetExitDeg": VIEW.tet_exit_deg,
                "mddChartId": MDD_CHART_ID,
            },
            "palette": palette_dict(),
        }

    def snapshot_frame(self) -> dict[str, Any]:
        return {
            "type": "snapshot",
            "sceneVersion": self.scene_version,
            "scene": json.loads(self.snapshot_bytes().decode("utf-8")),
        }

    def apply_request(self, request: dict[str, Any]) -> dict[str, Any]:
        """One wire request -> one response frame; errors never mutate."""
        if not isinstance(request, dict) or "type" not in request:
            return self._error("bad_request", "request must carry a type")
        kind = request["type"]
        try:
            if kind == "hello":
                return self.handshake()
            if kind == "open":
                return self.snapshot_frame()
            if kind == "set_representation":
                patch = self.set_representation(
                    str(request["chartId"]), str(request["repr"])
                )
                return self._patch_frame(patch)
            if kind == "extract_chrono":
                chart_id, patch = self.extract_chrono(str(request["attribute"]))
                frame = self._patch_frame(patch)
                frame["chartId"] = chart_id
                return frame
            if kind == "dismiss_chrono":
                return self._patch_frame(
                    self.dismiss_chrono(str(request["chartId"]))
                )
            if kind == "click_chrono_quad":
                pair = request["timePair"]
                if (not isinstance(pair, (list, tuple)) or len(pair) != 2
                        or not all(isinstance(x, int) for x in pair)):
                    raise SessionError("timePair must be [earlier, later]")
                patch = self.click_chrono_quad(
                    str(request["chartId"]),
                    int(request["binIndex"]),
                    (pair[0], pair[1]),
                    dim_others=bool(request.get("dimOthers", False)),
                )
                return self._patch_frame(patch)
            if kind == "sk_select":
                cell = request["cell"]
                if (not isinstance(cell, (list, tuple)) or len(cell) != 2
                        or not all(isinstance(x, int) for x in cell)):
                    raise SessionError("cell must be [col, row]")
                try:
                    sk_cell = SKCell(col=cell[0], row=cell[1])
                except ValueError as exc:
                    raise SessionError(str(exc)) from None
                return self._patch_frame(self.sk_select(sk_cell))
            return self._error("bad_request", f"unknown request type {kind!r}")
        except SessionError as exc:
            return self._error(exc.code, str(exc))
        except (KeyError, TypeError, ValueError) as exc:
            return self._error("bad_request", f"malformed request: {exc}")

    def _patch_frame(self, patch: ScenePatch) -> dict[str, Any]:
        return {
            "type": "patch",
            "sceneVersion": self.scene_version,
            "patch": json.loads(serialize_patch(patch).decode("utf-8")),
        }

    def _error(self, code: str, message: str) -> dict[str, Any]:
        return {
            "type": "error",
            "sceneVersion": self.scene_version,
            "code": code,
            "message": message,
        }


def replay(
    series: StudySeries,
    binding: GeometryBinding,
    requests: list[dict[str, Any]],
    *,
    drift_norm: str = "global",
) -> list[tuple[int, bytes]]:
    """Apply a recorded request log; returns (version, snapshot bytes) after
    the initial build and after every successful mutation."""
    session = Session(series, binding, drift_norm=drift_norm)
    snapshots = [(session.scene_version, session.snapshot_bytes())]
    for request in requests:
        before = session.scene_version
        session.apply_request(request)
        if session.scene_version != before:
            snapshots.append((session.scene_version, session.snapshot_bytes()))
    return snapshots


def read_request_log(path: str | Path) -> list[dict[str, Any]]:
    """A request log is JSON lines, one request object per line."""
    requests = []
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = line.strip()
        if not line:
            continue
        try:
            requests.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}:{line_no}: bad request log line: {exc}") from None
    return requests
