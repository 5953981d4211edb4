"""Typed scene graph and its canonical serialized form (`marv-scene/1`).

Scenes are retained-mode and id-addressed: interaction responses travel
as patches instead of whole scenes, which keeps wire chatter small for
fiber scenes with 10^5 nodes. Serialization is canonical (sorted keys,
numbers at 6 significant digits, children ordered by id), so equal scenes
produce byte-identical documents and replays can be compared exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]
RGBA = tuple[float, float, float, float]

SCHEMA = "marv-scene/1"
PATCH_SCHEMA = "marv-patch/1"


class SceneError(Exception):
    pass


class NodeKind(Enum):
    BOX = "box"
    CUBE = "cube"
    QUAD = "quad"
    LINE = "line"
    LABEL = "label"
    HANDLE = "handle"
    CYLINDER = "cylinder"


class PickSemantic(Enum):
    ATTRIBUTE_COLUMN = "attributeColumn"
    SK_CELL = "skCell"
    CHRONO_QUAD = "chronoQuad"
    CHRONO_BIN = "chronoBin"
    TET_CUBE = "tetCube"
    GRID_ITEM = "gridItem"
    CHART_HANDLE = "chartHandle"


# Required payload keys per semantic; validated on build and parse.
PAYLOAD_KEYS: dict[PickSemantic, tuple[str, ...]] = {
    PickSemantic.ATTRIBUTE_COLUMN: ("chartId", "attribute"),
    PickSemantic.SK_CELL: ("cell",),
    PickSemantic.CHRONO_QUAD: ("chartId", "binIndex", "timePair"),
    PickSemantic.CHRONO_BIN: ("chartId", "binIndex", "timeStep"),
    PickSemantic.TET_CUBE: ("chartId", "attribute", "timeStep"),
    PickSemantic.GRID_ITEM: ("timeStep",),
    PickSemantic.CHART_HANDLE: ("chartId",),
}


@dataclass(frozen=True)
class PickInfo:
    semantic: PickSemantic
    payload: tuple[tuple[str, Any], ...]  # sorted key/value pairs

    @staticmethod
    def make(semantic: PickSemantic, **payload: Any) -> "PickInfo":
        info = PickInfo(semantic, tuple(sorted(payload.items())))
        info.validate()
        return info

    def validate(self) -> None:
        keys = {k for k, _ in self.payload}
        required = set(PAYLOAD_KEYS[self.semantic])
        if keys != required:
            raise SceneError(
                f"pick payload for {self.semantic.value} has keys {sorted(keys)}, "
                f"requires {sorted(required)}"
            )

    def get(self, key: str) -> Any:
        for k, v in self.payload:
            if k == key:
                return v
        raise KeyError(key)


IDENTITY_ROTATION: Quat = (0.0, 0.0, 0.0, 1.0)
UNIT_SCALE: Vec3 = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class Transform:
    position: Vec3 = (0.0, 0.0, 0.0)
    rotation: Quat = IDENTITY_ROTATION
    scale: Vec3 = UNIT_SCALE


IDENTITY = Transform()


@dataclass(frozen=True, slots=True)
class SceneNode:
    """One node. Kind-specific payloads: labels carry text + unit, lines
    and quads and cylinders carry explicit points, cylinders a radius,
    lines a width. Handle nodes must be pickable."""

    id: str
    kind: NodeKind
    transform: Transform = IDENTITY
    color: RGBA = (1.0, 1.0, 1.0, 1.0)
    pick: PickInfo | None = None
    children: tuple["SceneNode", ...] = ()
    text: str | None = None
    unit: str | None = None
    points: tuple[Vec3, ...] | None = None
    radius: float | None = None
    width: float | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise SceneError("node id must be nonempty")
        if self.kind is NodeKind.LABEL and (self.text is None or self.unit is None):
            raise SceneError(f"label node {self.id!r} must carry text and unit")
        if self.kind is NodeKind.HANDLE and self.pick is None:
            raise SceneError(f"handle node {self.id!r} must be pickable")
        if self.pick is not None:
            self.pick.validate()


@dataclass(frozen=True)
class Scene:
    nodes: tuple[SceneNode, ...] = ()

    def __post_init__(self) -> None:
        _check_unique_ids(self.nodes, seen=set())

    def canonical(self) -> "Scene":
        return Scene(nodes=_sort_nodes(self.nodes))

    def flatten(self) -> dict[str, tuple[str | None, SceneNode]]:
        """id -> (parent id, node with children stripped)."""
        out: dict[str, tuple[str | None, SceneNode]] = {}
        _flatten_into(self.nodes, None, out)
        return out

    def find(self, node_id: str) -> SceneNode | None:
        entry = self.flatten().get(node_id)
        return entry[1] if entry else None


def _check_unique_ids(nodes: tuple[SceneNode, ...], seen: set[str]) -> None:
    for node in nodes:
        if node.id in seen:
            raise SceneError(f"duplicate node id {node.id!r}")
        seen.add(node.id)
        _check_unique_ids(node.children, seen)


def _sort_nodes(nodes: tuple[SceneNode, ...]) -> tuple[SceneNode, ...]:
    # identity-preserving: untouched subtrees are returned as-is, which
    # keeps canonicalization cheap for large already-ordered fiber groups
    changed = False
    out = []
    for node in nodes:
        sorted_children = _sort_nodes(node.children)
        if sorted_children is not node.children:
            node = replace(node, children=sorted_children)
            changed = True
        out.append(node)
    if any(out[i].id > out[i + 1].id for i in range(len(out) - 1)):
        out.sort(key=lambda n: n.id)
        changed = True
    return tuple(out) if changed else nodes


def _flatten_into(
    nodes: tuple[SceneNode, ...],
    parent: str | None,
    out: dict[str, tuple[str | None, SceneNode]],
) -> None:
    for node in nodes:
        if node.children:
            out[node.id] = (parent, replace(node, children=()))
            _flatten_into(node.children, node.id, out)
        else:
            out[node.id] = (parent, node)


# --- canonical serialization ---------------------------------------------

def _num(x: float) -> float | int:
    """Round to 6 significant digits; sub-visual precision, stable diffs."""
    if isinstance(x, bool) or isinstance(x, int):
        return x
    return float(f"{x:.6g}")


def _vec(v: tuple[float, ...]) -> list[float | int]:
    return [_num(x) for x in v]


def _transform_dict(t: Transform) -> dict[str, Any]:
    td: dict[str, Any] = {}
    if t.position != (0.0, 0.0, 0.0):
        td["position"] = _vec(t.position)
    if t.rotation != IDENTITY_ROTATION:
        td["rotation"] = _vec(t.rotation)
    if t.scale != UNIT_SCALE:
        td["scale"] = _vec(t.scale)
    return td


def _node_dict(node: SceneNode) -> dict[str, Any]:
    d: dict[str, Any] = {"id": node.id, "kind": node.kind.value}
    if node.transform != IDENTITY:
        d["transform"] = _transform_dict(node.transform)
    d["color"] = _vec(node.color)
    if node.pick is not None:
        d["pick"] = {
            "semantic": node.pick.semantic.value,
            "payload": {k: v for k, v in node.pick.payload},
        }
    if node.text is not None:
        d["text"] = node.text
    if node.unit is not None:
        d["unit"] = node.unit
    if node.points is not None:
        d["points"] = [_vec(p) for p in node.points]
    if node.radius is not None:
        d["radius"] = _num(node.radius)
    if node.width is not None:
        d["width"] = _num(node.width)
    if node.children:
        d["children"] = [_node_dict(c) for c in _sort_nodes(node.children)]
    return d


def _dumps(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")


def serialize_scene(scene: Scene) -> bytes:
    """Canonical bytes; equal scenes serialize byte-identically."""
    doc = {
        "schema": SCHEMA,
        "nodes": [_node_dict(n) for n in _sort_nodes(scene.nodes)],
    }
    return _dumps(doc)


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise SceneError(f"{path}: {message}")


def _parse_vec(raw: Any, path: str, size: int) -> tuple[float, ...]:
    _require(isinstance(raw, list) and len(raw) == size, path,
             f"expected a {size}-element number list")
    for i, x in enumerate(raw):
        _require(isinstance(x, (int, float)) and not isinstance(x, bool),
                 f"{path}[{i}]", "expected a number")
    return tuple(float(x) for x in raw)


def _parse_node(raw: Any, path: str) -> SceneNode:
    _require(isinstance(raw, dict), path, "expected an object")
    _require("id" in raw and isinstance(raw["id"], str), path, "missing string id")
    _require("kind" in raw, path, "missing kind")
    try:
        kind = NodeKind(raw["kind"])
    except ValueError:
        raise SceneError(f"{path}.kind: unknown kind {raw['kind']!r}") from None
    transform = IDENTITY
    if "transform" in raw:
        t = raw["transform"]
        _require(isinstance(t, dict), f"{path}.transform", "expected an object")
        transform = Transform(
            position=_parse_vec(t["position"], f"{path}.transform.position", 3)
            if "position" in t else (0.0, 0.0, 0.0),
            rotation=_parse_vec(t["rotation"], f"{path}.transform.rotation", 4)
            if "rotation" in t else IDENTITY_ROTATION,
            scale=_parse_vec(t["scale"], f"{path}.transform.scale", 3)
            if "scale" in t else UNIT_SCALE,
        )
    pick = None
    if "pick" in raw:
        p = raw["pick"]
        _require(isinstance(p, dict) and "semantic" in p and "payload" in p,
                 f"{path}.pick", "expected {semantic, payload}")
        try:
            semantic = PickSemantic(p["semantic"])
        except ValueError:
            raise SceneError(
                f"{path}.pick.semantic: unknown semantic {p['semantic']!r}"
            ) from None
        _require(isinstance(p["payload"], dict), f"{path}.pick.payload",
                 "expected an object")
        try:
            pick = PickInfo.make(semantic, **p["payload"])
        except SceneError as exc:
            raise SceneError(f"{path}.pick: {exc}") from None
    children: tuple[SceneNode, ...] = ()
    if "children" in raw:
        _require(isinstance(raw["children"], list), f"{path}.children",
                 "expected a list")
        children = tuple(
            _parse_node(c, f"{path}.children[{i}]")
            for i, c in enumerate(raw["children"])
        )
    points = None
    if "points" in raw:
        _require(isinstance(raw["points"], list), f"{path}.points", "expected a list")
        points = tuple(
            _parse_vec(p, f"{path}.points[{i}]", 3)  # type: ignore[misc]
            for i, p in enumerate(raw["points"])
        )
    try:
        return SceneNode(
            id=raw["id"],
            kind=kind,
            transform=transform,
            color=_parse_vec(raw.get("color", [1, 1, 1, 1]), f"{path}.color", 4),  # type: ignore[arg-type]
            pick=pick,
            children=children,
            text=raw.get("text"),
            unit=raw.get("unit"),
            points=points,  # type: ignore[arg-type]
            radius=float(raw["radius"]) if "radius" in raw else None,
            width=float(raw["width"]) if "width" in raw else None,
        )
    except SceneError as exc:
        raise SceneError(f"{path}: {exc}") from None


def parse_scene(data: bytes | str) -> Scene:
    """Inverse of serialize_scene on its image; path-qualified errors."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SceneError(f"$: not valid JSON: {exc}") from None
    _require(isinstance(raw, dict), "$", "expected an object")
    _require(raw.get("schema") == SCHEMA, "$.schema",
             f"expected {SCHEMA!r}, got {raw.get('schema')!r}")
    _require(isinstance(raw.get("nodes"), list), "$.nodes", "expected a list")
    nodes = tuple(
        _parse_node(n, f"$.nodes[{i}]") for i, n in enumerate(raw["nodes"])
    )
    return Scene(nodes=nodes).canonical()


# --- diff / patch ---------------------------------------------------------

@dataclass(frozen=True)
class AddedNode:
    parent_id: str | None
    node: SceneNode  # children always empty; descendants add themselves


@dataclass(frozen=True)
class ScenePatch:
    added: tuple[AddedNode, ...] = ()
    removed_ids: tuple[str, ...] = ()
    recolored: tuple[tuple[str, RGBA], ...] = ()
    retransformed: tuple[tuple[str, Transform], ...] = ()

    @property
    def empty(self) -> bool:
        return not (self.added or self.removed_ids or self.recolored
                    or self.retransformed)


def diff_scenes(old: Scene, new: Scene) -> ScenePatch:
    """Minimal id-addressed patch; apply_patch(old, patch) == new.

    A node differing only in color or transform patches in place; any
    other change (kind, text, geometry, pick, parent) re-adds the node.
    """
    old_flat = old.flatten()
    new_flat = new.flatten()
    added: list[AddedNode] = []
    removed: list[str] = []
    recolored: list[tuple[str, RGBA]] = []
    retransformed: list[tuple[str, Transform]] = []
    for node_id in sorted(old_flat.keys() - new_flat.keys()):
        removed.append(node_id)
    for node_id in sorted(new_flat.keys() - old_flat.keys()):
        parent, node = new_flat[node_id]
        added.append(AddedNode(parent, node))
    for node_id in sorted(old_flat.keys() & new_flat.keys()):
        old_parent, old_node = old_flat[node_id]
        new_parent, new_node = new_flat[node_id]
        if old_parent == new_parent and (old_node is new_node
                                         or old_node == new_node):
            continue
        patchable = replace(old_node, color=new_node.color,
                            transform=new_node.transform) == new_node
        if old_parent == new_parent and patchable:
            if old_node.color != new_node.color:
                recolored.append((node_id, new_node.color))
            if old_node.transform != new_node.transform:
                retransformed.append((node_id, new_node.transform))
        else:
            removed.append(node_id)
            added.append(AddedNode(new_parent, new_node))
    return ScenePatch(
        added=tuple(sorted(added, key=lambda e: e.node.id)),
        removed_ids=tuple(sorted(removed)),
        recolored=tuple(sorted(recolored, key=lambda e: e[0])),
        retransformed=tuple(sorted(retransformed, key=lambda e: e[0])),
    )


def apply_patch(scene: Scene, patch: ScenePatch) -> Scene:
    """Rebuild a scene from a patch; sibling order is canonical (by id)."""
    flat = dict(scene.flatten())
    for node_id in patch.removed_ids:
        if node_id not in flat:
            raise SceneError(f"patch removes unknown node {node_id!r}")
        del flat[node_id]
    for entry in patch.added:
        if entry.node.id in flat:
            raise SceneError(f"patch adds duplicate node {entry.node.id!r}")
        flat[entry.node.id] = (entry.parent_id, replace(entry.node, children=()))
    for node_id, color in patch.recolored:
        if node_id not in flat:
            raise SceneError(f"patch recolors unknown node {node_id!r}")
        parent, node = flat[node_id]
        flat[node_id] = (parent, replace(node, color=color))
    for node_id, transform in patch.retransformed:
        if node_id not in flat:
            raise SceneError(f"patch retransforms unknown node {node_id!r}")
        parent, node = flat[node_id]
        flat[node_id] = (parent, replace(node, transform=transform))

    by_parent: dict[str | None, list[SceneNode]] = {}
    for node_id, (parent, node) in flat.items():
        if parent is not None and parent not in flat:
            raise SceneError(f"node {node_id!r} has dangling parent {parent!r}")
        by_parent.setdefault(parent, []).append(node)

    def build(parent: str | None) -> tuple[SceneNode, ...]:
        return tuple(
            replace(node, children=build(node.id))
            for node in sorted(by_parent.get(parent, []), key=lambda n: n.id)
        )

    return Scene(nodes=build(None))


def serialize_patch(patch: ScenePatch) -> bytes:
    doc = {
        "schema": PATCH_SCHEMA,
        "added": [
            {"parent": e.parent_id, "node": _node_dict(e.node)} for e in patch.added
        ],
        "removed": list(patch.removed_ids),
        "recolored": {node_id: _vec(color) for node_id, color in patch.recolored},
        "retransformed": {
            node_id: _transform_dict(transform)
            for node_id, transform in patch.retransformed
        },
    }
    return _dumps(doc)


def parse_patch(data: bytes | str) -> ScenePatch:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SceneError(f"$: not valid JSON: {exc}") from None
    _require(isinstance(raw, dict), "$", "expected an object")
    _require(raw.get("schema") == PATCH_SCHEMA, "$.schema",
             f"expected {PATCH_SCHEMA!r}, got {raw.get('schema')!r}")
    added = tuple(
        AddedNode(e.get("parent"), _parse_node(e["node"], f"$.added[{i}].node"))
        for i, e in enumerate(raw.get("added", []))
    )
    recolored = tuple(
        (node_id, _parse_vec(color, f"$.recolored[{node_id}]", 4))
        for node_id, color in sorted(raw.get("recolored", {}).items())
    )
    retransformed = []
    for node_id, t in sorted(raw.get("retransformed", {}).items()):
        retransformed.append((node_id, Transform(
            position=_parse_vec(t["position"], "position", 3) if "position" in t
            else (0.0, 0.0, 0.0),
            rotation=_parse_vec(t["rotation"], "rotation", 4) if "rotation" in t
            else IDENTITY_ROTATION,
            scale=_parse_vec(t["scale"], "scale", 3) if "scale" in t else UNIT_SCALE,
        )))
    return ScenePatch(
        added=added,
        removed_ids=tuple(raw.get("removed", [])),
        recolored=recolored,  # type: ignore[arg-type]
        retransformed=tuple(retransformed),
    )
