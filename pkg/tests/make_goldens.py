"""Regenerate the frozen layout golden files.

Run from the repository root:  python3 tests/make_goldens.py
Layouts are deterministic, so these files only change when the layout
code or its constants intentionally change.
"""
from __future__ import annotations

from pathlib import Path

from marv.charts import MddMode, build_chrono, build_mdd, build_tet
from marv.ingest import demo_spec, generate_synthetic
from marv.scene import Scene, serialize_scene
from marv.scenebuild import chart_root, chrono_nodes, mdd_nodes, sk_panel_nodes, tet_nodes
from marv.scene import Transform
from marv.skmapper import SKMapperState
from marv.stats import attribute_stats

GOLDEN_DIR = Path(__file__).parent / "goldens"


def build_scenes() -> dict[str, bytes]:
    spec, _ = demo_spec(steps=3, records=120)
    series = generate_synthetic(spec, seed=13)
    stats = attribute_stats(series)
    sk_state = SKMapperState()

    mdd = build_mdd(series, stats, sk_state, MddMode.MULTI_DATASET)
    mdd_scene = Scene((chart_root(
        "mdd0", Transform(),
        mdd_nodes("mdd0", mdd, series) + sk_panel_nodes("mdd0", sk_state),
    ),)).canonical()

    assert stats.drift is not None
    tet = build_tet(stats.drift, tuple(a.name for a in series.attributes))
    tet_scene = Scene((chart_root(
        "mdd0", Transform(), tet_nodes("mdd0", tet, series),
    ),)).canonical()

    diameter_edges = stats.edges[series.attribute_index("Diameter")]
    assert diameter_edges is not None
    chrono = build_chrono(series, "Diameter", diameter_edges)
    chrono_scene = Scene((chart_root(
        "chrono-a006", Transform(), chrono_nodes("chrono-a006", chrono),
    ),)).canonical()

    return {
        "mdd_scene.json": serialize_scene(mdd_scene),
        "tet_scene.json": serialize_scene(tet_scene),
        "chrono_scene.json": serialize_scene(chrono_scene),
    }


def main() -> None:
    GOLDEN_DIR.mkdir(exist_ok=True)
    for name, data in build_scenes().items():
        (GOLDEN_DIR / name).write_bytes(data + b"\n")
        print(f"wrote {GOLDEN_DIR / name} ({len(data)} bytes)")


if __name__ == "__main__":
    main()
