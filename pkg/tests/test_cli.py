from __future__ import annotations

import json

import pytest

from marv.cli import main
from marv.ingest import demo_spec, generate_synthetic, write_study
from marv.scene import parse_scene


@pytest.fixture
def manifest(tmp_path):
    spec, binding = demo_spec(steps=3, records=80)
    series = generate_synthetic(spec, seed=9)
    return write_study(series, binding, tmp_path / "study")


def test_ingest_summarizes(manifest, capsys):
    assert main(["ingest", str(manifest)]) == 0
    out = capsys.readouterr().out
    assert "time steps: 3" in out
    assert "attributes: 9" in out
    assert "80 records" in out


def test_ingest_missing_file_fails(tmp_path, capsys):
    assert main(["ingest", str(tmp_path / "nope.json")]) == 1
    assert "error" in capsys.readouterr().err


def test_stats_table(manifest, capsys):
    assert main(["stats", str(manifest)]) == 0
    out = capsys.readouterr().out
    assert "Diameter" in out
    assert "drift" in out


def test_stats_machine_format(manifest, capsys):
    assert main(["stats", str(manifest), "--format", "machine"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["perStep"]) == 3
    assert len(doc["drift"]["normalized"]) == 2
    assert doc["attributes"][6] == "Diameter"


def test_stats_per_attribute_norm(manifest, capsys):
    assert main(["stats", str(manifest), "--format", "machine",
                 "--drift-norm", "per-attribute"]) == 0
    doc = json.loads(capsys.readouterr().out)
    for a in range(len(doc["attributes"])):
        column = [row[a] for row in doc["drift"]["normalized"]]
        raw = [row[a] for row in doc["drift"]["raw"]]
        if any(v > 0 for v in raw):
            assert max(column) == pytest.approx(1.0)


@pytest.mark.parametrize("chart", ["mdd", "tet", "chrono:Diameter"])
def test_scene_writes_parseable_document(manifest, tmp_path, chart, capsys):
    out_file = tmp_path / "scene.json"
    assert main(["scene", str(manifest), "--chart", chart,
                 "--out", str(out_file)]) == 0
    scene = parse_scene(out_file.read_bytes())
    assert scene.nodes


def test_scene_unknown_chart(manifest, tmp_path, capsys):
    assert main(["scene", str(manifest), "--chart", "pie",
                 "--out", str(tmp_path / "x.json")]) == 2


def test_synth_then_replay(tmp_path, capsys):
    outdir = tmp_path / "demo"
    assert main(["synth", str(outdir), "--steps", "2", "--records", "50"]) == 0
    manifest = outdir / "study.json"
    assert manifest.exists()
    log = tmp_path / "log.jsonl"
    log.write_text(
        '{"type": "extract_chrono", "attribute": "Diameter"}\n'
        '{"type": "sk_select", "cell": [1, 1]}\n',
        encoding="utf-8",
    )
    snap = tmp_path / "final.json"
    assert main(["replay", str(manifest), str(log), "--out", str(snap)]) == 0
    out = capsys.readouterr().out
    assert "version 2" in out
    assert parse_scene(snap.read_bytes().rstrip(b"\n")).nodes


def test_palette_export(tmp_path):
    out = tmp_path / "palette.json"
    assert main(["palette", str(out)]) == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert len(doc["categorical"]) == 3
    assert len(doc["detailed"][0]) == 9
