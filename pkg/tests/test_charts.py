from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from conftest import make_series, random_series

from marv import palette
from marv.charts import (
    DeltaClass,
    MddMode,
    build_chrono,
    build_mdd,
    build_tet,
    delta_color,
    rank_drift,
)
from marv.config import LAYOUT
from marv.skmapper import SKMapperState
from marv.stats import DriftMatrix, attribute_stats, drift_matrix, shared_binning

GOLDEN_DIR = Path(__file__).parent / "goldens"


def drift_from_rows(rows):
    raw = tuple(tuple(float(v) for v in row) for row in rows)
    peak = max((v for row in raw for v in row), default=0.0)
    normalized = tuple(
        tuple(v / peak if peak > 0 else 0.0 for v in row) for row in raw
    )
    return DriftMatrix(raw=raw, normalized=normalized)


class TestMdd:
    def test_direct_median_iqr_mapping(self):
        # values 0..4: median 2, iqr 2, range [0,4] -> center 0.5, height 0.5
        series = make_series({"A": [[0.0, 1.0, 2.0, 3.0, 4.0]]})
        stats = attribute_stats(series)
        layout = build_mdd(series, stats, SKMapperState(), MddMode.SINGLE_DATASET)
        glyph = layout.glyphs[0]
        assert glyph.center_y == pytest.approx(0.5)
        assert glyph.height == pytest.approx(0.5)
        assert glyph.width == LAYOUT.bar_width

    def test_modality_ordinal_slots_in_single_mode(self, rng):
        series = make_series({
            "Flat": [list(rng.uniform(0, 1, 5000))],
            "OnePeak": [list(rng.normal(0, 1, 5000))],
            "TwoPeak": [list(np.concatenate([
                rng.normal(-4, 1, 2500), rng.normal(4, 1, 2500)
            ]))],
        })
        stats = attribute_stats(series)
        layout = build_mdd(series, stats, SKMapperState(), MddMode.SINGLE_DATASET)
        slots = {series.attributes[g.attribute_index].name: g.z_slot
                 for g in layout.glyphs}
        assert slots["Flat"] == 0
        assert slots["OnePeak"] == 1
        assert slots["TwoPeak"] == 2

    def test_multi_mode_one_glyph_per_step(self, rng):
        series = random_series(rng, steps=8, attrs=3)
        stats = attribute_stats(series)
        layout = build_mdd(series, stats, SKMapperState(), MddMode.MULTI_DATASET)
        assert len(layout.glyphs) == 8 * 3
        for a in range(3):
            slots = sorted(g.z_slot for g in layout.glyphs
                           if g.attribute_index == a)
            assert slots == list(range(8))

    def test_bar_clipped_to_unit_interval(self, rng):
        series = random_series(rng, steps=2, attrs=4)
        stats = attribute_stats(series)
        layout = build_mdd(series, stats, SKMapperState(), MddMode.MULTI_DATASET)
        for g in layout.glyphs:
            assert 0.0 <= g.center_y - g.height / 2 + 1e-12
            assert g.center_y + g.height / 2 <= 1.0 + 1e-12

    def test_colors_are_palette_constants(self, rng):
        series = random_series(rng, steps=2, attrs=4)
        stats = attribute_stats(series)
        layout = build_mdd(series, stats, SKMapperState(), MddMode.MULTI_DATASET)
        allowed = {c for col in palette.CATEGORICAL for c in col}
        allowed.add(palette.DEGENERATE_NEUTRAL)
        assert all(g.color in allowed for g in layout.glyphs)

    def test_degenerate_attribute_neutral(self):
        series = make_series({"C": [[4.0] * 20]})
        stats = attribute_stats(series)
        layout = build_mdd(series, stats, SKMapperState(), MddMode.SINGLE_DATASET)
        assert layout.glyphs[0].color == palette.DEGENERATE_NEUTRAL

    def test_axis_labels(self, rng):
        series = random_series(rng, steps=2, attrs=2)
        stats = attribute_stats(series)
        multi = build_mdd(series, stats, SKMapperState(), MddMode.MULTI_DATASET)
        z_texts = [l.text for l in multi.labels if l.axis == "z"]
        assert z_texts == ["Datasets"] + [s.label for s in series.time_steps]
        x_texts = [l.text for l in multi.labels if l.axis == "x"]
        assert x_texts[0] == "Attributes"
        single = build_mdd(series, stats, SKMapperState(), MddMode.SINGLE_DATASET)
        z_texts = [l.text for l in single.labels if l.axis == "z"]
        assert z_texts == ["Modality", "Uniform", "Unimodal", "Bimodal",
                           "Multimodal"]


class TestTet:
    def test_zero_drift_minimum_gap_palest_thinnest(self):
        drift = drift_from_rows([[0.0], [0.0]])
        layout = build_tet(drift, ("A",))
        col = layout.columns[0]
        gaps = np.diff(col.cube_y)
        assert np.allclose(gaps, LAYOUT.gap_min)
        for link in col.links:
            assert link.thickness == LAYOUT.line_width_min
            assert link.color == palette.TET_RAMP_LIGHT

    def test_full_drift_maximum_gap_darkest_thickest(self):
        drift = drift_from_rows([[2.0]])
        layout = build_tet(drift, ("A",))
        col = layout.columns[0]
        assert col.cube_y[1] - col.cube_y[0] == pytest.approx(
            LAYOUT.gap_min + LAYOUT.gap_scale
        )
        assert col.links[0].thickness == LAYOUT.line_width_max
        assert col.links[0].color == palette.TET_RAMP_DARK

    def test_y_strictly_increasing_and_equal_drift_equal_gaps(self, rng):
        series = random_series(rng, steps=5, attrs=4)
        drift = drift_matrix(series)
        layout = build_tet(drift, tuple(a.name for a in series.attributes))
        for col in layout.columns:
            ys = col.cube_y
            assert all(a < b for a, b in zip(ys, ys[1:]))
        by_drift: dict[float, float] = {}
        for col in layout.columns:
            for link in col.links:
                t0, t1 = link.time_pair
                gap = col.cube_y[t1] - col.cube_y[t0]
                by_drift.setdefault(link.drift, gap)
                assert by_drift[link.drift] == pytest.approx(gap)

    def test_quiet_ends_cluster(self):
        # quiet first and last pairs, loud middle
        drift = drift_from_rows([[0.01], [0.9], [0.01]])
        layout = build_tet(drift, ("CurvedLength",))
        ys = layout.columns[0].cube_y
        first_gap = ys[1] - ys[0]
        mid_gap = ys[2] - ys[1]
        last_gap = ys[3] - ys[2]
        assert mid_gap > 5 * first_gap
        assert mid_gap > 5 * last_gap

    def test_thickness_monotone_in_drift(self, rng):
        series = random_series(rng, steps=6, attrs=3)
        drift = drift_matrix(series)
        layout = build_tet(drift, tuple(a.name for a in series.attributes))
        links = sorted((l for c in layout.columns for l in c.links),
                       key=lambda l: l.drift)
        thicknesses = [l.thickness for l in links]
        assert all(a <= b + 1e-12 for a, b in zip(thicknesses, thicknesses[1:]))


class TestChrono:
    def test_sign_rule_colors(self):
        series = make_series({
            "A": [
                [0.1] * 10 + [0.9] * 20,   # counts [10, 20]
                [0.1] * 12 + [0.9] * 18,   # counts [12, 18]
            ],
        })
        edges = (0.0, 0.5, 1.0)
        layout = build_chrono(series, "A", edges)
        assert [r.count for r in layout.stacks[0].rects] == [10, 20]
        assert [r.count for r in layout.stacks[1].rects] == [12, 18]
        quad0, quad1 = layout.quads
        assert quad0.delta_count == 2
        assert quad0.delta_class is DeltaClass.INCREASE
        assert delta_color(quad0.delta_class) == palette.CHRONO_INCREASE
        assert quad1.delta_count == -2
        assert quad1.delta_class is DeltaClass.DECREASE
        assert delta_color(quad1.delta_class) == palette.CHRONO_DECREASE

    def test_equal_counts_unchanged_gray(self):
        series = make_series({"A": [[0.2, 0.8], [0.3, 0.7]]})
        layout = build_chrono(series, "A", (0.0, 0.5, 1.0))
        for quad in layout.quads:
            assert quad.delta_class is DeltaClass.UNCHANGED
            assert delta_color(quad.delta_class) == palette.CHRONO_UNCHANGED

    def test_stack_totals_follow_record_counts(self, rng):
        counts = [100, 140, 180, 160, 120]  # rise then fall
        columns = {"A": [list(rng.normal(0, 1, c)) for c in counts]}
        series = make_series(columns)
        edges = shared_binning(series, "A")
        layout = build_chrono(series, "A", edges)
        totals = [sum(r.count for r in stack.rects) for stack in layout.stacks]
        assert totals == counts
        assert layout.max_count == 180

    def test_conservation_invariants(self, rng):
        for _ in range(25):
            series = random_series(rng, steps=int(rng.integers(2, 5)), attrs=2)
            edges = shared_binning(series, "A0")
            layout = build_chrono(series, "A0", edges)
            for t, stack in enumerate(layout.stacks):
                assert (sum(r.count for r in stack.rects)
                        == series.time_steps[t].record_count)
            for t in range(len(series.time_steps) - 1):
                pair_quads = [q for q in layout.quads if q.time_pair == (t, t + 1)]
                delta_sum = sum(q.delta_count for q in pair_quads)
                assert delta_sum == (series.time_steps[t + 1].record_count
                                     - series.time_steps[t].record_count)

    def test_opacity_scales_with_delta(self):
        series = make_series({
            "A": [[0.1] * 10 + [0.9] * 10,
                  [0.1] * 30 + [0.9] * 11],  # deltas +20, +1
        })
        layout = build_chrono(series, "A", (0.0, 0.5, 1.0))
        big, small = layout.quads
        assert big.opacity == LAYOUT.alpha_max
        assert small.opacity < big.opacity
        assert small.opacity > LAYOUT.alpha_min

    def test_zero_delta_chart_is_opacity_safe(self):
        series = make_series({"A": [[0.2, 0.8], [0.3, 0.7]]})
        layout = build_chrono(series, "A", (0.0, 0.5, 1.0))
        for quad in layout.quads:
            assert quad.opacity == LAYOUT.alpha_min

    def test_bin_labels_show_ranges_in_units(self):
        series = make_series({"D": [[5.0, 10.0, 15.0]]}, units={"D": "µm"})
        layout = build_chrono(series, "D", (5.0, 10.0, 15.0))
        assert layout.bin_labels[0].text == "5.00-10.00"
        assert layout.bin_labels[0].unit == "µm"
        assert layout.bin_labels[1].text == "10.00-15.00"
        assert len(layout.step_labels) == 1

    def test_bin_zero_at_bottom(self, rng):
        series = random_series(rng, steps=2, attrs=1)
        edges = shared_binning(series, "A0")
        layout = build_chrono(series, "A0", edges)
        for stack in layout.stacks:
            ys = [r.y0 for r in stack.rects]
            assert ys == sorted(ys)
            assert stack.rects[0].y0 == 0.0


class TestRankDrift:
    def test_injected_shift_ranks_first(self, rng):
        steady = {f"A{i}": [list(rng.normal(0, 1, 600)) for _ in range(4)]
                  for i in range(4)}
        steady["Jump"] = [
            list(rng.normal(0, 1, 600)),
            list(rng.normal(0, 1, 600)),
            list(rng.normal(4, 1, 600)),
            list(rng.normal(4, 1, 600)),
        ]
        series = make_series(steady)
        ranking = rank_drift(drift_matrix(series))
        attr, pair, value = ranking[0]
        assert attr == list(steady).index("Jump")
        assert pair == (1, 2)
        assert value == 1.0

    def test_all_zero_drift_ranks_nothing(self):
        drift = DriftMatrix(raw=((0.0, 0.0),), normalized=((0.0, 0.0),))
        assert rank_drift(drift) == ()

    def test_full_matrix_cardinality_and_order(self, rng):
        series = random_series(rng, steps=8, attrs=9)
        ranking = rank_drift(drift_matrix(series))
        assert len(ranking) == 63
        values = [v for _, _, v in ranking]
        assert values == sorted(values, reverse=True)

    def test_stable_tie_break(self):
        drift = DriftMatrix(
            raw=((1.0, 1.0), (1.0, 1.0)),
            normalized=((1.0, 1.0), (1.0, 1.0)),
        )
        ranking = rank_drift(drift)
        assert ranking == (
            (0, (0, 1), 1.0), (0, (1, 2), 1.0),
            (1, (0, 1), 1.0), (1, (1, 2), 1.0),
        )

    def test_top_entry_invariant_under_unit_rescaling(self, rng):
        steady = {f"A{i}": [list(rng.normal(0, 1, 500)) for _ in range(3)]
                  for i in range(3)}
        steady["Jump"] = [
            list(rng.normal(0, 1, 500)),
            list(rng.normal(5, 1, 500)),
            list(rng.normal(5, 1, 500)),
        ]
        base_top = rank_drift(drift_matrix(make_series(steady)))[0]
        # express attribute A1 in different units (x 1000)
        rescaled = dict(steady)
        rescaled["A1"] = [[v * 1000.0 for v in step] for step in steady["A1"]]
        rescaled_top = rank_drift(drift_matrix(make_series(rescaled)))[0]
        assert base_top[:2] == rescaled_top[:2]
        assert rescaled_top[2] == 1.0


class TestGoldenLayouts:
    @pytest.mark.parametrize(
        "name", ["mdd_scene.json", "tet_scene.json", "chrono_scene.json"]
    )
    def test_layouts_match_frozen_goldens(self, name):
        from make_goldens import build_scenes

        golden = (GOLDEN_DIR / name).read_bytes().rstrip(b"\n")
        assert build_scenes()[name] == golden, (
            f"layout output changed; regenerate {name} with "
            "python3 tests/make_goldens.py if intentional"
        )
