import xml.etree.ElementTree as ET

import pytest

from mogalign import MetricsReport, SweepResult, SweepRow, SweepSpec, boxplot_stats, make_ground_truth
from mogalign.plots import (
    MARGIN_B,
    MARGIN_L,
    MARGIN_R,
    MARGIN_T,
    PANEL_H,
    PANEL_W,
    boxplot_svg,
    density_svg,
    emit_svg,
    linear_map,
    scatter_svg,
)

SVG_NS = "{http://www.w3.org/2000/svg}"


def make_result(rewards_ka, rewards_ak):
    spec = SweepSpec(algorithm="ppo", iteration_values=(10,), n_trials=len(rewards_ka))
    rows = []
    for variant, rewards in (("KA", rewards_ka), ("AK", rewards_ak)):
        for seed, r in enumerate(rewards):
            rows.append(
                SweepRow(
                    variant=variant, algorithm="ppo", beta=1.0, iterations=10,
                    n_final=4, seed=seed,
                    metrics=MetricsReport(r - 3, r - 2, r - 1, r, 1000), failed=False,
                )
            )
    return SweepResult(spec=spec, rows=rows)


class TestLinearMap:
    def test_endpoints(self):
        assert linear_map(0.0, 0.0, 1.0, 10.0, 110.0) == 10.0
        assert linear_map(1.0, 0.0, 1.0, 10.0, 110.0) == 110.0

    def test_midpoint_and_degenerate(self):
        assert linear_map(0.5, 0.0, 1.0, 0.0, 100.0) == 50.0
        assert linear_map(7.0, 3.0, 3.0, 0.0, 100.0) == 50.0


@pytest.fixture(scope="module")
def doc():
    return boxplot_svg(make_result([1.0, 2.0, 3.0, 4.0, 5.0], [4.0, 5.0, 6.0, 7.0, 8.0]))


class TestBoxplotSvg:
    def test_well_formed_xml(self, doc):
        root = ET.fromstring(doc)
        assert root.tag == f"{SVG_NS}svg"

    def test_deterministic_bytes(self, doc):
        again = boxplot_svg(make_result([1.0, 2.0, 3.0, 4.0, 5.0], [4.0, 5.0, 6.0, 7.0, 8.0]))
        assert doc == again

    def test_median_glyph_matches_stats(self, doc):
        """Parse the reward panel's KA box back out and check its median line."""
        root = ET.fromstring(doc)
        panels = [
            g for g in root.iter(f"{SVG_NS}g")
            if g.get("class") == "panel" and g.get("data-metric") == "final_avg_reward"
        ]
        assert len(panels) == 1
        boxes = [
            g for g in panels[0].iter(f"{SVG_NS}g")
            if g.get("class") == "box" and g.get("data-variant") == "KA"
        ]
        assert len(boxes) == 1
        median_lines = [
            el for el in boxes[0] if el.get("class") == "median"
        ]
        y_med = float(median_lines[0].get("y1"))

        # reconstruct the panel's declared axis mapping
        stats_ka = boxplot_stats([1.0, 2.0, 3.0, 4.0, 5.0])
        stats_ak = boxplot_stats([4.0, 5.0, 6.0, 7.0, 8.0])
        lo = min(stats_ka.whisker_low, stats_ak.whisker_low)
        hi = max(stats_ka.whisker_high, stats_ak.whisker_high)
        pad = 0.05 * (hi - lo)
        panel_index = 3  # final_avg_reward is the fourth stacked panel
        top = panel_index * PANEL_H + MARGIN_T
        bottom = panel_index * PANEL_H + PANEL_H - MARGIN_B
        expected = linear_map(stats_ka.median, lo - pad, hi + pad, bottom, top)
        assert y_med == pytest.approx(expected, abs=1e-3)

    def test_box_data_attributes(self, doc):
        root = ET.fromstring(doc)
        boxes = [g for g in root.iter(f"{SVG_NS}g") if g.get("class") == "box"]
        assert len(boxes) == 8  # 4 metrics x 2 variants
        for box in boxes:
            assert box.get("data-setting") == "beta=1.0,iterations=10,n_final=4"
            assert float(box.get("data-vmax")) >= float(box.get("data-vmin"))

    def test_canvas_size(self, doc):
        root = ET.fromstring(doc)
        assert int(root.get("width")) == MARGIN_L + PANEL_W
        assert int(root.get("height")) == PANEL_H * 4
        assert MARGIN_R > 0  # layout constants stay positive


class TestScatterAndDensity:
    def test_scatter_well_formed_with_modes(self):
        root = ET.fromstring(scatter_svg(make_ground_truth(), n=200, seed=0))
        modes = [c for c in root.iter(f"{SVG_NS}circle") if c.get("class") == "mode"]
        samples = [c for c in root.iter(f"{SVG_NS}circle") if c.get("class") == "sample"]
        assert len(modes) == 8
        assert len(samples) == 200

    def test_density_well_formed(self):
        doc = density_svg([("gt", make_ground_truth())], n=2000, seed=0)
        root = ET.fromstring(doc)
        bars = [r for r in root.iter(f"{SVG_NS}rect") if r.get("class") == "bar"]
        assert bars
        assert all(b.get("data-label") == "gt" for b in bars)

    def test_deterministic(self):
        a = scatter_svg(make_ground_truth(), n=100, seed=3)
        b = scatter_svg(make_ground_truth(), n=100, seed=3)
        assert a == b


class TestEmitSvg:
    def test_writes_boxplot(self, tmp_path):
        out = emit_svg(make_result([1.0, 2.0], [3.0, 4.0]), "boxplot", tmp_path / "box.svg")
        assert out.exists()
        ET.fromstring(out.read_text())

    def test_scatter_requires_model(self, tmp_path):
        with pytest.raises(ValueError):
            emit_svg(None, "scatter", tmp_path / "s.svg")

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ValueError):
            emit_svg(None, "pie", tmp_path / "p.svg")
