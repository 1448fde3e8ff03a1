"""Dependency-free SVG rendering of sweep box plots, sample scatters, and
reward histograms.

All coordinates come from :func:`linear_map`, the one declared axis
transform, so tests can parse glyph geometry back out of the file and check
it against :func:`mogalign.sweep.boxplot_stats`. Output bytes are
deterministic for fixed input.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .models import GroundTruthSpec, MoGParams, sample
from .reward import RewardSpec, effective_reward
from .sweep import METRIC_NAMES, SweepResult, boxplot_stats, group_rows

PANEL_W = 760
PANEL_H = 220
MARGIN_L = 70
MARGIN_R = 20
MARGIN_T = 30
MARGIN_B = 40
BOX_W = 26

VARIANT_FILL = {"KA": "#d62728", "AK": "#1f77b4"}


def linear_map(v: float, vmin: float, vmax: float, px0: float, px1: float) -> float:
    """Map a data value linearly onto pixel coordinates."""
    if vmax == vmin:
        return 0.5 * (px0 + px1)
    return px0 + (v - vmin) / (vmax - vmin) * (px1 - px0)


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _svg_doc(width: int, height: int, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _text(x: float, y: float, s: str, size: int = 11, anchor: str = "middle") -> str:
    return (
        f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" '
        f'text-anchor="{anchor}" font-family="sans-serif">{s}</text>'
    )


def _boxplot_panel(
    metric: str, groups: dict, y_offset: int
) -> list[str]:
    """One stacked panel: boxes for every (setting, variant) cell of a metric."""
    cells = []
    for key, by_variant in groups.items():
        for variant in ("KA", "AK"):
            rows = [r for r in by_variant.get(variant, []) if not r.failed]
            values = [getattr(r.metrics, metric) for r in rows]
            if values:
                cells.append((key, variant, boxplot_stats(values)))

    body = [f'<g class="panel" data-metric="{metric}">']
    top = y_offset + MARGIN_T
    bottom = y_offset + PANEL_H - MARGIN_B
    left = MARGIN_L
    right = MARGIN_L + PANEL_W - MARGIN_R
    body.append(_text((left + right) / 2, y_offset + 16, metric, size=13))
    body.append(
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>'
    )
    body.append(
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>'
    )
    if not cells:
        body.append("</g>")
        return body

    lo = min(min(s.whisker_low, *(s.outliers or (s.whisker_low,))) for _, _, s in cells)
    hi = max(max(s.whisker_high, *(s.outliers or (s.whisker_high,))) for _, _, s in cells)
    pad = 0.05 * (hi - lo) if hi > lo else 1.0
    vmin, vmax = lo - pad, hi + pad

    def ymap(v: float) -> float:
        return linear_map(v, vmin, vmax, bottom, top)

    for tick in np.linspace(vmin, vmax, 5):
        y = ymap(float(tick))
        body.append(
            f'<line x1="{left - 4}" y1="{_fmt(y)}" x2="{left}" y2="{_fmt(y)}" stroke="black"/>'
        )
        body.append(_text(left - 8, y + 4, f"{tick:.3g}", size=9, anchor="end"))

    slot = (right - left) / len(cells)
    for i, (key, variant, s) in enumerate(cells):
        cx = left + (i + 0.5) * slot
        x0, x1 = cx - BOX_W / 2, cx + BOX_W / 2
        fill = VARIANT_FILL[variant]
        y_q1, y_q3, y_med = ymap(s.q1), ymap(s.q3), ymap(s.median)
        y_wlo, y_whi = ymap(s.whisker_low), ymap(s.whisker_high)
        body.append(
            f'<g class="box" data-setting="{key}" data-variant="{variant}" '
            f'data-vmin="{s.whisker_low!r}" data-vmax="{s.whisker_high!r}">'
        )
        body.append(
            f'<line x1="{_fmt(cx)}" y1="{_fmt(y_wlo)}" x2="{_fmt(cx)}" y2="{_fmt(y_q1)}" stroke="black"/>'
        )
        body.append(
            f'<line x1="{_fmt(cx)}" y1="{_fmt(y_q3)}" x2="{_fmt(cx)}" y2="{_fmt(y_whi)}" stroke="black"/>'
        )
        body.append(
            f'<rect class="iqr" x="{_fmt(x0)}" y="{_fmt(y_q3)}" width="{_fmt(BOX_W)}" '
            f'height="{_fmt(y_q1 - y_q3)}" fill="{fill}" fill-opacity="0.5" stroke="black"/>'
        )
        body.append(
            f'<line class="median" x1="{_fmt(x0)}" y1="{_fmt(y_med)}" x2="{_fmt(x1)}" '
            f'y2="{_fmt(y_med)}" stroke="black" stroke-width="2"/>'
        )
        for w_y in (y_wlo, y_whi):
            body.append(
                f'<line x1="{_fmt(cx - BOX_W / 4)}" y1="{_fmt(w_y)}" '
                f'x2="{_fmt(cx + BOX_W / 4)}" y2="{_fmt(w_y)}" stroke="black"/>'
            )
        for o in s.outliers:
            body.append(
                f'<circle cx="{_fmt(cx)}" cy="{_fmt(ymap(o))}" r="2.5" fill="none" stroke="black"/>'
            )
        body.append("</g>")
        body.append(_text(cx, bottom + 14, variant, size=9))
        body.append(_text(cx, bottom + 26, key.replace(",", " "), size=7))
    body.append("</g>")
    return body


def boxplot_svg(result: SweepResult) -> str:
    groups = group_rows(result)
    body: list[str] = []
    for i, metric in enumerate(METRIC_NAMES):
        body.extend(_boxplot_panel(metric, groups, i * PANEL_H))
    return _svg_doc(MARGIN_L + PANEL_W, PANEL_H * len(METRIC_NAMES), body)


def scatter_svg(
    model: MoGParams,
    n: int = 2000,
    seed: int = 0,
    gt_spec: GroundTruthSpec = GroundTruthSpec(),
) -> str:
    """Samples from a model over the ground-truth mode layout, target ringed."""
    rng = np.random.default_rng(seed)
    pts = sample(model, 1.0, n, rng)
    size = 480
    lo, hi = -3.0, 3.0

    def px(v: float) -> float:
        return linear_map(v, lo, hi, 40, size - 40)

    def py(v: float) -> float:
        return linear_map(v, lo, hi, size - 40, 40)

    body = []
    for x, y in pts:
        body.append(
            f'<circle class="sample" cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="1.5" '
            'fill="#1f77b4" fill-opacity="0.35"/>'
        )
    centers = gt_spec.mode_centers()
    radius_px = 2.0 * np.sqrt(gt_spec.variance) * (size - 80) / (hi - lo)
    for i, (x, y) in enumerate(centers):
        stroke = "#2ca02c" if i == gt_spec.target_index else "#444444"
        width = 3 if i == gt_spec.target_index else 1
        body.append(
            f'<circle class="mode" cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" '
            f'r="{_fmt(radius_px)}" fill="none" stroke="{stroke}" stroke-width="{width}"/>'
        )
    return _svg_doc(size, size, body)


def density_svg(
    models: list[tuple[str, MoGParams]],
    spec: RewardSpec = RewardSpec(),
    n: int = 100000,
    seed: int = 0,
    bins: int = 40,
) -> str:
    """Histogram of normalized rewards for one or more models, overlaid."""
    width, height = 640, 360
    left, right, top, bottom = 60, width - 20, 30, height - 40
    edges = np.linspace(0.0, 1.0, bins + 1)
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")

    hists = []
    for label, model in models:
        rng = np.random.default_rng(seed)
        x = sample(model, 1.0, n, rng)
        r = np.asarray(effective_reward(x, spec)) / spec.scale
        hist, _ = np.histogram(np.clip(r, 0.0, 1.0), bins=edges)
        hists.append((label, hist / n))
    peak = max(h.max() for _, h in hists) or 1.0

    body = [
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
        _text((left + right) / 2, height - 8, "normalized reward", size=11),
    ]
    for j, (label, hist) in enumerate(hists):
        color = palette[j % len(palette)]
        for i, frac in enumerate(hist):
            if frac == 0:
                continue
            x0 = linear_map(edges[i], 0.0, 1.0, left, right)
            x1 = linear_map(edges[i + 1], 0.0, 1.0, left, right)
            y = linear_map(frac, 0.0, peak, bottom, top)
            body.append(
                f'<rect class="bar" data-label="{label}" x="{_fmt(x0)}" y="{_fmt(y)}" '
                f'width="{_fmt(x1 - x0)}" height="{_fmt(bottom - y)}" '
                f'fill="{color}" fill-opacity="0.45"/>'
            )
        body.append(_text(right - 80, top + 14 + 14 * j, label, size=11, anchor="start"))
    return _svg_doc(width, height, body)


def emit_svg(
    result: SweepResult | None,
    kind: str,
    out_path,
    *,
    model: MoGParams | None = None,
    models: list[tuple[str, MoGParams]] | None = None,
    spec: RewardSpec = RewardSpec(),
    seed: int = 0,
) -> Path:
    """Render one figure kind to out_path.

    boxplot consumes a SweepResult (i.e. results.csv); scatter and density
    consume model artifacts instead, since sample-level figures cannot be
    reconstructed from summary rows.
    """
    if kind == "boxplot":
        if result is None:
            raise ValueError("boxplot requires a SweepResult")
        doc = boxplot_svg(result)
    elif kind == "scatter":
        if model is None:
            raise ValueError("scatter requires a model")
        doc = scatter_svg(model, seed=seed)
    elif kind == "density":
        pairs = models if models is not None else ([("model", model)] if model else None)
        if not pairs:
            raise ValueError("density requires at least one model")
        doc = density_svg(pairs, spec=spec, seed=seed)
    else:
        raise ValueError(f"unknown figure kind {kind!r}")
    out = Path(out_path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(doc)
    except OSError as exc:
        raise OSError(f"cannot write figure to {out}: {exc}") from exc
    return out
