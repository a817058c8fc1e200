"""Run reports: hand-rolled SVG charts plus a markdown index.

Charts are plain SVG text (no rendering dependency, diff-friendly) and a
pure function of the run files: the same run directory always yields the
same bytes. Missing artifacts are listed in the report, never fatal.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 40, 50


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _svg_header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="monospace" font-size="12">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]


class ChartFrame:
    """Maps data coordinates into the plot rectangle and draws the axes."""

    def __init__(self, x_lo, x_hi, y_lo, y_hi, x_label, y_label):
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        if y_hi <= y_lo:
            y_hi = y_lo + 1.0
        self.x_lo, self.x_hi, self.y_lo, self.y_hi = x_lo, x_hi, y_lo, y_hi
        self.x_label, self.y_label = x_label, y_label

    def px(self, x: float) -> float:
        span = W - MARGIN_L - MARGIN_R
        return MARGIN_L + (x - self.x_lo) / (self.x_hi - self.x_lo) * span

    def py(self, y: float) -> float:
        span = H - MARGIN_T - MARGIN_B
        return H - MARGIN_B - (y - self.y_lo) / (self.y_hi - self.y_lo) * span

    def axes(self) -> list[str]:
        parts = [
            f'<line x1="{MARGIN_L}" y1="{H - MARGIN_B}" x2="{W - MARGIN_R}" '
            f'y2="{H - MARGIN_B}" stroke="black"/>',
            f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" '
            f'y2="{H - MARGIN_B}" stroke="black"/>',
        ]
        for t in _ticks(self.x_lo, self.x_hi):
            x = self.px(t)
            parts.append(
                f'<line x1="{x:.1f}" y1="{H - MARGIN_B}" x2="{x:.1f}" '
                f'y2="{H - MARGIN_B + 5}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{x:.1f}" y="{H - MARGIN_B + 18}" '
                f'text-anchor="middle">{t:.3g}</text>'
            )
        for t in _ticks(self.y_lo, self.y_hi):
            y = self.py(t)
            parts.append(
                f'<line x1="{MARGIN_L - 5}" y1="{y:.1f}" x2="{MARGIN_L}" '
                f'y2="{y:.1f}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{MARGIN_L - 8}" y="{y + 4:.1f}" text-anchor="end">{t:.3g}</text>'
            )
        parts.append(
            f'<text x="{(MARGIN_L + W - MARGIN_R) / 2:.1f}" y="{H - 12}" '
            f'text-anchor="middle">{self.x_label}</text>'
        )
        parts.append(
            f'<text x="16" y="{(MARGIN_T + H - MARGIN_B) / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {(MARGIN_T + H - MARGIN_B) / 2:.1f})">{self.y_label}</text>'
        )
        return parts


def line_chart(path: Path, title: str, x_label: str, y_label: str,
               series: dict[str, tuple[list[float], list[float]]],
               vmarks: list[float] | None = None) -> None:
    """Multi-series line chart; vmarks draws dashed vertical reference lines."""
    all_x = [x for xs, _ in series.values() for x in xs]
    all_y = [y for _, ys in series.values() for y in ys]
    if not all_x:
        all_x, all_y = [0.0, 1.0], [0.0, 1.0]
    frame = ChartFrame(min(all_x), max(all_x), min(all_y), max(all_y), x_label, y_label)
    parts = _svg_header(title) + frame.axes()
    for mark in vmarks or []:
        x = frame.px(mark)
        parts.append(
            f'<line x1="{x:.1f}" y1="{MARGIN_T}" x2="{x:.1f}" y2="{H - MARGIN_B}" '
            f'stroke="gray" stroke-dasharray="4 3"/>'
        )
        parts.append(f'<text x="{x + 3:.1f}" y="{MARGIN_T + 12}">{mark:g}</text>')
    for i, (name, (xs, ys)) in enumerate(sorted(series.items())):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{frame.px(x):.1f},{frame.py(y):.1f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{W - MARGIN_R - 5}" y="{MARGIN_T + 14 * (i + 1)}" '
            f'text-anchor="end" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def bar_chart(path: Path, title: str, y_label: str,
              groups: dict[str, dict[str, float]]) -> None:
    """Grouped bars: groups[category][series] = value."""
    categories = sorted(groups)
    series_names = sorted({s for g in groups.values() for s in g})
    top = max((v for g in groups.values() for v in g.values()), default=1.0)
    frame = ChartFrame(0.0, float(len(categories)), 0.0, top * 1.1 or 1.0, "", y_label)
    parts = _svg_header(title) + frame.axes()
    slot = (W - MARGIN_L - MARGIN_R) / max(1, len(categories))
    bar_w = slot * 0.8 / max(1, len(series_names))
    for ci, cat in enumerate(categories):
        for si, sname in enumerate(series_names):
            v = groups[cat].get(sname, 0.0)
            x = MARGIN_L + ci * slot + slot * 0.1 + si * bar_w
            y = frame.py(v)
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" '
                f'height="{H - MARGIN_B - y:.1f}" fill="{PALETTE[si % len(PALETTE)]}"/>'
            )
        parts.append(
            f'<text x="{MARGIN_L + ci * slot + slot / 2:.1f}" y="{H - MARGIN_B + 18}" '
            f'text-anchor="middle">{cat}</text>'
        )
    for si, sname in enumerate(series_names):
        parts.append(
            f'<text x="{W - MARGIN_R - 5}" y="{MARGIN_T + 14 * (si + 1)}" '
            f'text-anchor="end" fill="{PALETTE[si % len(PALETTE)]}">{sname}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def histogram(path: Path, title: str, x_label: str, values: list[float], bins: int = 20) -> None:
    if not values:
        values = [0.0]
    lo, hi = min(values), max(values)
    if hi <= lo:
        hi = lo + 1.0
    width = (hi - lo) / bins
    counts = [0] * bins
    for v in values:
        counts[min(bins - 1, int((v - lo) / width))] += 1
    frame = ChartFrame(lo, hi, 0.0, max(counts) * 1.1, x_label, "count")
    parts = _svg_header(title) + frame.axes()
    for i, c in enumerate(counts):
        x0 = frame.px(lo + i * width)
        x1 = frame.px(lo + (i + 1) * width)
        y = frame.py(float(c))
        parts.append(
            f'<rect x="{x0:.1f}" y="{y:.1f}" width="{x1 - x0:.1f}" '
            f'height="{H - MARGIN_B - y:.1f}" fill="{PALETTE[0]}"/>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def generate_report(run_dir: str | Path) -> Path:
    """Build report/report.md and SVG charts from whatever the run left
    behind; absent artifacts are listed as missing."""
    run_dir = Path(run_dir)
    out = run_dir / "report"
    out.mkdir(parents=True, exist_ok=True)
    sections: list[str] = ["# Run report", ""]
    missing: list[str] = []

    pretext_log = run_dir / "pretext" / "log.csv"
    if pretext_log.exists():
        rows = _read_csv(pretext_log)
        loss_series, acc_series = {}, {}
        for split in ("train", "val"):
            pts = [(int(r["epoch"]), float(r["loss"]), float(r["accuracy"]))
                   for r in rows if r["split"] == split]
            if pts:
                loss_series[split] = ([p[0] for p in pts], [p[1] for p in pts])
                acc_series[split] = ([p[0] for p in pts], [p[2] for p in pts])
        line_chart(out / "pretext_loss.svg", "Pretext loss", "epoch", "loss", loss_series)
        line_chart(out / "pretext_accuracy.svg", "Pretext accuracy", "epoch",
                   "accuracy", acc_series)
        final = [r for r in rows if r["split"] == "val"]
        sections += [
            "## Pretext training",
            "",
            f"- epochs logged: {len(final)}",
            f"- final val accuracy: {final[-1]['accuracy'] if final else 'n/a'}",
            "",
            "![loss](pretext_loss.svg) ![accuracy](pretext_accuracy.svg)",
            "",
        ]
    else:
        missing.append(str(pretext_log.relative_to(run_dir)))

    labels_dir = run_dir / "labels"
    label_files = sorted(labels_dir.glob("*.csv")) if labels_dir.exists() else []
    if label_files:
        counts = {z: {"raw": 0.0, "smoothed": 0.0} for z in ("left", "right", "center")}
        for f in label_files:
            for row in _read_csv(f):
                counts[row["zone"]]["raw"] += 1
                counts[row["zone_smoothed"]]["smoothed"] += 1
        bar_chart(out / "zone_distribution.svg", "Zone distribution", "frames", counts)
        sections += [
            "## Pseudo-label distribution",
            "",
            f"- videos: {len(label_files)}",
            f"- frames: {int(sum(c['raw'] for c in counts.values()))}",
            "",
            "![zones](zone_distribution.svg)",
            "",
        ]
    else:
        missing.append("labels/*.csv")

    pupil_report = run_dir / "pupil_eval" / "report.csv"
    if pupil_report.exists():
        errors = sorted(float(r["e"]) for r in _read_csv(pupil_report))
        if errors:
            grid = [i / 200 * 0.3 for i in range(201)]
            frac = []
            j = 0
            for t in grid:
                while j < len(errors) and errors[j] <= t:
                    j += 1
                frac.append(j / len(errors))
            line_chart(
                out / "jesorsky_curve.svg",
                "Pupil accuracy vs normalized-error threshold",
                "threshold",
                "fraction of samples",
                {"accuracy": (grid, frac)},
                vmarks=[0.05, 0.10, 0.25],
            )
            hits = {t: sum(1 for e in errors if e <= t) / len(errors) for t in (0.05, 0.10, 0.25)}
            sections += [
                "## Pupil localization",
                "",
                f"- samples: {len(errors)}",
            ] + [f"- accuracy at e <= {t}: {hits[t]:.4f}" for t in (0.05, 0.10, 0.25)] + [
                "",
                "![jesorsky](jesorsky_curve.svg)",
                "",
            ]
    else:
        missing.append("pupil_eval/report.csv")

    adapt_dirs = sorted((run_dir / "adapt").glob("*")) if (run_dir / "adapt").exists() else []
    plotted_hist = False
    for d in adapt_dirs:
        metrics = d / "metrics.json"
        if metrics.exists():
            data = json.loads(metrics.read_text())
            sections += [f"## Adaptation: {d.name}", ""]
            sections += [f"- {k}: {v}" for k, v in sorted(data.items())]
            sections.append("")
        errs_file = d / "val_errors.csv"
        if errs_file.exists() and not plotted_hist:
            errs = [float(r["angular_error_deg"]) for r in _read_csv(errs_file)]
            histogram(out / "angular_error_hist.svg",
                      f"Validation angular error ({d.name})", "degrees", errs)
            sections += ["![angular](angular_error_hist.svg)", ""]
            plotted_hist = True
    if not adapt_dirs:
        missing.append("adapt/*")

    if missing:
        sections += ["## Missing artifacts", ""] + [f"- {m}" for m in missing] + [""]
    (out / "report.md").write_text("\n".join(sections))
    return out / "report.md"
