"""Rendering metrics into the per-category table layout.

One table per feature category, metric names as rows and systems as
columns, every value rounded to 3 decimals at render time only. The
optional reference overlay appends the published clinical-study columns
(see :mod:`semio.reference`) clearly labeled as non-reproducible.
"""

from __future__ import annotations

import json
from pathlib import Path

from .catalog import Catalog
from .errors import EvaluationError
from .evaluate import MetricsReport, StyleComparison
from .reference import REFERENCE_LABEL, reference_cell, reference_systems

_METRIC_ROWS = ("accuracy", "precision", "recall", "f1")


def _fmt(value: float | None) -> str:
    return "  -  " if value is None else f"{value:.3f}"


def render_category_table(report: MetricsReport, catalog: Catalog, category: str,
                          include_reference: bool = False) -> str:
    features = [f for f in catalog.by_category(category) if f.feature_id in report.features()]
    if not features:
        return ""
    systems = report.systems()
    ref_systems = reference_systems(category) if include_reference else ()
    lines = [f"== {category} features =="]
    if include_reference:
        lines.append(f"   (columns after '||' are {REFERENCE_LABEL})")
    for feature in features:
        lines.append(f"\n-- {feature.display_name} ({feature.feature_id}) --")
        header = ["metric".ljust(10)] + [s.ljust(18) for s in systems]
        if ref_systems:
            header.append("||")
            header += [s.ljust(12) for s in ref_systems]
        lines.append("  ".join(header).rstrip())
        for row_idx, metric_name in enumerate(_METRIC_ROWS):
            cells = [metric_name.ljust(10)]
            for system in systems:
                m = report.get(feature.feature_id, system)
                value = None if m is None else getattr(m, metric_name)
                cells.append(_fmt(value).ljust(18))
            if ref_systems:
                cells.append("||")
                for system in ref_systems:
                    ref = reference_cell(feature.feature_id, system)
                    cells.append(_fmt(None if ref is None else ref[row_idx]).ljust(12))
            lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def render_report(report: MetricsReport, catalog: Catalog,
                  include_reference: bool = False) -> str:
    if not report.entries:
        raise EvaluationError("nothing to report: empty metrics")
    parts = [render_category_table(report, catalog, cat, include_reference)
             for cat in ("facial", "limb_body", "audio")]
    return "\n".join(p for p in parts if p)


def report_to_json(report: MetricsReport) -> dict:
    out: dict[str, dict[str, dict[str, float]]] = {}
    for (feature_id, system_id), m in sorted(report.entries.items()):
        out.setdefault(feature_id, {})[system_id] = {
            "accuracy": round(m.accuracy, 3), "precision": round(m.precision, 3),
            "recall": round(m.recall, 3), "f1": round(m.f1, 3),
        }
        counts = report.counts.get((feature_id, system_id))
        if counts is not None:
            out[feature_id][system_id]["counts"] = {
                "tp": counts.tp, "fp": counts.fp, "tn": counts.tn, "fn": counts.fn}
    return out


def write_report_files(report: MetricsReport, catalog: Catalog, out_dir: str | Path,
                       stem: str = "metrics", include_reference: bool = False) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text_path = out_dir / f"{stem}.txt"
    json_path = out_dir / f"{stem}.json"
    text_path.write_text(render_report(report, catalog, include_reference), encoding="utf-8")
    json_path.write_text(json.dumps(report_to_json(report), indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    return text_path, json_path


def render_enhancement_delta(raw: MetricsReport, enhanced: MetricsReport,
                             catalog: Catalog) -> str:
    """Per-feature F1 delta between the raw and enhanced runs."""
    lines = ["== enhancement effect (F1 enhanced - F1 raw) =="]
    improved = 0
    total = 0
    for feature in catalog:
        raw_f1 = [m.f1 for (f, _), m in raw.entries.items() if f == feature.feature_id]
        enh_f1 = [m.f1 for (f, _), m in enhanced.entries.items() if f == feature.feature_id]
        if not raw_f1 or not enh_f1:
            continue
        delta = enh_f1[0] - raw_f1[0]
        total += 1
        improved += delta > 0
        lines.append(f"{feature.feature_id.ljust(26)} raw {_fmt(raw_f1[0])}  "
                     f"enhanced {_fmt(enh_f1[0])}  delta {delta:+.3f}")
    lines.append(f"\nimproved on {improved}/{total} features")
    return "\n".join(lines) + "\n"


def render_style_comparison(comparison: StyleComparison) -> str:
    lines = [f"== prompt-style comparison (baseline: {comparison.baseline_style}) =="]
    styles = sorted(comparison.deltas)
    header = ["feature".ljust(30), f"F1 {comparison.baseline_style}".ljust(12)]
    for style in styles:
        header += [f"F1 {style}".ljust(14), "delta".ljust(8)]
    lines.append("  ".join(header).rstrip())
    base = comparison.f1_by_style[comparison.baseline_style]
    for row in sorted(base):
        cells = [row.ljust(30), _fmt(base[row]).ljust(12)]
        for style in styles:
            cells += [_fmt(comparison.f1_by_style[style][row]).ljust(14),
                      f"{comparison.deltas[style][row]:+.3f}".ljust(8)]
        lines.append("  ".join(cells).rstrip())
    for style, rows in sorted(comparison.zero_f1.items()):
        if rows:
            lines.append(f"zero-F1 under {style}: {', '.join(rows)}")
    return "\n".join(lines) + "\n"
