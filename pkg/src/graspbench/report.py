"""Report writers: trial JSONL, summary CSV, SVG chart, matplotlib figures.

Everything that feeds the determinism guarantee (JSONL, CSV, SVG) is
plain-text with fixed field order and no timestamps; wall-clock data goes
to a separate metadata JSON. The figures directory holds matplotlib
renderings of the same numbers for quick visual inspection.
"""

from __future__ import annotations

import json
import os
import platform
import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .bench import BenchmarkReport

_BAR_COLORS = ("#4878a8", "#e49444", "#6a9f58", "#d1605e", "#85b6b2", "#967662")


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_trials_jsonl(report: BenchmarkReport, path) -> None:
    lines = [json.dumps(t.to_json_dict()) for t in report.trials]
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


def write_summary_csv(report: BenchmarkReport, path) -> None:
    max_poses = max(report.pose_counts.values(), default=0)
    header = ["algorithm", "object"] + [f"pose{i}" for i in range(max_poses)] + ["object_score"]
    rows = [",".join(header)]
    by_key = {}
    for t in report.trials:
        by_key.setdefault((t.algorithm, t.object_id), {})[t.pose_index] = t.score
    for alg in report.algorithms:
        for obj in report.object_ids:
            if (alg, obj) not in by_key:
                continue
            poses = by_key[(alg, obj)]
            cells = [str(poses[i]) if i in poses else "" for i in range(max_poses)]
            rows.append(",".join([alg, obj] + cells + [str(report.object_scores[(alg, obj)])]))
    for alg in report.algorithms:
        rows.append(",".join([alg, "TOTAL"] + [""] * max_poses + [str(report.totals[alg])]))
    _atomic_write_text(Path(path), "\n".join(rows) + "\n")


def write_scores_svg(report: BenchmarkReport, path) -> None:
    """Grouped per-object bar chart as hand-rolled SVG text."""
    objects = report.object_ids
    algorithms = report.algorithms
    max_score = max([3 * n for n in report.pose_counts.values()] + [18])
    bar_w = 18
    group_gap = 24
    group_w = bar_w * len(algorithms) + group_gap
    margin_l, margin_b, margin_t = 56, 72, 28
    plot_h = 220
    width = margin_l + group_w * len(objects) + 20
    height = margin_t + plot_h + margin_b

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" y2="{margin_t + plot_h}" stroke="black"/>',
        f'<line x1="{margin_l}" y1="{margin_t + plot_h}" x2="{width - 10}" y2="{margin_t + plot_h}" stroke="black"/>',
    ]
    for tick in range(0, max_score + 1, 3):
        y = margin_t + plot_h - plot_h * tick / max_score
        parts.append(f'<line x1="{margin_l - 4}" y1="{y:.1f}" x2="{margin_l}" y2="{y:.1f}" stroke="black"/>')
        parts.append(
            f'<text x="{margin_l - 8}" y="{y:.1f}" text-anchor="end" dominant-baseline="middle">{tick}</text>'
        )
    for oi, obj in enumerate(objects):
        gx = margin_l + group_gap / 2 + oi * group_w
        for ai, alg in enumerate(algorithms):
            score = report.object_scores.get((alg, obj), 0)
            h = plot_h * score / max_score
            x = gx + ai * bar_w
            y = margin_t + plot_h - h
            color = _BAR_COLORS[ai % len(_BAR_COLORS)]
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w - 2}" height="{h:.1f}" fill="{color}"/>'
            )
        lx = gx + bar_w * len(algorithms) / 2
        ly = margin_t + plot_h + 12
        parts.append(
            f'<text x="{lx:.1f}" y="{ly}" text-anchor="end" '
            f'transform="rotate(-35 {lx:.1f} {ly})">{obj}</text>'
        )
    for ai, alg in enumerate(algorithms):
        x = margin_l + 12 + ai * 150
        y = height - 14
        color = _BAR_COLORS[ai % len(_BAR_COLORS)]
        parts.append(f'<rect x="{x}" y="{y - 10}" width="12" height="12" fill="{color}"/>')
        parts.append(f'<text x="{x + 16}" y="{y}">{alg} (total {report.totals[alg]})</text>')
    parts.append("</svg>")
    _atomic_write_text(Path(path), "\n".join(parts) + "\n")


def write_figures(report: BenchmarkReport, figures_dir) -> None:
    """Matplotlib renderings of the per-object scores and failure breakdown."""
    figures_dir = Path(figures_dir)
    figures_dir.mkdir(parents=True, exist_ok=True)
    objects = report.object_ids
    algorithms = report.algorithms

    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(objects)), 3.6), dpi=150)
    x = np.arange(len(objects))
    bw = 0.8 / max(len(algorithms), 1)
    for ai, alg in enumerate(algorithms):
        scores = [report.object_scores.get((alg, o), 0) for o in objects]
        ax.bar(x + ai * bw, scores, width=bw, label=f"{alg} ({report.totals[alg]})",
               color=_BAR_COLORS[ai % len(_BAR_COLORS)])
    ax.set_xticks(x + 0.4 - bw / 2)
    ax.set_xticklabels(objects, rotation=35, ha="right")
    ax.set_ylabel("object score")
    ax.set_ylim(0, max([3 * n for n in report.pose_counts.values()] + [18]))
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(figures_dir / "scores.png")
    plt.close(fig)

    reasons: dict = {}
    for t in report.trials:
        if t.failure_reason != "none":
            reasons.setdefault(t.algorithm, {}).setdefault(t.failure_reason, 0)
            reasons[t.algorithm][t.failure_reason] += 1
    fig, ax = plt.subplots(figsize=(6.4, 3.2), dpi=150)
    labels = sorted({r for per in reasons.values() for r in per})
    if labels:
        y = np.arange(len(labels))
        bh = 0.8 / max(len(algorithms), 1)
        for ai, alg in enumerate(algorithms):
            counts = [reasons.get(alg, {}).get(r, 0) for r in labels]
            ax.barh(y + ai * bh, counts, height=bh, label=alg,
                    color=_BAR_COLORS[ai % len(_BAR_COLORS)])
        ax.set_yticks(y + 0.4 - bh / 2)
        ax.set_yticklabels(labels, fontsize=8)
        ax.set_xlabel("failed trials")
        ax.legend(fontsize=8)
    else:
        ax.text(0.5, 0.5, "no failures", ha="center", va="center")
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(figures_dir / "failure_reasons.png")
    plt.close(fig)


def write_metadata(report: BenchmarkReport, path, wall_seconds: float) -> None:
    meta = {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "wall_seconds": wall_seconds,
        "tool_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cpu_count": os.cpu_count(),
        "planner_seconds": {
            f"{t.algorithm}/{t.object_id}/{t.pose_index}": t.planner_time for t in report.trials
        },
    }
    _atomic_write_text(Path(path), json.dumps(meta, indent=2) + "\n")


def write_report(report: BenchmarkReport, output_dir, wall_seconds: float = 0.0) -> dict:
    """Write the full report bundle; returns the paths written."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trials": out / "trials.jsonl",
        "summary": out / "summary.csv",
        "chart": out / "scores.svg",
        "report": out / "report.json",
        "metadata": out / "report_meta.json",
    }
    write_trials_jsonl(report, paths["trials"])
    write_summary_csv(report, paths["summary"])
    write_scores_svg(report, paths["chart"])
    payload = {
        "version": report.version,
        "totals": {a: report.totals[a] for a in report.algorithms},
        "object_scores": {
            f"{alg}/{obj}": report.object_scores[(alg, obj)]
            for (alg, obj) in sorted(report.object_scores)
        },
        "warnings": list(report.warnings),
        "config": report.config_echo,
    }
    _atomic_write_text(paths["report"], json.dumps(payload, indent=2) + "\n")
    write_metadata(report, paths["metadata"], wall_seconds)
    write_figures(report, out / "figures")
    return paths
