"""Figure rendering for the evaluation/ranking report path."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import MetricReport  # noqa: E402
from .ranking import METRICS, RankTable  # noqa: E402

# empty metadata keeps PNG bytes deterministic across runs
_SAVEFIG_KW = {"dpi": 110, "metadata": {"Software": None}}


def render_report_figures(reports: list[MetricReport], table: RankTable,
                          out_dir) -> list[Path]:
    """Render the rank-score bar chart and per-metric distributions as PNGs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    # rank scores, best (lowest) first
    pairs = table.sorted_methods()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    names = [p[0] for p in pairs]
    ax.barh(range(len(pairs)), [p[1] for p in pairs], color="#4878a8")
    ax.set_yticks(range(len(pairs)), names)
    ax.invert_yaxis()
    ax.set_xlabel("rank score (lower is better)")
    ax.set_title("Method ranking")
    fig.tight_layout()
    path = out_dir / "rank_scores.png"
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
    written.append(path)

    # per-metric value distributions across cases
    by_method: dict[str, dict[str, list[float]]] = {}
    for r in reports:
        slot = by_method.setdefault(r.method_id, {m: [] for m in METRICS})
        slot["mse"].append(r.mse)
        slot["psnr"].append(0.0 if math.isinf(r.psnr) else r.psnr)
        slot["ssim"].append(r.ssim)

    fig, axes = plt.subplots(1, len(METRICS), figsize=(4 * len(METRICS), 3.5))
    methods = sorted(by_method)
    for ax, metric in zip(axes, METRICS):
        ax.boxplot([by_method[m][metric] for m in methods],
                   tick_labels=methods)
        ax.set_title(metric.upper())
        ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    path = out_dir / "metric_distributions.png"
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
    written.append(path)
    return written
