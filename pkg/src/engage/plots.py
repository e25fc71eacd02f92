"""Figure rendering for the report path."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_correlation_curve(
    curve: Sequence[tuple[float, float]],
    pearson: float,
    out_path: Path | str,
) -> Path:
    """Plot the attention-percentile vs mean-scroll-depth curve to a file."""
    out_path = Path(out_path)
    xs = [p for p, _ in curve]
    ys = [d for _, d in curve]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(xs, ys, marker="o", color="#2c6fbb", linewidth=1.5)
    ax.set_xlabel("attention span percentile")
    ax.set_ylabel("mean scrolling depth (%)")
    ax.set_title(f"Attention span vs scrolling depth (Pearson r = {pearson:.3f})")
    ax.set_xlim(0, 100)
    ax.set_ylim(0, 105)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_method_comparison(report_dict: dict, out_path: Path | str) -> Path:
    """Bar chart pairs for attention seconds and impression counts."""
    out_path = Path(out_path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4.2))

    attention = [
        report_dict.get("pageLoadAttentionSeconds") or 0.0,
        report_dict.get("pingAttentionSeconds") or 0.0,
    ]
    ax1.bar(["page load", "pinging"], attention, color=["#b6543f", "#2c6fbb"])
    ax1.set_ylabel("attention seconds")
    ratio = report_dict.get("attentionRatio")
    ax1.set_title("Attention by method" + (f" (x{ratio:.2f})" if ratio else ""))

    impressions = [
        report_dict.get("pageLoadImpressions") or 0,
        report_dict.get("visibleImpressions") or 0,
    ]
    ax2.bar(["page load", "visible"], impressions, color=["#b6543f", "#2c6fbb"])
    ax2.set_ylabel("impressions")
    reduction = report_dict.get("impressionReductionPercent")
    ax2.set_title(
        "Impressions by method" + (f" (-{reduction:.2f}%)" if reduction is not None else "")
    )

    for ax in (ax1, ax2):
        ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
