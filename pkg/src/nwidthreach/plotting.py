"""Figure rendering for report outputs.

Renders the per-n comparison curves (bound, constructive residual, width
estimates), width profiles, and randomized-check summaries to image files
next to the CSV output.  Uses the Agg backend so rendering works headless;
the CSV remains the canonical, bit-exact artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PLOT_FLOOR = 1e-17


def _floored(values):
    return [max(float(v), PLOT_FLOOR) for v in values]


def save_comparison_figure(report, path) -> str:
    """Plot bound and measured widths against n and save to ``path``."""
    ns = [row.n for row in report.rows]
    resid = _floored(row.constructive_residual for row in report.rows)
    affine = _floored(row.affine_width_est for row in report.rows)
    linear = _floored(row.linear_width_est for row in report.rows)
    valid_ns = [row.n for row in report.rows if row.bound.valid]
    bound = _floored(row.bound.value for row in report.rows if row.bound.valid)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if bound:
        ax.semilogy(valid_ns, bound, "k-s", label="bound", linewidth=1.8)
    ax.semilogy(ns, resid, "C0-o", label="constructive residual")
    ax.semilogy(ns, affine, "C1--^", label="affine width estimate")
    ax.semilogy(ns, linear, "C2:v", label="linear width estimate")
    invalid_ns = [row.n for row in report.rows if not row.bound.valid]
    if invalid_ns:
        ax.axvspan(
            min(invalid_ns) - 0.4, max(invalid_ns) + 0.4,
            color="red", alpha=0.08, label="bound hypothesis fails",
        )
    meta = report.meta
    ax.set_title(
        f"{meta.get('model', 'model')}: dim={meta.get('dim')}, "
        f"T={meta.get('horizon'):g}, r={meta.get('r'):g}, m={meta.get('m')}"
    )
    ax.set_xlabel("subspace dimension n")
    ax.set_ylabel("width / residual")
    ax.set_xticks(ns)
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_profile_figure(profile, path, label: str = "") -> str:
    """Plot linear and affine width estimates of a snapshot cloud."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(profile.ns, _floored(profile.linear_estimates), "C2-o",
                label="linear width estimate")
    ax.semilogy(profile.ns, _floored(profile.affine_estimates), "C1-^",
                label="affine width estimate")
    ax.set_title(label or "width profile")
    ax.set_xlabel("subspace dimension n")
    ax.set_ylabel("width estimate")
    ax.set_xticks(list(profile.ns))
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_check_summary_figure(counts: dict, trials: int, path) -> str:
    """Bar chart of pass counts for the randomized operator checks."""
    names = list(counts)
    passes = [counts[k] for k in names]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    bars = ax.bar(names, passes, color="C0")
    ax.axhline(trials, color="k", linewidth=1.0, linestyle="--",
               label=f"trials = {trials}")
    for bar, value in zip(bars, passes):
        ax.text(bar.get_x() + bar.get_width() / 2, value, str(value),
                ha="center", va="bottom", fontsize=9)
    ax.set_ylim(0, trials * 1.15)
    ax.set_ylabel("passes")
    ax.set_title("randomized check summary")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
