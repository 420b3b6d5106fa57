"""Figure rendering for benchmark reports (headless backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_run_figure(result, path: str | Path) -> None:
    """Per-image precision/recall scatter next to an F1 histogram."""
    scores = [row.score for row in result.rows]
    precision = [s.precision for s in scores]
    recall = [s.recall for s in scores]
    f1 = [s.f1 for s in scores]
    fig, (ax_pr, ax_hist) = plt.subplots(1, 2, figsize=(10, 4.5))
    ax_pr.scatter(recall, precision, s=18, alpha=0.7, edgecolors="none")
    ax_pr.set_xlabel("recall")
    ax_pr.set_ylabel("precision")
    ax_pr.set_xlim(0, 1)
    ax_pr.set_ylim(0, 1)
    ax_pr.set_title("per-image precision vs recall")
    ax_pr.grid(alpha=0.3)
    ax_hist.hist(f1, bins=20, range=(0, 1), color="tab:blue", alpha=0.8)
    ax_hist.axvline(result.pooled.f1, color="tab:red", linestyle="--",
                    label=f"pooled F1 = {result.pooled.f1:.3f}")
    ax_hist.set_xlabel("F1")
    ax_hist.set_ylabel("images")
    ax_hist.set_title("per-image F1")
    ax_hist.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_figure(combos, path: str | Path) -> None:
    """F1 across the grid: line for one axis, heatmap for two, index plot otherwise."""
    if not combos:
        raise ValueError("nothing to plot")
    axis_names = sorted(combos[0].values)
    f1 = [c.result.pooled.f1 for c in combos]
    fig, ax = plt.subplots(figsize=(7, 5))
    if len(axis_names) == 1:
        name = axis_names[0]
        xs = [c.values[name] for c in combos]
        ax.plot(xs, f1, marker="o")
        ax.set_xlabel(name)
        ax.set_ylabel("pooled F1")
        ax.grid(alpha=0.3)
    elif len(axis_names) == 2:
        a, b = axis_names
        avals = sorted({c.values[a] for c in combos})
        bvals = sorted({c.values[b] for c in combos})
        grid = [[float("nan")] * len(bvals) for _ in avals]
        for c in combos:
            grid[avals.index(c.values[a])][bvals.index(c.values[b])] = c.result.pooled.f1
        im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(bvals)), [str(v) for v in bvals])
        ax.set_yticks(range(len(avals)), [str(v) for v in avals])
        ax.set_xlabel(b)
        ax.set_ylabel(a)
        fig.colorbar(im, ax=ax, label="pooled F1")
    else:
        ax.plot(range(len(f1)), f1, marker="o")
        ax.set_xlabel("grid combination index")
        ax.set_ylabel("pooled F1")
        ax.grid(alpha=0.3)
    ax.set_title("parameter sweep")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_compare_figure(rows: list[dict], path: str | Path) -> None:
    """Scatter of per-image F1, run B against run A, with the identity line."""
    f1_a = [r["f1_a"] for r in rows]
    f1_b = [r["f1_b"] for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    ax.plot([0, 1], [0, 1], color="gray", linewidth=1, linestyle="--")
    ax.scatter(f1_a, f1_b, s=18, alpha=0.7, edgecolors="none")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("F1 (run A)")
    ax.set_ylabel("F1 (run B)")
    ax.set_title("per-image F1 comparison")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
