"""Matplotlib renderings of training traces, written next to the delimited output."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_alm_trace(trace, out_dir, stem="alm"):
    """Loss and feasibility/penalty figures from an outer-loop trace.

    Returns the list of written file paths.
    """
    if not trace:
        return []
    k = [row["k"] for row in trace]
    paths = []

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(k, [max(row["f"], 1e-300) for row in trace], "o-", color="tab:blue")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("objective value")
    ax.set_title("Training objective")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    p = f"{out_dir}/{stem}_loss.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    feas = [max(row["feas_inf"], 1e-300) for row in trace]
    ax.semilogy(k, feas, "o-", color="tab:red", label="feasibility")
    ax2 = ax.twinx()
    ax2.semilogy(k, [row["beta"] for row in trace], "s--", color="tab:gray", label="penalty")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("constraint violation (max-norm)")
    ax2.set_ylabel("penalty parameter")
    lines = ax.get_lines() + ax2.get_lines()
    ax.legend(lines, [ln.get_label() for ln in lines], loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    p = f"{out_dir}/{stem}_feasibility.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)
    return paths


def render_baseline_trace(trace, out_dir, stem="baseline"):
    if not trace:
        return []
    epochs = [row["epoch"] for row in trace]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(epochs, [max(row["train_mse"], 1e-300) for row in trace], label="train")
    if np.isfinite(trace[0]["test_mse"]):
        ax.semilogy(epochs, [max(row["test_mse"], 1e-300) for row in trace], label="test")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    p = f"{out_dir}/{stem}_mse.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    return [p]


def render_benchmark(rows, out_dir, stem="benchmark"):
    """Grouped bars: mean training MSE per grid cell for each trainer."""
    if not rows:
        return []
    labels = [f"d0={r['d0']}, noise={r['delta0']}" for r in rows]
    idx = np.arange(len(rows))
    width = 0.27
    fig, ax = plt.subplots(figsize=(1.6 * len(rows) + 2.5, 3.6))
    for off, (key, name) in enumerate(
        [("alm_train_mse", "ALM"), ("adam_train_mse", "Adam"), ("sgd_train_mse", "SGD")]
    ):
        vals = [r[key] for r in rows]
        ax.bar(idx + (off - 1) * width, vals, width, label=name)
    ax.set_yscale("log")
    ax.set_xticks(idx)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("mean training MSE")
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", which="both", alpha=0.3)
    fig.tight_layout()
    p = f"{out_dir}/{stem}_train_mse.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    return [p]
