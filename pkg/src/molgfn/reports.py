"""Figure rendering for evaluation reports and training runs.

Every report directory gets PNG figures next to the JSON/CSV output:
property histograms with the desired range shaded, the reward
distribution, and (for training runs) loss/reward curves from the stats
stream.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def render_eval_figures(records, specs, out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    valid = [r for r in records if r.valid]
    if not valid:
        return written

    n = len(specs)
    cols = min(n, 2)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(5.5 * cols, 3.4 * rows), squeeze=False)
    for k, spec in enumerate(specs):
        ax = axes[k // cols][k % cols]
        vals = [r.properties[spec.name] for r in valid]
        ax.hist(vals, bins=40, color="#4878a8", alpha=0.85)
        ax.axvspan(spec.c_low, spec.c_high, color="#76b041", alpha=0.25, label="desired range")
        ax.set_title(f"{spec.name} (d={spec.d:+d})")
        ax.legend(fontsize=8)
    for k in range(n, rows * cols):
        axes[k // cols][k % cols].axis("off")
    fig.tight_layout()
    path = os.path.join(out_dir, "property_histograms.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    ax.hist([r.reward for r in valid], bins=40, color="#a85448")
    ax.set_xlabel("reward")
    ax.set_ylabel("count")
    ax.set_title("reward distribution")
    fig.tight_layout()
    path = os.path.join(out_dir, "reward_histogram.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def render_training_curves(stats_path, out_dir) -> list[str]:
    rows = []
    with open(stats_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    train = [r for r in rows if "loss" in r]
    if not train:
        return []
    os.makedirs(out_dir, exist_ok=True)
    steps = np.array([r["step"] for r in train])
    fig, axes = plt.subplots(1, 3, figsize=(14, 3.4))
    axes[0].plot(steps, [r["loss_tb"] for r in train], lw=0.8)
    axes[0].set_yscale("log")
    axes[0].set_title("TB loss")
    axes[1].plot(steps, [r["loss_mle"] for r in train], lw=0.8, color="#76b041")
    axes[1].set_title("MLE loss")
    axes[2].plot(steps, [r["mean_reward"] for r in train], lw=0.8, color="#a85448")
    axes[2].set_title("mean reward")
    for ax in axes:
        ax.set_xlabel("step")
    fig.tight_layout()
    path = os.path.join(out_dir, "training_curves.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]
