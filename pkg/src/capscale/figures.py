"""Matplotlib rendering of reports to image files.

Used by the CLI report path: when a figure directory is given, each delimited
output gets a rendered companion. Headless backend; nothing is shown.
"""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (8, 4.5),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
})


def save_trajectory_figure(traj, path, title: str = "") -> None:
    """Arrival rate, capacity, and queued work against time."""
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True)
    top.step(traj.t, traj.lam, where="post", label="arrival rate", color="#888888")
    top.plot(traj.t, traj.m, label="capacity", color="#2062a0")
    top.set_ylabel("work units / h")
    top.legend(loc="best")
    if title:
        top.set_title(title)
    bottom.plot(traj.t, traj.q, color="#b03030")
    bottom.set_ylabel("queued work")
    bottom.set_xlabel("t (h)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_compare_figure(rows, path, title: str = "") -> None:
    """Competitive ratios by (instance, policy) as grouped bars."""
    instances = sorted({r["instance"] for r in rows})
    policies = sorted({r["policy"] for r in rows})
    fig, ax = plt.subplots()
    width = 0.8 / max(len(policies), 1)
    for j, policy in enumerate(policies):
        xs, ys = [], []
        for i, instance in enumerate(instances):
            match = [r for r in rows if r["instance"] == instance and r["policy"] == policy]
            if match and math.isfinite(match[0]["cr"]):
                xs.append(i + j * width)
                ys.append(match[0]["cr"])
        ax.bar(xs, ys, width=width, label=policy)
    ax.axhline(1.0, color="black", linewidth=0.8)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(instances))])
    ax.set_xticklabels(instances, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("cost / offline optimum")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_drift_figure(series, path, title: str = "") -> None:
    """Potential value and per-step drift along a trajectory pair."""
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True)
    top.plot(series.t, series.phi, color="#2062a0")
    top.set_ylabel("potential")
    if title:
        top.set_title(title)
    bottom.plot(series.t[1:], series.drift, color="#b03030", linewidth=0.7)
    bottom.axhline(0.0, color="black", linewidth=0.8)
    bottom.set_ylabel("per-step drift")
    bottom.set_xlabel("t (h)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_instance_figure(lam, path, title: str = "") -> None:
    """Arrival-rate profile of a single instance."""
    import numpy as np

    edges = np.arange(lam.n_segments + 1) * lam.delta
    fig, ax = plt.subplots()
    ax.stairs(lam.rates, edges, color="#2062a0")
    ax.set_xlabel("t (h)")
    ax.set_ylabel("work units / h")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
