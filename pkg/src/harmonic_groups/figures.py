"""Matplotlib rendering for CLI reports (headless, one PNG per run)."""

from __future__ import annotations

from pathlib import Path


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_curve(path, xs, ys, title, xlabel, ylabel, yerr=None, step=False):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    if step:
        ax.step(xs, ys, where="post")
    elif yerr is not None:
        ax.errorbar(xs, ys, yerr=yerr, fmt="o-", markersize=3, capsize=2)
    else:
        ax.plot(xs, ys, "o-", markersize=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_bars(path, labels, values, title, ylabel, yerr=None):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(max(6.0, 0.35 * len(labels)), 3.8))
    xs = range(len(labels))
    ax.bar(xs, values, yerr=yerr, capsize=2)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([str(l) for l in labels], rotation=45, ha="right", fontsize=7)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_matrix(path, rows, title):
    plt = _plt()
    data = [[float(v) for v in row] for row in rows]
    fig, ax = plt.subplots(figsize=(4.2, 3.8))
    im = ax.imshow(data, cmap="coolwarm")
    for i, row in enumerate(data):
        for j, v in enumerate(row):
            ax.text(j, i, f"{v:g}", ha="center", va="center", fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_check_summary(path, names, passed, title="acceptance checks"):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.5, 0.32 * len(names) + 1.2))
    ys = range(len(names))
    colors = ["#2a9d49" if ok else "#c1403d" for ok in passed]
    ax.barh(list(ys), [1] * len(names), color=colors)
    ax.set_yticks(list(ys))
    ax.set_yticklabels(names, fontsize=7)
    ax.set_xticks([])
    ax.invert_yaxis()
    ax.set_title(title)
    for y, ok in zip(ys, passed):
        ax.text(0.5, y, "pass" if ok else "FAIL", ha="center", va="center",
                color="white", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
