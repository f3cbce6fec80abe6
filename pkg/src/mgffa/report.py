"""Figure rendering for the report paths of the CLI.

Every function writes one PNG next to the delimited output it illustrates.
The Agg backend is forced so rendering works headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

STYLE = {
    "figure.figsize": (8.0, 4.5),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
}


def _new_axes(figsize=None):
    plt.rcParams.update(STYLE)
    fig, ax = plt.subplots(figsize=figsize)
    return fig, ax


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def save_config_histogram(labels, counts, path, title="Factor configurations"):
    fig, ax = _new_axes()
    x = np.arange(len(labels))
    ax.bar(x, counts, color="steelblue")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("retained draws")
    ax.set_title(title)
    return _finish(fig, path)


def save_loading_heatmap(loadings, times, path, title):
    fig, ax = _new_axes(figsize=(8.0, 3.0))
    q = loadings.shape[1]
    if q == 0:
        ax.text(0.5, 0.5, "no components", ha="center", va="center")
        ax.set_axis_off()
        ax.set_title(title)
        return _finish(fig, path)
    vmax = max(float(np.max(np.abs(loadings))), 1e-12)
    mesh = ax.pcolormesh(
        times,
        np.arange(q),
        loadings.T,
        cmap="RdBu_r",
        vmin=-vmax,
        vmax=vmax,
        shading="nearest",
    )
    ax.set_yticks(np.arange(q))
    ax.set_yticklabels([f"comp {j + 1}" for j in range(q)])
    ax.set_xlabel("time")
    ax.set_title(title)
    fig.colorbar(mesh, ax=ax)
    return _finish(fig, path)


def save_group_curves(times, mean, lower, upper, path, title, max_subjects=12):
    fig, ax = _new_axes()
    shown = min(mean.shape[0], max_subjects)
    for i in range(shown):
        ax.fill_between(times, lower[i], upper[i], alpha=0.12, color="steelblue", lw=0)
        ax.plot(times, mean[i], color="steelblue", lw=0.8, alpha=0.8)
    ax.plot(times, mean.mean(axis=0), color="crimson", lw=2.0, label="group mean")
    ax.set_xlabel("time")
    ax.set_ylabel("value")
    ax.legend()
    ax.set_title(f"{title} ({shown} of {mean.shape[0]} subjects)")
    return _finish(fig, path)


def save_pointwise_mse(times, per_group, path, title="Pointwise MSE"):
    fig, ax = _new_axes()
    for gid, values in per_group.items():
        ax.plot(times, values, lw=1.5, label=gid)
    ax.set_yscale("log")
    ax.set_xlabel("time")
    ax.set_ylabel("MSE")
    ax.legend()
    ax.set_title(title)
    return _finish(fig, path)


def save_rv_bars(rows, path, title="RV coefficients"):
    """rows: iterable of (label, value)."""
    fig, ax = _new_axes()
    labels = [r[0] for r in rows]
    values = [r[1] for r in rows]
    x = np.arange(len(labels))
    ax.bar(x, values, color="seagreen")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax.set_ylabel("RV")
    ax.set_title(title)
    return _finish(fig, path)
