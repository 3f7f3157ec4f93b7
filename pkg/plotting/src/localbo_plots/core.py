"""Render figures from the experiment runner's CSV files.

Every number drawn here is read from a CSV; no science is recomputed
(regression slopes come from the runner's slope rows, grid sizes from the
log10_grid_size column).  Rendering is deterministic: the only estimator is
a fixed-bandwidth KDE using Silverman's rule.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


class SchemaError(ValueError):
    """A required CSV column is missing."""


class DataError(ValueError):
    """CSV content unusable for the requested figure (empty, nonpositive on
    a log axis, ...)."""


def load_csv(paths) -> pd.DataFrame:
    if isinstance(paths, (str, bytes)):
        paths = [paths]
    frames = [pd.read_csv(p) for p in paths]
    return pd.concat(frames, ignore_index=True)


def require_columns(df: pd.DataFrame, columns):
    for col in columns:
        if col not in df.columns:
            raise SchemaError(f"missing column {col!r}")


def silverman_bandwidth(x: np.ndarray) -> float:
    """Silverman's rule of thumb; documented fixed bandwidth for the KDE."""
    n = x.size
    sd = float(np.std(x, ddof=1)) if n > 1 else 1.0
    iqr = float(np.subtract(*np.percentile(x, [75, 25])))
    scale = min(sd, iqr / 1.349) if iqr > 0 else sd
    if scale <= 0:
        scale = max(abs(float(np.mean(x))), 1.0) * 1e-3
    return 0.9 * scale * n ** (-1 / 5)


def kde_curve(x: np.ndarray, n_grid: int = 256):
    """Gaussian KDE evaluated on a regular grid spanning the data +- 3h."""
    if x.size == 0:
        raise DataError("no data for the density estimate")
    h = silverman_bandwidth(x)
    lo, hi = x.min() - 3 * h, x.max() + 3 * h
    grid = np.linspace(lo, hi, n_grid)
    dens = np.exp(-0.5 * ((grid[:, None] - x[None, :]) / h) ** 2).sum(axis=1)
    dens /= x.size * h * math.sqrt(2 * math.pi)
    return grid, dens


# ---------------------------------------------------------------------------
# fig1 boxplots


def plot_boxplots(csv_paths, out_path: str):
    """One column of panels per sigma: local-BO boxes per dimension, baseline
    boxes, and a bottom row echoing the log10 equivalent grid size."""
    df = load_csv(csv_paths)
    require_columns(
        df, ["method", "d", "sigma", "final_value", "log10_grid_size"]
    )
    if df.empty:
        raise DataError("no data: fig1 CSV has no rows")
    sigmas = sorted(df["sigma"].unique())
    methods = [m for m in ("local_bo", "gp_ucb", "random") if m in set(df["method"])]
    n_cols = len(sigmas)
    fig, axes = plt.subplots(
        2, n_cols, figsize=(4.2 * n_cols, 7), squeeze=False, sharex="col"
    )
    for j, sigma in enumerate(sigmas):
        sub = df[df["sigma"] == sigma]
        ax, ax_grid = axes[0][j], axes[1][j]
        dims = sorted(sub["d"].unique())
        positions, labels, data, grid_data = [], [], [], []
        pos = 0
        for method in methods:
            msub = sub[sub["method"] == method]
            for d in dims:  # ascending d regardless of CSV row order
                cell = msub[msub["d"] == d]
                if cell.empty:
                    continue
                positions.append(pos)
                labels.append(f"{method}\nd={d}" if method != "local_bo" else f"d={d}")
                data.append(cell["final_value"].to_numpy())
                grid_data.append(cell["log10_grid_size"].to_numpy())
                pos += 1
            pos += 0.5  # gap between methods
        ax.boxplot(data, positions=positions, widths=0.6)
        ax_grid.boxplot(grid_data, positions=positions, widths=0.6)
        for p, g in zip(positions, grid_data):
            ax_grid.annotate(
                f"{float(np.median(g)):.1f}",
                (p, float(np.median(g))),
                textcoords="offset points",
                xytext=(0, 6),
                ha="center",
                fontsize=7,
            )
        ax.set_title(f"sigma = {sigma}")
        ax.set_ylabel("final value")
        ax_grid.set_ylabel("log10 equivalent grid size")
        ax_grid.set_xticks(positions)
        ax_grid.set_xticklabels(labels, fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path)
    return fig


# ---------------------------------------------------------------------------
# error-function log-log


def plot_loglog(csv_paths, out_path: str):
    """Empirical error-function points with the analytic bound line, one
    panel per sweep; slope annotations echo the CSV's slope rows."""
    df = load_csv(csv_paths)
    require_columns(
        df,
        ["row_type", "sweep", "d", "b", "empirical", "bound",
         "slope_empirical", "slope_bound"],
    )
    points = df[df["row_type"] == "point"]
    slopes = df[df["row_type"] == "slope"]
    if points.empty:
        raise DataError("no data: error-function CSV has no point rows")
    sweeps = sorted(points["sweep"].unique())
    fig, axes = plt.subplots(1, len(sweeps), figsize=(5 * len(sweeps), 4),
                             squeeze=False)
    for j, sweep in enumerate(sweeps):
        ax = axes[0][j]
        sub = points[points["sweep"] == sweep].copy()
        xcol = "b" if sweep == "b" else "d"
        sub = sub.sort_values(xcol)
        xs = sub[xcol].to_numpy(dtype=float)
        emp = sub["empirical"].to_numpy(dtype=float)
        bnd = sub["bound"].to_numpy(dtype=float)
        if np.any(xs <= 0) or np.any(emp <= 0) or np.any(bnd <= 0):
            raise DataError(f"nonpositive values on log axes in sweep {sweep!r}")
        ax.loglog(xs, emp, "o", label="empirical")
        ax.loglog(xs, bnd, "-", label="bound")
        srow = slopes[slopes["sweep"] == sweep]
        if not srow.empty:
            se = float(srow["slope_empirical"].iloc[0])
            sb = float(srow["slope_bound"].iloc[0])
            ax.set_title(f"{sweep}-sweep: slopes {se:.2f} (emp) / {sb:.2f} (bound)")
        ax.set_xlabel(xcol)
        ax.set_ylabel("error function")
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    return fig


# ---------------------------------------------------------------------------
# restarts


def plot_restarts(csv_paths, out_path: str):
    """Left: KDE of single-restart final values.  Right: median best-so-far
    over restarts with a 5-95% band across paths."""
    df = load_csv(csv_paths)
    require_columns(df, ["path_seed", "restart", "final_value", "best_so_far"])
    if df.empty:
        raise DataError("no data: restarts CSV has no rows")
    fig, (ax_kde, ax_curve) = plt.subplots(1, 2, figsize=(10, 4))

    finals = df["final_value"].to_numpy(dtype=float)
    grid, dens = kde_curve(finals)
    ax_kde.plot(grid, dens)
    ax_kde.set_xlabel("single-restart final value")
    ax_kde.set_ylabel("density")

    pivot = df.pivot_table(
        index="restart", columns="path_seed", values="best_so_far"
    ).sort_index()
    rs = pivot.index.to_numpy()
    med = pivot.median(axis=1).to_numpy()
    lo = pivot.quantile(0.05, axis=1).to_numpy()
    hi = pivot.quantile(0.95, axis=1).to_numpy()
    ax_curve.fill_between(rs, lo, hi, alpha=0.3, label="5-95%")
    ax_curve.plot(rs, med, label="median best-so-far")
    ax_curve.set_xlabel("restart")
    ax_curve.set_ylabel("best value so far")
    ax_curve.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    return fig
