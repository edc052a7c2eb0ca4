"""Figure rendering for experiment outputs.

Every function takes in-memory results plus an output directory, writes one
or more PNG files and returns their paths.  Plots mirror the CSV/JSON
payloads written by the experiment runners; the data files remain the
primary output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_META = {"Software": None}  # keep PNG bytes reproducible across runs

CLUSTER_COLORS = {1: "tab:red", 2: "tab:blue", 3: "tab:purple"}
FAMILY_MARKERS = {"squeezed": "o", "fock": "s", "coherent": "D"}


def _save(fig, path: Path) -> str:
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    plt.close(fig)
    return str(path)


def render_kmeans(trajectory, data, partition, out: Path) -> list[str]:
    paths = []

    # overlap-vs-step panel, one subplot per cluster
    k = trajectory[0].overlaps.shape[1]
    fig, axes = plt.subplots(1, k, figsize=(4 * k, 3.2), sharey=True)
    steps = [s.iteration for s in trajectory]
    for kk, ax in enumerate(np.atleast_1d(axes)):
        for m, member in enumerate(data):
            series = [s.overlaps[m, kk] for s in trajectory]
            ax.plot(steps, series, marker="o", ms=3, lw=0.8,
                    color=CLUSTER_COLORS.get(partition[member.id], "gray"), alpha=0.7)
        ax.set_xlabel("assignment step")
        ax.set_title(f"overlap with centroid {kk + 1}")
    np.atleast_1d(axes)[0].set_ylabel(r"$|\langle d_m | c_k \rangle|^2$")
    fig.tight_layout()
    paths.append(_save(fig, out / "kmeans_overlaps.png"))

    # scatter-matrix of the sqrt-population coordinates with cluster colors
    coords = {s.id: np.sqrt(s.state.padded(5).populations()[:5]) for s in data}
    fig, axes = plt.subplots(4, 4, figsize=(10, 10))
    for row in range(4):
        for col in range(4):
            ax = axes[row][col]
            xi, yi = col, row + 1
            if xi >= yi:
                ax.axis("off")
                continue
            for s in data:
                ax.scatter(coords[s.id][xi], coords[s.id][yi],
                           c=CLUSTER_COLORS.get(partition[s.id], "gray"),
                           marker=FAMILY_MARKERS.get(s.family, "x"), s=28,
                           edgecolors="k", linewidths=0.3)
            for kk, cent in enumerate(trajectory[-1].centroids):
                cx = np.sqrt(cent.padded(5).populations()[:5])
                ax.scatter(cx[xi], cx[yi], c=CLUSTER_COLORS.get(kk + 1, "k"),
                           marker="X", s=70)
            ax.set_xlabel(f"$x_{xi + 1}$")
            ax.set_ylabel(f"$x_{yi + 1}$")
    fig.tight_layout()
    paths.append(_save(fig, out / "kmeans_scatter.png"))
    return paths


def render_knn(results, clusters, wigner_targets, out: Path) -> list[str]:
    paths = []
    n = len(results)
    fig, axes = plt.subplots(1, n, figsize=(2.6 * n, 3.0), sharey=True)
    for ax, res in zip(np.atleast_1d(axes), results):
        values = [res.proportions.get(cl, 0.0) for cl in clusters]
        ax.bar([str(cl) for cl in clusters], values,
               color=[CLUSTER_COLORS.get(cl, "gray") for cl in clusters])
        ax.set_title(f"{res.trial_id}\n-> cluster {res.winner}", fontsize=9)
        ax.set_xlabel("cluster")
        ax.set_ylim(0, 1)
    np.atleast_1d(axes)[0].set_ylabel("neighbor proportion")
    fig.tight_layout()
    paths.append(_save(fig, out / "knn_proportions.png"))

    fig, axes = plt.subplots(n, 1, figsize=(7, 1.9 * n), sharex=True)
    for ax, res in zip(np.atleast_1d(axes), results):
        ids = [r[0] for r in res.ranked]
        ests = [r[2] for r in res.ranked]
        cols = [CLUSTER_COLORS.get(r[1], "gray") for r in res.ranked]
        ax.bar(ids, ests, color=cols)
        ax.set_ylabel(res.trial_id, fontsize=8)
        ax.tick_params(axis="x", labelsize=7, rotation=60)
        ax.set_ylim(0, 1)
    fig.suptitle("overlap with training states")
    fig.tight_layout()
    paths.append(_save(fig, out / "knn_overlaps.png"))

    from .fock import wigner_grid

    grid = np.linspace(-4.0, 4.0, 81)
    m = len(wigner_targets)
    ncols = min(m, 4)
    nrows = (m + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(3 * ncols, 2.8 * nrows))
    axes = np.atleast_1d(axes).ravel()
    for ax in axes[m:]:
        ax.axis("off")
    for ax, (name, state) in zip(axes, wigner_targets):
        w = wigner_grid(state, grid, grid)
        lim = max(abs(w.min()), w.max())
        ax.imshow(w.T, origin="lower", extent=(-4, 4, -4, 4), cmap="RdBu_r",
                  vmin=-lim, vmax=lim)
        ax.set_title(name, fontsize=9)
        ax.set_xlabel("x")
        ax.set_ylabel("p")
    fig.tight_layout()
    paths.append(_save(fig, out / "knn_wigner.png"))
    return paths


def render_swap_matrix(records, out: Path) -> list[str]:
    rows = sorted({r["row"] for r in records})
    cols = sorted({r["col"] for r in records})
    mat = np.zeros((len(rows), len(cols)))
    for r in records:
        mat[rows.index(r["row"]), cols.index(r["col"])] = r["estimate"]
    fig, ax = plt.subplots(figsize=(1.2 + 0.5 * len(cols), 1.2 + 0.5 * len(rows)))
    im = ax.imshow(mat, vmin=0, vmax=1, cmap="viridis")
    ax.set_xticks(range(len(cols)), cols, rotation=60, fontsize=7)
    ax.set_yticks(range(len(rows)), rows, fontsize=7)
    fig.colorbar(im, ax=ax, label=r"$|\langle B|C \rangle|^2$")
    fig.tight_layout()
    return [_save(fig, out / "overlap_matrix.png")]


def render_delay_scan(series_main, series_alt, out: Path) -> list[str]:
    taus = [t * 1e6 for t, _ in series_main]
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(taus, [v for _, v in series_main], "o-", ms=2.5, lw=0.8, label="reference pair")
    ax.plot(taus, [v for _, v in series_alt], "s-", ms=2.5, lw=0.8, label="sign-alternating pair")
    ax.set_xlabel(r"delay $\tau$ ($\mu$s)")
    ax.set_ylabel("overlap estimate")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return [_save(fig, out / "delay_scan.png")]


def render_schedule(sched, target, out: Path) -> list[str]:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    idx = np.arange(len(sched.pulses))
    angles = [p.angle for p in sched.pulses]
    phases = [p.phase for p in sched.pulses]
    colors = ["tab:orange" if p.kind == "carrier" else "tab:green" for p in sched.pulses]
    ax1.bar(idx, angles, color=colors)
    ax1.set_xlabel("pulse index")
    ax1.set_ylabel("base Rabi angle (rad)")
    ax1.set_title("carrier (orange) / red sideband (green)")
    ax2.bar(idx, phases, color=colors)
    ax2.set_xlabel("pulse index")
    ax2.set_ylabel("phase (rad)")
    fig.tight_layout()
    paths = [_save(fig, out / "schedule.png")]

    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    levels = np.arange(target.dim)
    ax.bar(levels, target.populations(), color="tab:blue", alpha=0.7)
    ax.set_xlabel("Fock level")
    ax.set_ylabel("population")
    ax.set_title("target populations")
    fig.tight_layout()
    paths.append(_save(fig, out / "schedule_target.png"))
    return paths


def render_characterize(taus, ideal, observed, refit, p_true, fit, out: Path) -> list[str]:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 3.4))
    t_us = taus * 1e6
    if observed is not ideal:
        ax1.plot(t_us, observed.pe, "o", ms=2.5, alpha=0.6, label="observed")
    ax1.plot(t_us, ideal.pe, "-", lw=0.9, label="ideal")
    ax1.plot(t_us, refit.pe, "--", lw=1.2, label="fit")
    ax1.set_xlabel(r"pulse duration $\tau$ ($\mu$s)")
    ax1.set_ylabel(r"$P_e$")
    ax1.legend(fontsize=8)

    levels = np.arange(len(fit.populations))
    width = 0.4
    ax2.bar(levels - width / 2, p_true[: len(levels)], width, label="true", color="tab:orange")
    ax2.bar(levels + width / 2, fit.populations, width, label="fitted", color="tab:red")
    ax2.set_xlabel("Fock level")
    ax2.set_ylabel("population")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    return [_save(fig, out / "characterize.png")]


def render_ramsey(off, on, out: Path) -> list[str]:
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot([t * 1e6 for t, _ in off], [v for _, v in off], "o-", ms=2.5, lw=0.8,
            label="uncompensated")
    ax.plot([t * 1e6 for t, _ in on], [v for _, v in on], "--", lw=1.4,
            label="compensated")
    ax.set_xlabel(r"sideband duration $\tau$ ($\mu$s)")
    ax.set_ylabel(r"$P_e$")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return [_save(fig, out / "ramsey_stark.png")]
