"""Figure rendering for the report CSVs written by the command line tool."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_convergence_figure(rows, path) -> None:
    """Best-so-far welfare per iteration, one line per replication."""
    reps = sorted({r["replication"] for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for rep in reps:
        sub = [r for r in rows if r["replication"] == rep]
        sub.sort(key=lambda r: r["iteration"])
        it = [r["iteration"] for r in sub]
        ax.plot(it, [r["welfare"] for r in sub], lw=0.6, alpha=0.35, color="C0")
        ax.plot(it, [r["best_welfare"] for r in sub], lw=1.5,
                label=f"replication {rep}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("welfare (bits/s/Hz)")
    ax.set_title("Swap-search convergence")
    if len(reps) <= 8:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_cdf_figure(rows, path) -> None:
    """Empirical CDF of final welfare, one curve per sweep cell."""
    cells = sorted({(r["num_mnos"], r["num_slices"], r["power_mode"]) for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for k, l, mode in cells:
        vals = sorted(r["welfare"] for r in rows
                      if (r["num_mnos"], r["num_slices"], r["power_mode"]) == (k, l, mode))
        n = len(vals)
        ecdf = [(i + 1) / n for i in range(n)]
        ax.step(vals, ecdf, where="post", label=f"K={k} L={l} {mode}")
    ax.set_xlabel("final welfare (bits/s/Hz)")
    ax.set_ylabel("empirical CDF")
    ax.set_title("Final welfare across replications")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_knapsack_figures(rows, fractions_path, delays_path) -> None:
    """Purchased fraction per station and cell, plus the delay components."""
    rep = min(r["replication"] for r in rows)
    rows = [r for r in rows if r["replication"] == rep]
    cells = sorted({(r["delay_threshold"], r["tolerance"]) for r in rows})
    stations = sorted({r["sbs"] for r in rows})

    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    width = 0.8 / max(len(cells), 1)
    for i, (dth, eps) in enumerate(cells):
        sub = {r["sbs"]: r["fraction"] for r in rows
               if (r["delay_threshold"], r["tolerance"]) == (dth, eps)}
        xs = [s + (i - (len(cells) - 1) / 2) * width for s in stations]
        ax.bar(xs, [sub[s] for s in stations], width=width,
               label=f"D_th={dth:g}, eps={eps:g}")
    ax.set_xlabel("station")
    ax.set_ylabel("purchased fraction y")
    ax.set_title("Caching purchase per station")
    ax.set_xticks(stations)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(fractions_path, dpi=150)
    plt.close(fig)

    # Delays do not depend on the budget, so one cell suffices.
    dth0, eps0 = cells[0]
    sub = [r for r in rows if (r["delay_threshold"], r["tolerance"]) == (dth0, eps0)]
    sub.sort(key=lambda r: r["sbs"])
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    xs = [r["sbs"] for r in sub]
    service = [r["service_delay"] for r in sub]
    downlink = [0.0 if math.isinf(r["downlink_delay"]) else r["downlink_delay"]
                for r in sub]
    ax.bar(xs, service, label="service")
    ax.bar(xs, downlink, bottom=service, label="downlink")
    ax.set_xlabel("station")
    ax.set_ylabel("delay (s)")
    ax.set_title("Offloading delay per station")
    ax.set_xticks(xs)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(delays_path, dpi=150)
    plt.close(fig)
