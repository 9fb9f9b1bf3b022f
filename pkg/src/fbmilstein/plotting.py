"""Figure rendering and gnuplot script generation for experiment reports.

Rate experiments are rendered as log-log plots of error against step size
with a guide line at the theoretical order, mirroring how convergence orders
are read off visually. Figures are written to files (no interactive backend);
a gnuplot script driving the raw CSV is emitted alongside so the plots can be
regenerated without Python.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "render_rate_plot",
    "render_divergence_plot",
    "render_path_plot",
    "render_trajectory_plot",
    "write_gnuplot_script",
]


def _report_series(report):
    """Per-path error curves and the median curve of a rate report."""
    column = getattr(report, "headline_column", 2)
    by_path: dict[int, dict[int, float]] = {}
    for row in report.rows:
        by_path.setdefault(row[0], {})[row[1]] = row[column]
    medians = report.median_errors
    return by_path, medians


def render_rate_plot(report, out_png) -> None:
    """Log-log error vs step size with the theoretical guide line."""
    by_path, medians = _report_series(report)
    horizon = report.config.get("horizon", 1.0)

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for path_id, curve in sorted(by_path.items()):
        ns = sorted(curve)
        errs = [curve[n] for n in ns]
        h = [horizon / n for n in ns]
        ax.loglog(h, errs, marker=".", linestyle="none", alpha=0.45,
                  label=None if path_id else "per path")
    ns = sorted(medians)
    med = [medians[n] for n in ns]
    h = np.array([horizon / n for n in ns])
    ax.loglog(h, med, marker="o", color="black", label="median")

    if report.theory_slope is not None and any(m > 0 for m in med):
        anchor = next((hh, mm) for hh, mm in zip(h, med) if mm > 0)
        rate = -report.theory_slope
        guide = anchor[1] * (h / anchor[0]) ** rate
        ax.loglog(h, guide, "--", color="tab:red",
                  label=f"order {rate:g} guide")

    ax.set_xlabel("step size T/n")
    ax.set_ylabel(report.error_label)
    slope = "n/a" if report.slope is None else f"{report.slope:.3f}"
    ax.set_title(f"{report.experiment}: fitted slope {slope}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def render_divergence_plot(ns, median_euler, median_exact, out_png) -> None:
    """Median first-order terminal values against the exact solution scale."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(ns, median_euler, marker="o", label="median |Y^n(T)| (euler)")
    ax.loglog(ns, median_exact, marker="s", label="median exp(B_T)")
    ax.set_xlabel("n")
    ax.set_ylabel("terminal value")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def render_path_plot(path, out_png) -> None:
    """All components of a sampled path against time."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for c in range(path.dims):
        ax.plot(path.times, path.values[:, c], lw=0.8, label=f"B{c + 1}")
    ax.set_xlabel("t")
    ax.set_ylabel("B(t)")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def render_trajectory_plot(traj, out_png) -> None:
    """All state components of a trajectory against time."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for c in range(traj.dim_state):
        ax.plot(traj.times, traj.states[:, c], lw=0.8, label=f"y{c + 1}")
    ax.set_xlabel("t")
    ax.set_ylabel("state")
    ax.set_title(f"{traj.scheme} on {traj.field_name}, n={traj.n_steps}")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def write_gnuplot_script(report, out_gp, csv_name: str = "errors.csv") -> None:
    """Gnuplot companion rendering the same log-log view from the raw CSV."""
    horizon = float(report.config.get("horizon", 1.0))
    medians = report.median_errors
    anchor_n = next((n for n in sorted(medians) if medians[n] > 0), None)
    lines = [
        "# log-log error vs step size; regenerate with: gnuplot plot.gp",
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 'step size T/n'",
        f"set ylabel '{report.error_label}'",
        "set grid",
        "set key left top",
        "set terminal pngcairo size 900,675",
        "set output 'plot_gnuplot.png'",
    ]
    csv_col = getattr(report, "headline_column", 2) + 1  # 1-based CSV column
    plot_parts = [
        f"'{csv_name}' every ::1 using ({horizon}/$2):{csv_col} "
        "with points pt 7 ps 0.5 title 'per-path error'"
    ]
    if report.theory_slope is not None and anchor_n is not None:
        rate = -float(report.theory_slope)
        anchor_h = horizon / anchor_n
        anchor_e = medians[anchor_n]
        lines.append(f"guide(x) = {anchor_e:.6e} * (x/{anchor_h:.6e})**{rate:.6f}")
        plot_parts.append(f"guide(x) with lines lw 2 title 'order {rate:g} guide'")
    lines.append("plot " + ", \\\n     ".join(plot_parts))
    with open(out_gp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
