"""Figure rendering for run and sweep reports.

Renders alongside the delimited outputs: diffusion curves, per-node
emission/decryption load, and metric-vs-parameter lines for sweeps.
All figures go to PNG files; nothing is shown interactively.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .adversary import PerformanceMetrics
from .netsim import RunReport

FIGSIZE = (7.0, 4.2)
DPI = 120


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def diffusion_figure(report: RunReport, out_dir: str | Path) -> Path | None:
    """Cumulative delivered-node count over time, one line per message."""
    if not report.submissions:
        return None
    fig, ax = plt.subplots(figsize=FIGSIZE)
    n = report.n_nodes()
    for i, (mid, _origin, submit_tick) in enumerate(report.submissions):
        ticks = sorted(report.deliveries.get(mid, {}).values())
        xs, ys = [submit_tick], [0]
        for count, t in enumerate(ticks, start=1):
            xs.extend([t, t])
            ys.extend([ys[-1], count / n])
        xs.append(report.config.total_ticks)
        ys.append(ys[-1])
        ax.plot(xs, ys, drawstyle="default", label=f"msg {i} ({mid.hex()[:8]})")
    ax.set_xlabel("tick")
    ax.set_ylabel("fraction of nodes delivered")
    ax.set_ylim(0, 1.05)
    ax.set_title("Message diffusion")
    ax.legend(fontsize=8)
    path = Path(out_dir) / "diffusion.png"
    _save(fig, path)
    return path


def node_load_figure(report: RunReport, out_dir: str | Path) -> Path:
    """Per-node emissions (cover vs real) and trial-decryption load."""
    nodes = sorted(report.node_stats)
    stats = [report.node_stats[n] for n in nodes]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.2))

    cover = [s["cover_emissions"] for s in stats]
    real = [s["emissions"] - s["cover_emissions"] for s in stats]
    ax1.bar(nodes, cover, label="cover", color="#8aa")
    ax1.bar(nodes, real, bottom=cover, label="real", color="#d66")
    ax1.set_xlabel("node")
    ax1.set_ylabel("emissions")
    ax1.set_title("Emissions per node")
    ax1.legend(fontsize=8)

    ax2.bar(nodes, [s["decrypt_attempts"] for s in stats], color="#678")
    ax2.set_xlabel("node")
    ax2.set_ylabel("trial decryptions")
    ax2.set_title("Decryption load per node")

    path = Path(out_dir) / "node_load.png"
    _save(fig, path)
    return path


def run_figures(
    report: RunReport, perf: PerformanceMetrics, out_dir: str | Path
) -> list[Path]:
    out = Path(out_dir)
    paths = [node_load_figure(report, out)]
    diff = diffusion_figure(report, out)
    if diff:
        paths.append(diff)
    return paths


SWEEP_METRICS = ["delivery_ratio_mean", "mean_latency", "cover_fraction",
                 "decrypt_attempts_total"]


def sweep_figures(
    rows: list[dict], param: str, out_dir: str | Path
) -> list[Path]:
    """Metric-vs-parameter lines for a one-dimensional sweep."""
    out = Path(out_dir)
    paths = []
    xs = [row[param] for row in rows]
    for metric in SWEEP_METRICS:
        ys = [row.get(metric) for row in rows]
        if all(y is None or y == "" for y in ys):
            continue
        fig, ax = plt.subplots(figsize=FIGSIZE)
        ax.plot(xs, [float(y) if y not in (None, "") else float("nan") for y in ys],
                marker="o")
        ax.set_xlabel(param)
        ax.set_ylabel(metric)
        ax.set_title(f"{metric} vs {param}")
        path = out / f"sweep_{metric}.png"
        _save(fig, path)
        paths.append(path)
    return paths
