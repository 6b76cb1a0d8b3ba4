"""Figure rendering for report commands (headless Agg backend)."""
from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Dict, List

import matplotlib

if TYPE_CHECKING:
    from .cpn import MonitorLog

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RATING_LEVEL = {"resistant": 0, "conditionally-weak (pre-auth messages)": 1, "vulnerable": 2}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_monitors(monitors: Dict[str, "MonitorLog"], path: Path, title: str = "") -> Path:
    """Marking size of every monitored place as a step function of model time."""
    logs = [m for m in monitors.values() if m.samples]
    fig, axes = plt.subplots(len(logs), 1, figsize=(7, 1.1 * len(logs) + 0.8), sharex=True,
                             squeeze=False)
    for ax, log in zip(axes[:, 0], logs):
        ts = [t for _, t, _ in log.samples] + [log.total_time]
        vs = [v for _, _, v in log.samples]
        vs.append(vs[-1])
        ax.step(ts, vs, where="post", lw=1.4)
        ax.set_ylabel(log.name.split("'")[-1].removesuffix("_1"), rotation=0, ha="right",
                      fontsize=8)
        ax.set_ylim(-0.2, max(vs) + 0.6)
        ax.tick_params(labelsize=7)
    axes[-1, 0].set_xlabel("model time")
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def _levels(graph) -> Dict[int, int]:
    succ = graph.successors()
    depth = {1: 0}
    frontier = [1]
    while frontier:
        nxt = []
        for n in frontier:
            for m in succ[n]:
                if m not in depth:
                    depth[m] = depth[n] + 1
                    nxt.append(m)
        frontier = nxt
    return depth


def plot_statespace(graph, path: Path, dead: List[int] = (), title: str = "") -> Path:
    """Layered drawing of the reachability graph, node 1 on top."""
    depth = _levels(graph)
    rows: Dict[int, List[int]] = {}
    for n in graph.node_ids:
        rows.setdefault(depth.get(n, 0), []).append(n)
    pos = {}
    for d, ns in rows.items():
        for i, n in enumerate(ns):
            pos[n] = (i - (len(ns) - 1) / 2, -d)
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * max(len(v) for v in rows.values())),
                                    0.7 * len(rows) + 1))
    for a, _, b in graph.arcs:
        (x0, y0), (x1, y1) = pos[a], pos[b]
        ax.annotate("", xy=(x1, y1), xytext=(x0, y0),
                    arrowprops=dict(arrowstyle="->", lw=0.8, color="0.35",
                                    shrinkA=9, shrinkB=9))
    for n, (x, y) in pos.items():
        face = "#f4a582" if n in dead else "#d1e5f0"
        ax.scatter([x], [y], s=340, c=face, edgecolors="0.2", zorder=3)
        ax.text(x, y, str(n), ha="center", va="center", fontsize=8, zorder=4)
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_matrix(matrix, path: Path) -> Path:
    """Heat map of attack ratings."""
    from .adversary import ATTACKS, ROW_LABELS

    grid = [[_RATING_LEVEL.get(matrix.cell(p, a).rating, 1) for a in ATTACKS]
            for p in matrix.protocols]
    fig, ax = plt.subplots(figsize=(6, 0.55 * len(grid) + 1.2))
    ax.imshow(grid, cmap="RdYlGn_r", vmin=0, vmax=2, aspect="auto")
    ax.set_xticks(range(len(ATTACKS)), ATTACKS)
    ax.set_yticks(range(len(grid)), [ROW_LABELS.get(p, p) for p in matrix.protocols])
    short = {0: "resistant", 1: "weak", 2: "vulnerable"}
    for i, row in enumerate(grid):
        for j, v in enumerate(row):
            ax.text(j, i, short[v], ha="center", va="center", fontsize=8)
    return _save(fig, path)
