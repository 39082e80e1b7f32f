"""Figure rendering for experiment output.

When an experiment writes records to a file, a companion PNG with the same
stem is rendered next to it (disable with --no-plot). Uses the Agg backend
so no display is required.
"""

from __future__ import annotations

import os
from collections import defaultdict
from typing import List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _series(records: List[dict], xkey: str, ykey: str):
    groups = defaultdict(list)
    for r in records:
        if r.get(ykey) is not None:
            groups[r[xkey]].append(r[ykey])
    xs = sorted(groups)
    means = [sum(groups[x]) / len(groups[x]) for x in xs]
    return xs, means


def render_figure(kind: str, records: List[dict], out_path: str) -> Optional[str]:
    """Render the standard figure for an experiment kind; returns the path."""
    if not records or kind == "verify":
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    if kind == "tv-exact":
        ts = [r["t"] for r in records]
        ax.plot(ts, [r["tv_lumped"] for r in records], label="lumped", lw=2)
        if any(r.get("tv_full") is not None for r in records):
            ax.plot(
                ts,
                [r["tv_full"] for r in records],
                label="full",
                ls="--",
            )
        ax.set_xlabel("round t")
        ax.set_ylabel("total variation distance")
        ax.legend()
    elif kind == "walk":
        xs, ys = _series(records, "time", "fixed_points")
        ax.plot(xs, ys, marker="o")
        ax.set_xlabel("round t")
        ax.set_ylabel("mean fixed-point count")
    elif kind == "giant":
        xs, ys = _series(records, "beta", "giant_fraction")
        ax.plot(xs, ys, marker="o")
        ax.set_xlabel("beta")
        ax.set_ylabel("mean giant fraction")
        ax.set_ylim(0, 1.05)
    elif kind == "contraction":
        xs = [r["beta"] for r in records]
        ax.errorbar(xs, [r["mean_distance"] for r in records],
                    yerr=[r["se"] for r in records], marker="o")
        ax.set_xlabel("beta")
        ax.set_ylabel("mean final distance")
    elif kind == "couple":
        dists = [r["final_distance"] for r in records]
        ax.hist(dists, bins=range(0, max(dists) + 2), align="left", rwidth=0.8)
        ax.set_xlabel("final swap distance")
        ax.set_ylabel("count")
    elif kind == "sample":
        vals = [r["support"] for r in records]
        ax.hist(vals, bins=range(0, max(vals) + 2), align="left", rwidth=0.8)
        ax.set_xlabel("rematch support")
        ax.set_ylabel("count")
    else:
        plt.close(fig)
        return None
    ax.set_title(kind)
    fig.tight_layout()
    path = os.path.splitext(out_path)[0] + ".png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
