"""Figure rendering for scenario runs and case-base inspection.

Figures are written next to the delimited outputs (event log, trace,
store files) so a run can be reviewed at a glance: a map of the store
with the recommended cloud highlighted, the relevance ranking of the
recommended points, and case-base composition counts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .casebase import CaseBase, Solution
from .geo import PoiStore, Track


def render_cloud_map(
    store: PoiStore,
    solution: Solution,
    path: str | Path,
    track: Track | None = None,
    title: str = "learning point cloud",
) -> Path:
    """Scatter the whole store in grey, the recommended points scaled by
    relevance, and the track polyline when one was replayed."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 6))
    lons = [p.position.lon for p in store]
    lats = [p.position.lat for p in store]
    ax.scatter(lons, lats, s=12, c="0.7", label="all POIs", zorder=1)
    if track is not None:
        pts = track.positions()
        ax.plot(
            [p.lon for p in pts], [p.lat for p in pts], "-", color="tab:blue",
            linewidth=1.2, label="track", zorder=2,
        )
    if solution.cloud.entries:
        ax.scatter(
            [e.poi.position.lon for e in solution.cloud.entries],
            [e.poi.position.lat for e in solution.cloud.entries],
            s=[40 + 160 * e.score for e in solution.cloud.entries],
            c="tab:red",
            alpha=0.8,
            label="recommended",
            zorder=3,
        )
        for e in solution.cloud.entries:
            ax.annotate(
                e.poi.id, (e.poi.position.lon, e.poi.position.lat),
                fontsize=7, xytext=(3, 3), textcoords="offset points",
            )
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_ranking(solution: Solution, path: str | Path, title: str = "relevance ranking") -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    entries = list(solution.cloud.entries)
    if entries:
        names = [f"{e.poi.id}" for e in entries][::-1]
        scores = [e.score for e in entries][::-1]
        ax.barh(names, scores, color="tab:red", alpha=0.8)
        ax.set_xlim(0, 1)
    else:
        ax.text(0.5, 0.5, "no learning points in scope", ha="center", va="center")
        ax.set_axis_off()
    ax.set_xlabel("relevance")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_casebase_counts(base: CaseBase, path: str | Path) -> Path:
    path = Path(path)
    counts = base.counts()
    keys = ["initial", "point", "prototypical", "demoted", "covered"]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(keys, [counts[k] for k in keys], color="tab:blue", alpha=0.8)
    ax.set_ylabel("cases")
    ax.set_title(f"case base composition (total {counts['total']})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_run_figures(
    store: PoiStore,
    solution: Solution | None,
    base: CaseBase,
    outdir: str | Path,
    track: Track | None = None,
) -> list[Path]:
    """The standard figure set written by the CLI report path."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if solution is not None:
        written.append(render_cloud_map(store, solution, outdir / "cloud_map.png", track))
        written.append(render_ranking(solution, outdir / "ranking.png"))
    written.append(render_casebase_counts(base, outdir / "casebase.png"))
    return written
