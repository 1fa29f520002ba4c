"""Learning-curve rendering from the harness CSV schema.

One chart per run: per-seed curves are aggregated into a mean line with a
min/max band over cumulative environment steps, plus a horizontal
reference line at the exact Stackelberg value when available. Charts are
written as vector graphics.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiments import CSV_HEADER


class PlotError(ValueError):
    """Malformed or empty plotting inputs."""


def read_curves(paths: list[Path]) -> dict[str, dict[int, list[tuple[int, float]]]]:
    """Group curve rows by run id and seed."""
    runs: dict[str, dict[int, list[tuple[int, float]]]] = defaultdict(dict)
    expected = CSV_HEADER.split(",")
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != expected:
                raise PlotError(f"{path}: expected header {CSV_HEADER!r}")
            for row in reader:
                run_id, seed, steps, leader, _ = row
                series = runs[run_id].setdefault(int(seed), [])
                series.append((int(steps), float(leader)))
    return runs


def emit_plots(csv_paths: list[str | Path], out_dir: str | Path,
               references: dict[str, float] | None = None) -> dict[str, Path]:
    """Render one SVG per run id found in the input CSVs.

    ``references`` maps run ids to the exact-solver value drawn as the
    horizontal reference line; run ids missing from the map fall back to
    any ``<run_id>.meta.json`` sitting next to the input files.
    """
    paths = [Path(p) for p in csv_paths]
    if not paths:
        raise PlotError("no CSV inputs given")
    runs = read_curves(paths)
    if not runs:
        raise PlotError("no curve rows found in the inputs")
    references = dict(references or {})
    for path in {p.parent for p in paths}:
        for meta in path.glob("*.meta.json"):
            data = json.loads(meta.read_text())
            references.setdefault(data["run_id"], data["reference_value"])

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for run_id, seeds in sorted(runs.items()):
        if not seeds:
            raise PlotError(f"{run_id}: no seed series")
        grids = [sorted(points) for points in seeds.values()]
        length = min(len(g) for g in grids)
        if length == 0:
            raise PlotError(f"{run_id}: empty seed series")
        xs = [g[0] for g in zip(*[grid[:length] for grid in grids])]
        steps = [pt[0] for pt in xs]
        fig, ax = plt.subplots(figsize=(6, 4))
        columns = list(zip(*[[v for _, v in grid[:length]] for grid in grids]))
        mean = [sum(col) / len(col) for col in columns]
        lo = [min(col) for col in columns]
        hi = [max(col) for col in columns]
        ax.fill_between(steps, lo, hi, alpha=0.25, label="min/max over seeds")
        ax.plot(steps, mean, label=f"mean over {len(grids)} seeds")
        if run_id in references:
            ax.axhline(references[run_id], linestyle="--", color="black",
                       linewidth=1, label="exact Stackelberg value")
        ax.set_xlabel("environment steps")
        ax.set_ylabel("mean episode reward")
        ax.set_title(run_id)
        ax.legend(loc="lower right", fontsize=8)
        fig.tight_layout()
        target = out / f"{run_id}.svg"
        fig.savefig(target)
        plt.close(fig)
        written[run_id] = target
    return written
