"""Figure rendering for sweep and verification results.

Figures are a convenience by-product of the report paths; the delimited
and JSON outputs stay the primary machine-readable contract.
"""

from __future__ import annotations

import pathlib
import statistics
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _sketch_label(row: dict) -> str:
    if row["sketch"] == "sjlt" and row.get("alpha") not in (None, ""):
        return f"sjlt-{row['alpha']}"
    return str(row["sketch"])


def _medians(rows, value_key):
    """Median of value_key grouped by (sketch label, eps_rel), skipping
    rows where the value is missing."""
    groups = defaultdict(list)
    for row in rows:
        val = row.get(value_key)
        if val in (None, ""):
            continue
        groups[(_sketch_label(row), float(row["eps_rel"]))].append(float(val))
    return {key: statistics.median(vals) for key, vals in groups.items()}


def sweep_figures(rows: list[dict], out_dir) -> list[pathlib.Path]:
    """Render accuracy and timing figures for a grid of compression runs;
    returns the written file paths."""
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    err = _medians(rows, "rel_err")
    if err:
        fig, ax = plt.subplots(figsize=(6, 4))
        labels = sorted({label for label, _ in err})
        for label in labels:
            pts = sorted((eps, val) for (lb, eps), val in err.items()
                         if lb == label)
            ax.loglog([p[0] for p in pts], [p[1] for p in pts],
                      marker="o", label=label)
        ax.set_xlabel("relative tolerance")
        ax.set_ylabel("median relative error")
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        path = out_dir / "sweep_accuracy.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    sketch_ms = _medians(rows, "sketch_ms")
    total_ms = _medians(rows, "total_ms")
    if total_ms:
        fig, ax = plt.subplots(figsize=(6, 4))
        keys = sorted(total_ms)
        names = [f"{label}@{eps:g}" for label, eps in keys]
        x = range(len(keys))
        ax.bar([i - 0.2 for i in x], [sketch_ms.get(k, 0.0) for k in keys],
               width=0.4, label="sketch ms")
        ax.bar([i + 0.2 for i in x], [total_ms[k] for k in keys],
               width=0.4, label="total ms")
        ax.set_xticks(list(x))
        ax.set_xticklabels(names, rotation=45, ha="right")
        ax.set_ylabel("median milliseconds")
        ax.legend()
        fig.tight_layout()
        path = out_dir / "sweep_timing.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def campaign_figures(reports: list[dict], out_dir) -> list[pathlib.Path]:
    """Render the empirical violation rates of a verification campaign
    against the target failure probability."""
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not reports:
        return []
    fig, ax = plt.subplots(figsize=(6, 4))
    names = [f"{r['suite']}:{r['kind']}" for r in reports]
    rates = [r["empirical_rate"] for r in reports]
    ax.bar(range(len(reports)), rates, color="steelblue")
    for delta in sorted({r["delta"] for r in reports}):
        ax.axhline(delta, color="firebrick", linestyle="--", linewidth=0.8)
    ax.set_xticks(range(len(reports)))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("empirical violation rate")
    fig.tight_layout()
    path = out_dir / "campaign_rates.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]
