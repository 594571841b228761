"""SVG figures drawn from the per-interval rows. The CSVs stay canonical."""

from __future__ import annotations

import logging
import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

log = logging.getLogger(__name__)

DEFAULT_METRICS = ("objective", "energy_j", "avg_temp_c", "slav", "cost", "fairness", "response_time_s", "migrations")


def _series(rows: list[dict], metric: str) -> dict[tuple[str, int], tuple[list[int], list[float]]]:
    out: dict[tuple[str, int], tuple[list[int], list[float]]] = {}
    for r in rows:
        key = (str(r["scheduler"]), int(r["replication"]))
        xs, ys = out.setdefault(key, ([], []))
        xs.append(int(r["interval"]))
        ys.append(float(r[metric]))
    return out


def emit_plots(results, out_dir: str | Path | None = None, metrics=DEFAULT_METRICS) -> list[Path]:
    """One SVG per metric: per-interval lines (one per run) and a box plot
    of per-run means grouped by scheduler.

    ``results`` is an ``ExperimentResult`` or a list of interval rows.
    Returns the written paths; nothing is written for empty input.
    """
    rows = getattr(results, "interval_rows", results) or []
    if out_dir is None:
        out_dir = getattr(results, "out_dir", None)
    if not rows:
        warnings.warn("no interval rows to plot; no figures written", stacklevel=2)
        return []
    if out_dir is None:
        raise ValueError("out_dir is required when plotting raw rows")
    fig_dir = Path(out_dir) / "plots"
    fig_dir.mkdir(parents=True, exist_ok=True)

    written = []
    for metric in metrics:
        if metric not in rows[0]:
            log.warning("metric %s not in rows, skipped", metric)
            continue
        series = _series(rows, metric)
        fig, (ax_line, ax_box) = plt.subplots(1, 2, figsize=(10, 4))
        for (name, rep), (xs, ys) in sorted(series.items()):
            ax_line.plot(xs, ys, label=f"{name} r{rep}", linewidth=0.8)
        ax_line.set_xlabel("interval")
        ax_line.set_ylabel(metric)
        ax_line.legend(fontsize=6, ncol=2)

        names = sorted({k[0] for k in series})
        means = [[sum(ys) / len(ys) for (n, _), (_, ys) in sorted(series.items()) if n == name] for name in names]
        ax_box.boxplot(means)
        ax_box.set_xticks(range(1, len(names) + 1), names)
        ax_box.set_ylabel(f"run mean {metric}")
        fig.tight_layout()
        path = fig_dir / f"{metric}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written
