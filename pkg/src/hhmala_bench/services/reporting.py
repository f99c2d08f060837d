"""
CSV tables, SVG plots and the run manifest.
"""

import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from loguru import logger  # noqa: E402

from ..schemas.experiment import CSV_COLUMNS, ExperimentConfig, RunRecord  # noqa: E402

FLOAT_FORMAT = "%.10g"
SIN2_FLOOR = 1e-16
TRACE_COLUMNS = ["scheme", "d", "seed", "iteration", "sin2"]

# Fixed SVG ids and no timestamp, so identical records give identical bytes
plt.rcParams["svg.hashsalt"] = "hhmala"
SVG_METADATA = {"Date": None}


def records_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump(include=set(CSV_COLUMNS)) for r in records], columns=CSV_COLUMNS)


def write_csv(records: Sequence[RunRecord], path: str | Path) -> Path:
    """One row per record in grid order, floats at 10 significant digits."""
    if not records:
        raise ValueError("No records to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records_frame(records).to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    logger.info(f"Wrote {len(records)} records to {path}")
    return path


def write_traces(records: Sequence[RunRecord], path: str | Path) -> Optional[Path]:
    rows = [
        (r.scheme, r.d, r.seed, it, value)
        for r in records if r.trace
        for it, value in r.trace
    ]
    if not rows:
        return None
    path = Path(path)
    pd.DataFrame(rows, columns=TRACE_COLUMNS).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def _native(value):
    if isinstance(value, np.generic):
        value = value.item()
    return None if isinstance(value, float) and np.isnan(value) else value


def read_records(path: str | Path, traces_path: Optional[str | Path] = None) -> List[RunRecord]:
    """Rebuild records from a results CSV, attaching recovery traces when a traces CSV is given."""
    df = pd.read_csv(path, dtype={"target": str, "scheme": str, "status": str})
    missing = [c for c in CSV_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"{path} is missing columns {missing}")
    traces: Dict[tuple, list] = {}
    if traces_path is not None and Path(traces_path).exists():
        tdf = pd.read_csv(traces_path, dtype={"scheme": str})
        for (scheme, d, seed), group in tdf.groupby(["scheme", "d", "seed"], sort=False):
            traces[(scheme, int(d), int(seed))] = [(int(i), float(v)) for i, v in zip(group["iteration"], group["sin2"])]
    records = []
    for row in df.to_dict(orient="records"):
        values = {k: _native(v) for k, v in row.items()}
        key = (values["scheme"], int(values["d"]), int(values["seed"]))
        records.append(RunRecord(config_hash="", trace=traces.get(key), **values))
    return records


def _groups(records: Sequence[RunRecord], field: str):
    labels, data = [], []
    for key in dict.fromkeys((r.scheme, r.d) for r in records):
        values = [getattr(r, field) for r in records if (r.scheme, r.d) == key and getattr(r, field) is not None]
        if values:
            labels.append(f"{key[0]}\nd={key[1]}")
            data.append(values)
    return labels, data


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=SVG_METADATA, bbox_inches="tight")
    plt.close(fig)
    return path


def emit_plots(records: Sequence[RunRecord], outdir: str | Path) -> List[Path]:
    """
    Boxplots of median ESS and ESS per second grouped by (scheme, d), plus a
    log10 sin^2 recovery plot when traces are present.
    """
    if not records:
        raise ValueError("No records to plot")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ok = [r for r in records if r.status == "ok"]
    written: List[Path] = []

    panels = [("median_ess", "median ESS"), ("ess_per_second", "median ESS / second")]
    panels = [(f, label) for f, label in panels if _groups(ok, f)[1]]
    if panels:
        fig, axes = plt.subplots(len(panels), 1, figsize=(max(6.0, 1.2 * len(_groups(ok, "median_ess")[0])), 4.0 * len(panels)), squeeze=False)
        for ax, (field, label) in zip(axes[:, 0], panels):
            labels, data = _groups(ok, field)
            ax.boxplot(data)
            ax.set_xticks(range(1, len(labels) + 1), labels)
            ax.set_yscale("log")
            ax.set_ylabel(label)
        axes[0, 0].set_title(f"{records[0].target}")
        written.append(_save(fig, outdir / "ess_boxplot.svg"))

    traced = [r for r in records if r.trace]
    if traced:
        fig, ax = plt.subplots(figsize=(7.0, 4.0))
        schemes = list(dict.fromkeys(r.scheme for r in traced))
        colours = {s: f"C{i}" for i, s in enumerate(schemes)}
        floored = False
        for r in traced:
            its = np.array([it for it, _ in r.trace])
            vals = np.array([v for _, v in r.trace])
            floored |= bool(np.any(vals < SIN2_FLOOR))
            ax.plot(its, np.log10(np.maximum(vals, SIN2_FLOOR)), color=colours[r.scheme], alpha=0.4, linewidth=0.8)
        for s in schemes:
            ax.plot([], [], color=colours[s], label=s)
        ax.set_xlabel("iteration")
        ax.set_ylabel("log10 sin^2 to leading eigenvector")
        ax.legend()
        if floored:
            fig.text(0.01, 0.01, f"* values of 0 drawn at {SIN2_FLOOR:g}", fontsize=8)
        written.append(_save(fig, outdir / "sin2_trace.svg"))

    logger.info(f"Wrote {len(written)} plot(s) to {outdir}")
    return written


def write_manifest(config: ExperimentConfig, records: Sequence[RunRecord], path: str | Path) -> Path:
    """Resolved config, its hash and per-cell VI summaries."""
    manifest = {
        "config_hash": config.config_hash(),
        "config": config.model_dump(mode="json"),
        "cells": len(records),
        "status_counts": {s: sum(r.status == s for r in records) for s in ("ok", "stuck", "failed")},
        "vi": [
            {"scheme": r.scheme, "d": r.d, "seed": r.seed, **r.vi_summary}
            for r in records if r.vi_summary
        ],
        "errors": [
            {"scheme": r.scheme, "d": r.d, "seed": r.seed, "error": r.error}
            for r in records if r.error
        ],
    }
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
