"""Report files: JSON, CSV and SVG with byte-stable output.

JSON keys are sorted and non-finite floats become the strings "inf",
"-inf" and "nan" so the files stay strict JSON.  SVGs are written with a
fixed hash salt and no date stamp.
"""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

__all__ = ["jsonable", "write_json", "write_csv", "loglog_plot", "bar_chart", "dumps", "out_dir"]

_SALT = "lavgap"


def jsonable(obj):
    """Plain-Python copy of ``obj`` (numpy scalars/arrays, tuples, dataclass dicts)."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "as_dict"):
        return jsonable(obj.as_dict())
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _ensure_parent(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_json(path, obj) -> Path:
    path = _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
    return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


def write_csv(path, rows, fields=None) -> Path:
    """Rows are dicts; column order follows ``fields`` or the first row."""
    path = _ensure_parent(path)
    rows = list(rows)
    if fields is None:
        fields = list(rows[0].keys()) if rows else []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_cell(r.get(k, "")) for k in fields])
    return path


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = _SALT
    matplotlib.rcParams["svg.fonttype"] = "path"
    return plt


def _save(fig, path):
    path = _ensure_parent(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    return path


def loglog_plot(path, series, *, xlabel, ylabel, title="") -> Path:
    """``series`` maps a legend label to (x, y); non-positive values are dropped."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for label, (x, y) in series.items():
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
        if ok.any():
            ax.loglog(x[ok], y[ok], "o-", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if series:
        ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


def bar_chart(path, labels, values, *, ylabel, title="", reference=None) -> Path:
    """Bars on a log axis; ``reference`` maps a label to a horizontal line."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    x = np.arange(len(labels))
    ax.bar(x, values, color=["C%d" % (i % 10) for i in range(len(labels))])
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right")
    for name, val in (reference or {}).items():
        ax.axhline(val, linestyle="--", linewidth=1, color="k")
        ax.annotate(name, (x[-1] if len(x) else 0, val), textcoords="offset points",
                    xytext=(0, 3), ha="right", fontsize=8)
    ax.set_yscale("log")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


def out_dir(flag_value=None) -> Path:
    """LAVGAP_OUT overrides the output directory; default ./lavgap_out."""
    env = os.environ.get("LAVGAP_OUT")
    return Path(env or flag_value or "lavgap_out")
