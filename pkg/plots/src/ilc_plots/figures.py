"""Render experiment trace CSVs into the three standard figure kinds.

Consumes files only: run-trace CSVs (k, dyn_regret, term3, ...) for the
regret kinds and a tracking CSV (t, reference, adaptive, nonadaptive) for
the trajectory comparison.  Nothing here imports the simulator, so any
producer writing the same schema works.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("regret", "regret-semilog", "tracking")
FIGSIZE = (6.4, 4.0)
DPI = 150

REGRET_COLUMNS = ("k", "dyn_regret", "term3")
TRACKING_COLUMNS = ("t", "reference", "adaptive", "nonadaptive")


class PlotError(ValueError):
    pass


class MissingColumnError(PlotError):
    def __init__(self, path, column):
        super().__init__(f"{path}: missing column '{column}'")
        self.path = str(path)
        self.column = column


@dataclass(frozen=True)
class PlotSpec:
    """One figure: input CSVs, output image path, kind, optional labels."""

    inputs: tuple
    output: str
    kind: str
    xlabel: str | None = None
    ylabel: str | None = None
    title: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))
        if self.kind not in KINDS:
            raise PlotError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise PlotError("at least one input CSV is required")
        if self.kind == "tracking" and len(self.inputs) != 1:
            raise PlotError("tracking takes exactly one CSV "
                            f"(got {len(self.inputs)})")

    @classmethod
    def from_file(cls, path) -> "PlotSpec":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise PlotError(f"spec is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise PlotError("spec JSON must be an object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise PlotError(f"unknown spec keys: {', '.join(unknown)}")
        missing = sorted({"inputs", "output", "kind"} - set(data))
        if missing:
            raise PlotError(f"spec needs keys: {', '.join(missing)}")
        return cls(**data)


def load_columns(path, required) -> dict:
    """Named float arrays for the required columns; errors name what's absent."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or ()
        for col in required:
            if col not in header:
                raise MissingColumnError(path, col)
        rows = list(reader)
    if not rows:
        raise PlotError(f"{path}: no data rows")
    out = {}
    for col in required:
        try:
            out[col] = np.array([float(row[col]) for row in rows])
        except (TypeError, ValueError) as exc:
            raise PlotError(f"{path}: column '{col}' is not numeric: {exc}") from exc
    return out


def _curve_label(path) -> str:
    return Path(path).stem


def build_figure(spec: PlotSpec):
    """The matplotlib Figure for a spec; render() saves it to disk."""
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    if spec.kind == "tracking":
        data = load_columns(spec.inputs[0], TRACKING_COLUMNS)
        ax.plot(data["t"], data["reference"], "k--", label="reference")
        ax.plot(data["t"], data["adaptive"], label="adaptive")
        ax.plot(data["t"], data["nonadaptive"], label="non-adaptive")
        ax.set_xlabel(spec.xlabel or "time step")
        ax.set_ylabel(spec.ylabel or "output")
    else:
        traces = [(p, load_columns(p, REGRET_COLUMNS)) for p in spec.inputs]
        semilog = spec.kind == "regret-semilog"
        for path, data in traces:
            k, jd = data["k"], data["dyn_regret"]
            if semilog:
                # zoom on the tail, where the decay rates separate
                keep = k >= k[-1] / 2
                k, jd = k[keep], jd[keep]
            ax.plot(k, jd, label=_curve_label(path))
        first_k, first = traces[0][1]["k"], traces[0][1]["term3"]
        if semilog:
            keep = first_k >= first_k[-1] / 2
            first_k, first = first_k[keep], first[keep]
            ax.set_yscale("log")
        ax.plot(first_k, first, "k--", label="benchmark drift term")
        ax.set_xlabel(spec.xlabel or "iteration")
        ax.set_ylabel(spec.ylabel or "dynamic regret")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> Path:
    """Write the figure to spec.output and return its path."""
    fig = build_figure(spec)
    out = Path(spec.output)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out, dpi=DPI)
    finally:
        plt.close(fig)
    return out


def sample_path(name) -> Path:
    """Path of a shipped sample CSV (sample_regret.csv, sample_tracking.csv)."""
    return Path(str(resources.files("ilc_plots") / "sample_data" / name))
