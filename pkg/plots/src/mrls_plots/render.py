"""Render figure-like images from the simulator's CSV outputs.

Four plot kinds cover the artifact families:

- ``heatmap``  — a power-density field map over a sampling plane
- ``line``     — sweep aggregates (per-system curves) or a resonance
                 power trace (powers vs. iteration)
- ``surface``  — a 3-D pseudo-spectrum over the angle grid
- ``scatter``  — per-trial true vs. estimated directions
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import SchemaError
from .io import (
    AGGREGATE_COLUMNS,
    FIELDMAP_COLUMNS,
    SPECTRUM_COLUMNS,
    TRACE_COLUMNS,
    TRIALS_COLUMNS,
    Table,
    check_hash_consistency,
    read_table,
)

KINDS = ("heatmap", "line", "surface", "scatter")


@dataclass(frozen=True)
class PlotJob:
    """One image to produce from one or more input tables."""

    inputs: tuple
    kind: str
    output: Path
    title: str | None = None
    y_column: str | None = None  # line kind: aggregate column to plot
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(
                f"unknown plot kind '{self.kind}'; expected one of {KINDS}"
            )
        if not self.inputs:
            raise SchemaError("a plot job needs at least one input file")


def _pivot_grid(frame, row_col, col_col, value_col):
    """Reshape long-format (row, col, value) rows into a 2-D array."""
    pivot = frame.pivot_table(
        index=row_col, columns=col_col, values=value_col, aggfunc="mean"
    )
    return (
        np.asarray(pivot.columns, dtype=float),
        np.asarray(pivot.index, dtype=float),
        pivot.to_numpy(dtype=float),
    )


def _require(table: Table, columns) -> None:
    for col in columns:
        if col not in table.frame.columns:
            raise SchemaError(f"{table.path}: missing column '{col}'")


def _render_heatmap(ax, table: Table) -> None:
    _require(table, FIELDMAP_COLUMNS)
    u, v, z = _pivot_grid(table.frame, "v", "u", "power_normalized")
    mesh = ax.pcolormesh(u, v, z, shading="nearest", cmap="inferno")
    ax.figure.colorbar(mesh, ax=ax, label="normalized power density")
    ax.set_xlabel(table.metadata.get("u_label", "u (m)"))
    ax.set_ylabel(table.metadata.get("v_label", "v (m)"))
    ax.set_aspect("equal")


def _render_line(ax, tables) -> None:
    frame = tables[0].frame
    if "iter" in frame.columns:
        for table in tables:
            _require(table, TRACE_COLUMNS)
            power_cols = [c for c in table.frame.columns if c != "iter"]
            for col in power_cols:
                ax.plot(table.frame["iter"], table.frame[col], label=col)
        ax.set_xlabel("iteration")
        ax.set_ylabel("power (W)")
        ax.set_yscale("log")
    else:
        y = None
        for table in tables:
            _require(table, AGGREGATE_COLUMNS)
            if y is None:
                y = _pick_aggregate_column(table)
            for system, group in table.frame.groupby("system"):
                label = system if len(tables) == 1 else f"{system} ({table.path.stem})"
                ax.plot(
                    _numeric_values(group["value"]),
                    group[y],
                    marker="o",
                    label=label,
                )
        ax.set_xlabel("swept value")
        ax.set_ylabel(y)
    ax.grid(True, alpha=0.3)
    ax.legend()


def _pick_aggregate_column(table: Table) -> str:
    """Default y column for aggregate curves, preferring SNR."""
    for candidate in ("mean_snr_db", "rmse_deg", "mean_eta"):
        if candidate in table.frame.columns:
            return candidate
    raise SchemaError(f"{table.path}: missing column 'mean_snr_db'")


def _numeric_values(series):
    """Sweep values are written as labels; plot them numerically if possible."""
    try:
        return np.asarray(series, dtype=float)
    except (TypeError, ValueError):
        return np.asarray(series, dtype=object)


def _render_surface(fig, table: Table) -> None:
    _require(table, SPECTRUM_COLUMNS)
    theta, phi, z = _pivot_grid(table.frame, "phi_deg", "theta_deg", "p_music")
    z_db = 10.0 * np.log10(np.maximum(z, np.finfo(float).tiny))
    ax = fig.add_subplot(111, projection="3d")
    tt, pp = np.meshgrid(theta, phi)
    ax.plot_surface(tt, pp, z_db, cmap="viridis", linewidth=0, antialiased=False)
    ax.set_xlabel("theta (deg)")
    ax.set_ylabel("phi (deg)")
    ax.set_zlabel("pseudo-spectrum (dB)")


def _render_scatter(ax, table: Table) -> None:
    _require(table, TRIALS_COLUMNS)
    frame = table.frame.dropna(subset=["est_theta_deg", "est_phi_deg"])
    for system, group in frame.groupby("system"):
        ax.scatter(
            group["est_theta_deg"],
            group["est_phi_deg"],
            s=12,
            alpha=0.6,
            label=f"{system} estimates",
        )
    truth = frame.drop_duplicates(subset=["true_theta_deg", "true_phi_deg"])
    ax.scatter(
        truth["true_theta_deg"],
        truth["true_phi_deg"],
        marker="x",
        s=80,
        color="black",
        label="true directions",
    )
    ax.set_xlabel("theta (deg)")
    ax.set_ylabel("phi (deg)")
    ax.grid(True, alpha=0.3)
    ax.legend()


def render(job: PlotJob) -> Path:
    """Render one job to a raster image; returns the output path."""
    tables = [read_table(p) for p in job.inputs]
    check_hash_consistency(tables)

    if job.kind == "surface":
        fig = plt.figure(figsize=(7.5, 5.5), dpi=110)
        try:
            _render_surface(fig, tables[0])
            _finish(fig, job)
        finally:
            plt.close(fig)
        return Path(job.output)

    fig, ax = plt.subplots(figsize=(7.0, 5.0), dpi=110)
    try:
        if job.kind == "heatmap":
            _render_heatmap(ax, tables[0])
        elif job.kind == "line":
            if job.y_column is not None:
                _require(tables[0], AGGREGATE_COLUMNS)
                if job.y_column not in tables[0].frame.columns:
                    raise SchemaError(
                        f"{tables[0].path}: missing column '{job.y_column}'"
                    )
                _render_line_fixed(ax, tables, job.y_column)
            else:
                _render_line(ax, tables)
        elif job.kind == "scatter":
            _render_scatter(ax, tables[0])
        _finish(fig, job)
    finally:
        plt.close(fig)
    return Path(job.output)


def _render_line_fixed(ax, tables, y: str) -> None:
    for table in tables:
        _require(table, AGGREGATE_COLUMNS)
        for system, group in table.frame.groupby("system"):
            label = system if len(tables) == 1 else f"{system} ({table.path.stem})"
            ax.plot(_numeric_values(group["value"]), group[y], marker="o", label=label)
    ax.set_xlabel("swept value")
    ax.set_ylabel(y)
    ax.grid(True, alpha=0.3)
    ax.legend()


def _finish(fig, job: PlotJob) -> None:
    if job.title:
        fig.suptitle(job.title)
    out = Path(job.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, bbox_inches="tight")
