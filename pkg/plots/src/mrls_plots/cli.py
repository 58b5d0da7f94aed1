"""Command-line entry points for rendering simulator outputs.

``mrls-plots render`` draws one image from explicit inputs;
``mrls-plots make-all`` scans a simulator output directory and renders
an image per recognized CSV.
"""

from __future__ import annotations

from pathlib import Path

import click

from . import PlotsError, __version__
from .io import (
    AGGREGATE_COLUMNS,
    FIELDMAP_COLUMNS,
    SPECTRUM_COLUMNS,
    TRACE_COLUMNS,
    TRIALS_COLUMNS,
    read_table,
)
from .render import KINDS, PlotJob, render


def detect_kind(path) -> str | None:
    """Guess the plot kind for a CSV from its columns, or None."""
    try:
        table = read_table(path)
    except (PlotsError, OSError, UnicodeDecodeError):
        return None
    cols = set(table.frame.columns)
    if set(FIELDMAP_COLUMNS) <= cols:
        return "heatmap"
    if set(SPECTRUM_COLUMNS) <= cols:
        return "surface"
    if set(TRIALS_COLUMNS) <= cols:
        return "scatter"
    if set(AGGREGATE_COLUMNS) <= cols or set(TRACE_COLUMNS) <= cols:
        return "line"
    return None


@click.group()
@click.version_option(version=__version__, prog_name="mrls-plots")
def main() -> None:
    """Render images from the resonance simulator's CSV outputs."""


@main.command("render")
@click.option(
    "--input",
    "inputs",
    multiple=True,
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Input CSV (repeat to overlay; line kind only).",
)
@click.option("--output", required=True, type=click.Path(path_type=Path))
@click.option("--kind", required=True, type=click.Choice(KINDS))
@click.option("--y", "y_column", default=None, help="Aggregate column for line plots.")
@click.option("--title", default=None)
def render_cmd(inputs, output, kind, y_column, title) -> None:
    """Render one image from one or more CSV files."""
    try:
        render(
            PlotJob(
                inputs=tuple(inputs),
                kind=kind,
                output=output,
                y_column=y_column,
                title=title,
            )
        )
    except PlotsError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {output}")


@main.command("make-all")
@click.option(
    "--input",
    "run_dir",
    required=True,
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    help="Directory of simulator CSV outputs.",
)
@click.option(
    "--output",
    "out_dir",
    required=True,
    type=click.Path(file_okay=False, path_type=Path),
    help="Directory to write images into.",
)
def make_all_cmd(run_dir, out_dir) -> None:
    """Render every recognized CSV under a run directory."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rendered = 0
    for path in sorted(run_dir.rglob("*.csv")):
        kind = detect_kind(path)
        if kind is None:
            click.echo(f"skipping {path} (unrecognized columns)")
            continue
        target = out_dir / (path.stem + ".png")
        try:
            render(PlotJob(inputs=(path,), kind=kind, output=target))
        except PlotsError as exc:
            raise click.ClickException(str(exc))
        click.echo(f"wrote {target} ({kind})")
        rendered += 1
    if rendered == 0:
        raise click.ClickException(f"no renderable CSV files under {run_dir}")


if __name__ == "__main__":
    main()
