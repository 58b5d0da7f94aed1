"""Command-line entry point: resonate, fieldmap, doa, and sweep pipelines.

Every command reads a YAML scenario config, writes its outputs into a run
directory, and stamps each file with the tool version and a hash of the
fully-resolved config so outputs can be traced back to their inputs.
All angles at this interface are in degrees.
"""

from __future__ import annotations

import functools
import json
import math
from pathlib import Path

import click
import numpy as np

from . import __version__
from . import doa as doa_mod
from .errors import MrlsError, UnresolvedSourcesError
from .fieldmap import PLANES, plane_spec, radiate
from .metrics import (
    load_sweep,
    run_sweep,
    snr,
    write_aggregate_csv,
    write_trials_csv,
)
from .resonance import build_channels, run_resonance, transmission_efficiency
from .scenario import Scenario, load_scenario


def _load(config: str, seed: int | None) -> Scenario:
    scenario = load_scenario(config)
    if seed is not None:
        scenario = scenario.replace_seed(seed)
    return scenario


def _header(scenario: Scenario) -> list:
    return [f"mrls {__version__}", f"config_hash={scenario.config_hash()}"]


def _limit_threads(threads: int | None) -> None:
    if threads is None:
        return
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=threads)
    except ImportError:
        pass  # BLAS keeps its default; pure-Python paths are single-threaded


def _write_json(path: Path, payload: dict, scenario: Scenario) -> None:
    payload = {
        "tool_version": __version__,
        "config_hash": scenario.config_hash(),
        **payload,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _finite(x: float) -> float | None:
    return x if math.isfinite(x) else None


_common = [
    click.option("--config", required=True, type=click.Path(exists=True)),
    click.option("--out", required=True, type=click.Path()),
    click.option("--seed", type=int, default=None, help="Override the config seed."),
    click.option("--threads", type=int, default=None, help="Cap worker threads."),
]


def _with_common(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except MrlsError as e:
            raise click.ClickException(str(e)) from e

    for opt in reversed(_common):
        wrapper = opt(wrapper)
    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="mrls")
def main():
    """Resonant-beam localization simulator."""


@main.command()
@_with_common
def resonate(config, out, seed, threads):
    """Run the resonance loop and write the power trace and summary."""
    _limit_threads(threads)
    scenario = _load(config, seed)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    trace = run_resonance(scenario)
    trace.to_csv(out_dir / "trace.csv", _header(scenario))

    eta = None
    snr_db = None
    if trace.diagnostic is None:
        eta = transmission_efficiency(trace)
        powers = trace.steady_source_powers(scenario.doa.source_power_iters)
        if scenario.doa.noise_power_w > 0:
            snr_db = _finite(snr(powers, scenario.doa.noise_power_w))
    _write_json(
        out_dir / "summary.json",
        {
            "seed": scenario.seed,
            "iterations": trace.iterations,
            "converged": trace.converged,
            "diagnostic": trace.diagnostic,
            "final_bs_received_w": float(trace.bs_received_power[-1]),
            "final_bs_transmit_w": float(trace.bs_transmit_power[-1]),
            "final_per_mt_received_w": [float(v) for v in trace.per_mt_received_power[-1]],
            "efficiency": eta,
            "snr_db": snr_db,
        },
        scenario,
    )
    click.echo(f"wrote {out_dir}/trace.csv ({trace.iterations} iterations)")


@main.command()
@_with_common
@click.option("--plane", type=click.Choice(sorted(PLANES)), default="yoz")
@click.option("--offset", type=float, default=0.0, help="Plane offset along its normal, m.")
@click.option(
    "--extent",
    nargs=4,
    type=float,
    default=(-2.0, 2.0, 0.0, 4.0),
    help="u_min u_max v_min v_max in meters.",
)
@click.option("--resolution", nargs=2, type=int, default=(201, 201))
@click.option(
    "--source",
    type=click.Choice(["joint", "bs"]),
    default="joint",
    help="Radiate BS and MTs coherently, or the BS alone.",
)
def fieldmap(config, out, seed, threads, plane, offset, extent, resolution, source):
    """Map the steady-state power density on a plane."""
    _limit_threads(threads)
    scenario = _load(config, seed)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    trace = run_resonance(scenario)
    constants = scenario.constants()
    sources = [(scenario.bs_geometry(), trace.final_bs_excitation)]
    if source == "joint":
        sources += list(zip(scenario.mt_geometries(), trace.final_mt_excitations))
    grid = plane_spec(plane, extent, tuple(resolution), offset)
    field = radiate(sources, grid, constants)
    path = out_dir / f"fieldmap_{plane}.csv"
    field.to_csv(path, _header(scenario))
    click.echo(f"wrote {path}")


@main.command()
@_with_common
@click.option("--system", type=click.Choice(["mrls", "bfls"]), default="mrls")
def doa(config, out, seed, threads, system):
    """Estimate every MT's direction via 2-D MUSIC."""
    _limit_threads(threads)
    scenario = _load(config, seed)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(scenario.seed)
    channels = build_channels(scenario)
    eta = None
    if system == "mrls":
        state = run_resonance(scenario, channels=channels, rng=rng)
        if state.diagnostic is not None:
            _write_json(
                out_dir / "summary.json",
                {"system": system, "failure": state.diagnostic, "estimates": []},
                scenario,
            )
            click.echo(f"no estimates: {state.diagnostic}")
            return
        eta = transmission_efficiency(state)
    else:
        state = doa_mod.bfls_baseline(scenario, channels=channels)

    powers = doa_mod.source_powers(state, scenario)
    snr_db = (
        _finite(snr(powers, scenario.doa.noise_power_w))
        if scenario.doa.noise_power_w > 0
        else None
    )
    snaps = doa_mod.generate_snapshots(state, scenario, rng=rng)
    truths = [
        {"theta_deg": math.degrees(t), "phi_deg": math.degrees(p)}
        for t, p in doa_mod.true_directions(scenario)
    ]
    try:
        result = doa_mod.estimate_doa(snaps, scenario)
    except UnresolvedSourcesError as e:
        _write_json(
            out_dir / "summary.json",
            {
                "system": system,
                "failure": "unresolved-sources",
                "snr_db": snr_db,
                "efficiency": eta,
                "true_directions": truths,
                "estimates": [
                    {"theta_deg": th, "phi_deg": ph} for th, ph in e.found
                ],
            },
            scenario,
        )
        click.echo(f"unresolved sources: found {len(e.found)} peaks")
        return

    result.to_csv(out_dir / "spectrum.csv", _header(scenario))
    estimates = [
        {"theta_deg": th, "phi_deg": ph, "peak": pk}
        for (th, ph), pk in zip(result.estimates, result.peak_values)
    ]
    (out_dir / "estimates.json").write_text(
        json.dumps(
            {
                "tool_version": __version__,
                "config_hash": scenario.config_hash(),
                "estimates": estimates,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    _write_json(
        out_dir / "summary.json",
        {
            "system": system,
            "failure": None,
            "snr_db": snr_db,
            "efficiency": eta,
            "true_directions": truths,
            "estimates": estimates,
        },
        scenario,
    )
    click.echo(f"wrote {out_dir}/spectrum.csv and estimates.json")


@main.command()
@_with_common
@click.option("--sweep", "sweep_path", required=True, type=click.Path(exists=True))
def sweep(config, out, seed, threads, sweep_path):
    """Monte Carlo sweep over elevation, distance, noise, or reference points."""
    _limit_threads(threads)
    scenario = _load(config, seed)
    spec = load_sweep(sweep_path)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    result = run_sweep(spec, scenario, master_seed=scenario.seed)
    header = _header(scenario)
    write_aggregate_csv(result, out_dir / "aggregate.csv", header)
    write_trials_csv(result, out_dir / "trials.csv", header)
    _write_json(
        out_dir / "summary.json",
        {
            "master_seed": result.master_seed,
            "variable": spec.variable,
            "values": [a["value"] for a in result.aggregates],
            "trials": spec.trials,
            "systems": list(spec.systems),
        },
        scenario,
    )
    click.echo(f"wrote {out_dir}/aggregate.csv ({len(result.records)} trials)")


if __name__ == "__main__":
    main()
