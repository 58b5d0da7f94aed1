"""SNR, RMSE, and seeded Monte Carlo sweeps over scenario parameters.

A sweep varies one scenario knob (MT elevation, MT range, snapshot noise
power, or a grid of reference directions), runs the full pipeline —
resonance or the BFLS baseline, then snapshots, then MUSIC — for a number
of independent trials per value, and aggregates SNR, efficiency, RMSE,
and the failure rate per value.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.optimize import linear_sum_assignment

from . import doa as doa_mod
from .errors import ConfigError, InvalidArgumentError, UnresolvedSourcesError
from .resonance import (
    RESONANCE_COLLAPSE,
    build_channels,
    run_resonance,
    transmission_efficiency,
)
from .scenario import Scenario

SWEEP_VARIABLES = ("elevation", "distance", "noise_power", "reference_grid")
SYSTEMS = ("mrls", "bfls")


@dataclass(frozen=True)
class MtRecord:
    true_theta_deg: float
    true_phi_deg: float
    est_theta_deg: float
    est_phi_deg: float

    @property
    def theta_error_deg(self) -> float:
        return abs(self.true_theta_deg - self.est_theta_deg)

    @property
    def phi_error_deg(self) -> float:
        return abs(self.true_phi_deg - self.est_phi_deg)


@dataclass(frozen=True)
class TrialRecord:
    """One pipeline run: a (sweep value, trial, system) triple."""

    scenario_id: str
    system: str  # "mrls" or "bfls"
    value_index: int
    trial_index: int
    value_label: str
    seed: int
    snr_db: float
    efficiency: float  # nan when undefined (BFLS, collapse)
    per_mt: tuple[MtRecord, ...]
    failure: str | None = None  # e.g. "unresolved-sources", "resonance-collapse"


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    trials: int
    systems: tuple[str, ...] = ("mrls",)

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}"
            )
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        for s in self.systems:
            if s not in SYSTEMS:
                raise ConfigError(f"system must be one of {SYSTEMS}, got {s!r}")


@dataclass
class SweepResult:
    spec: SweepSpec
    master_seed: int
    records: list  # TrialRecord, ordered by (system, value index, trial index)
    aggregates: list  # dicts per (system, value)


def snr(signal_powers, noise_power: float) -> float:
    """Total signal power over noise power, in dB; -inf for zero signal."""
    if noise_power <= 0:
        raise InvalidArgumentError(f"noise power must be positive, got {noise_power}")
    total = float(np.sum(signal_powers))
    if total <= 0:
        return -math.inf
    return 10.0 * math.log10(total / noise_power)


def rmse(records, mt_index: int | None = None) -> float:
    """Root of summed elevation and azimuth mean-square errors, degrees.

    Failed trials are excluded; ``mt_index`` restricts to one target,
    otherwise all targets pool into the means.
    """
    records = [r for r in records if r.failure is None]
    if not records:
        raise InvalidArgumentError("rmse needs at least one successful record")
    th_sq, ph_sq = [], []
    for r in records:
        mts = r.per_mt if mt_index is None else (r.per_mt[mt_index],)
        for m in mts:
            th_sq.append(m.theta_error_deg**2)
            ph_sq.append(m.phi_error_deg**2)
    return math.sqrt(float(np.mean(th_sq)) + float(np.mean(ph_sq)))


def match_estimates(truths_deg, estimates_deg):
    """Pair estimates with true directions by minimum total squared error."""
    t = np.asarray(truths_deg, dtype=float)
    e = np.asarray(estimates_deg, dtype=float)
    cost = ((t[:, None, :] - e[None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    return [(int(i), int(j)) for i, j in zip(rows, cols)]


def _apply_value(base: Scenario, variable: str, value) -> Scenario:
    if variable == "elevation":
        mts = tuple(
            dataclasses.replace(p, elevation=math.radians(float(value))) for p in base.mts
        )
        return dataclasses.replace(base, mts=mts)
    if variable == "distance":
        mts = tuple(dataclasses.replace(p, range_m=float(value)) for p in base.mts)
        return dataclasses.replace(base, mts=mts)
    if variable == "noise_power":
        doa = dataclasses.replace(base.doa, noise_power_w=float(value))
        return dataclasses.replace(base, doa=doa)
    if variable == "reference_grid":
        th, ph = value
        mts = tuple(
            dataclasses.replace(
                p, elevation=math.radians(float(th)), azimuth=math.radians(float(ph))
            )
            for p in base.mts
        )
        return dataclasses.replace(base, mts=mts)
    raise ConfigError(f"unknown sweep variable {variable!r}")


def _value_label(variable: str, value) -> str:
    if variable == "reference_grid":
        return f"{float(value[0]):g}/{float(value[1]):g}"
    return f"{float(value):g}"


def run_trial(
    scenario: Scenario,
    system: str,
    rng: np.random.Generator,
    channels=None,
) -> tuple[float, float, tuple, str | None]:
    """One full pipeline run; returns (snr_db, eta, per-MT records, failure)."""
    if channels is None:
        channels = build_channels(scenario)
    failure = None
    eta = math.nan
    if system == "mrls":
        trace = run_resonance(scenario, channels=channels, rng=rng)
        if trace.diagnostic == RESONANCE_COLLAPSE:
            return -math.inf, math.nan, (), RESONANCE_COLLAPSE
        eta = transmission_efficiency(trace)
        state = trace
    else:
        state = doa_mod.bfls_baseline(scenario, channels=channels)

    powers = doa_mod.source_powers(state, scenario)
    snr_db = (
        snr(powers, scenario.doa.noise_power_w)
        if scenario.doa.noise_power_w > 0
        else math.inf
    )
    snaps = doa_mod.generate_snapshots(state, scenario, rng=rng)
    truths = [
        (math.degrees(t), math.degrees(p)) for t, p in doa_mod.true_directions(scenario)
    ]
    try:
        result = doa_mod.estimate_doa(snaps, scenario)
        pairs = match_estimates(truths, result.estimates)
        per_mt = tuple(
            MtRecord(
                true_theta_deg=truths[i][0],
                true_phi_deg=truths[i][1],
                est_theta_deg=result.estimates[j][0],
                est_phi_deg=result.estimates[j][1],
            )
            for i, j in pairs
        )
    except UnresolvedSourcesError:
        per_mt = ()
        failure = "unresolved-sources"
    return snr_db, eta, per_mt, failure


def trial_seed(master_seed: int, value_index: int, trial_index: int, system: str) -> int:
    """Deterministic child seed; independent of execution order."""
    ss = np.random.SeedSequence(
        master_seed, spawn_key=(value_index, trial_index, SYSTEMS.index(system))
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_sweep(spec: SweepSpec, base: Scenario, master_seed: int | None = None) -> SweepResult:
    """Run trials for every (system, value) pair and aggregate.

    Individual trial failures (unresolved sources, resonance collapse) are
    tagged and excluded from RMSE but counted in the failure rate.
    """
    if master_seed is None:
        master_seed = base.seed
    scenario_id = base.config_hash()
    records = []
    aggregates = []
    for system in spec.systems:
        for vi, value in enumerate(spec.values):
            scenario = _apply_value(base, spec.variable, value)
            channels = build_channels(scenario)
            label = _value_label(spec.variable, value)
            group = []
            for ti in range(spec.trials):
                seed = trial_seed(master_seed, vi, ti, system)
                rng = np.random.default_rng(
                    np.random.SeedSequence(
                        master_seed, spawn_key=(vi, ti, SYSTEMS.index(system))
                    )
                )
                snr_db, eta, per_mt, failure = run_trial(
                    scenario, system, rng, channels=channels
                )
                group.append(
                    TrialRecord(
                        scenario_id=scenario_id,
                        system=system,
                        value_index=vi,
                        trial_index=ti,
                        value_label=label,
                        seed=seed,
                        snr_db=snr_db,
                        efficiency=eta,
                        per_mt=per_mt,
                        failure=failure,
                    )
                )
            records.extend(group)
            ok = [r for r in group if r.failure is None]
            etas = [r.efficiency for r in ok if not math.isnan(r.efficiency)]
            snrs = [r.snr_db for r in group if math.isfinite(r.snr_db)]
            if not snrs and any(r.snr_db == math.inf for r in group):
                snrs = [math.inf]
            aggregates.append(
                {
                    "system": system,
                    "value": label,
                    "mean_snr_db": float(np.mean(snrs)) if snrs else -math.inf,
                    "mean_eta": float(np.mean(etas)) if etas else math.nan,
                    "rmse_deg": rmse(ok) if ok else math.nan,
                    "failure_rate": 1.0 - len(ok) / len(group),
                }
            )
    return SweepResult(
        spec=spec, master_seed=master_seed, records=records, aggregates=aggregates
    )


def write_aggregate_csv(result: SweepResult, path, header_lines=()) -> None:
    with open(path, "w") as f:
        for line in header_lines:
            f.write(f"# {line}\n")
        f.write("system,value,mean_snr_db,mean_eta,rmse_deg,failure_rate\n")
        for a in result.aggregates:
            f.write(
                f"{a['system']},{a['value']},{a['mean_snr_db']:.6f},"
                f"{a['mean_eta']:.8e},{a['rmse_deg']:.6f},{a['failure_rate']:.4f}\n"
            )


def write_trials_csv(result: SweepResult, path, header_lines=()) -> None:
    cols = (
        "system,value,trial,seed,snr_db,efficiency,failure,mt_index,"
        "true_theta_deg,true_phi_deg,est_theta_deg,est_phi_deg,"
        "theta_error_deg,phi_error_deg"
    )
    with open(path, "w") as f:
        for line in header_lines:
            f.write(f"# {line}\n")
        f.write(cols + "\n")
        for r in result.records:
            head = (
                f"{r.system},{r.value_label},{r.trial_index},{r.seed},"
                f"{r.snr_db:.6f},{r.efficiency:.8e},{r.failure or ''}"
            )
            if not r.per_mt:
                f.write(head + ",,,,,,\n")
                continue
            for mi, m in enumerate(r.per_mt):
                f.write(
                    f"{head},{mi},{m.true_theta_deg:.6f},{m.true_phi_deg:.6f},"
                    f"{m.est_theta_deg:.6f},{m.est_phi_deg:.6f},"
                    f"{m.theta_error_deg:.6f},{m.phi_error_deg:.6f}\n"
                )


def sweep_from_dict(raw: dict) -> SweepSpec:
    """Validate a sweep description tree."""
    if not isinstance(raw, dict):
        raise ConfigError("sweep root must be a mapping")
    unknown = set(raw) - {"variable", "values", "trials", "systems"}
    if unknown:
        raise ConfigError(f"unknown key '{sorted(unknown)[0]}'")
    variable = raw.get("variable")
    if variable not in SWEEP_VARIABLES:
        raise ConfigError(
            f"'variable' must be one of {SWEEP_VARIABLES}, got {variable!r}"
        )
    values_raw = raw.get("values")
    if not isinstance(values_raw, list) or not values_raw:
        raise ConfigError("'values' must be a non-empty list")
    values = []
    for i, v in enumerate(values_raw):
        if variable == "reference_grid":
            if not (isinstance(v, (list, tuple)) and len(v) == 2):
                raise ConfigError(
                    f"'values[{i}]' must be a [theta_deg, phi_deg] pair"
                )
            values.append((float(v[0]), float(v[1])))
        else:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"'values[{i}]' must be a number, got {v!r}")
            values.append(float(v))
    trials = raw.get("trials", 1)
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"'trials' must be a positive integer, got {trials!r}")
    systems_raw = raw.get("systems", ["mrls"])
    if isinstance(systems_raw, str):
        systems_raw = [systems_raw]
    if systems_raw == ["both"]:
        systems_raw = list(SYSTEMS)
    if not isinstance(systems_raw, list) or not systems_raw:
        raise ConfigError("'systems' must be a non-empty list")
    return SweepSpec(
        variable=variable,
        values=tuple(values),
        trials=trials,
        systems=tuple(systems_raw),
    )


def load_sweep(path) -> SweepSpec:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse sweep spec {path}: {e}") from e
    return sweep_from_dict(raw)
