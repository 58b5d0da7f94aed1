"""Scenario configuration: schema, validation, and builders.

Configs are YAML (or JSON) trees. External angle fields are in degrees;
everything is converted to radians internally. Unknown keys are rejected
so typos fail loudly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .channel import PhaseNoiseModel, RfConstants
from .errors import ConfigError
from .geometry import ArrayGeometry, MtPlacement, build_upa, place_mt


@dataclass(frozen=True)
class GridSpec:
    """MUSIC search grid in degrees."""

    theta_range: tuple[float, float] = (0.0, 60.0)
    phi_range: tuple[float, float] = (0.0, 90.0)
    step_deg: float = 0.25


@dataclass(frozen=True)
class DoaConfig:
    snapshots: int = 200
    noise_power_w: float = 3.0e-5
    grid: GridSpec = field(default_factory=GridSpec)
    coarse_to_fine: bool = False
    # Iterations of the trace tail averaged into the steady-state source powers.
    source_power_iters: int = 10


@dataclass(frozen=True)
class ResonanceConfig:
    max_iterations: int = 500
    convergence_rel: float = 1.0e-5
    oracle_mode: bool = False


@dataclass(frozen=True)
class PaConfig:
    max_gain_db: float = 24.0
    max_output_w: float = 1.0
    # "regulated": drive the PA to its maximum output each pass (the BS
    # compensates all loop losses). "gain": fixed linear power gain capped
    # by the output ceiling.
    mode: str = "regulated"


@dataclass(frozen=True)
class Scenario:
    frequency_hz: float = 30.0e9
    max_gain_dbi: float = 4.97
    bs_rows: int = 40
    bs_cols: int = 40
    spacing_m: float = 0.005
    initial_power_w: float = 1.0e-3
    mts: tuple[MtPlacement, ...] = ()
    pa: PaConfig = field(default_factory=PaConfig)
    phase_noise_variance: float = 0.3162
    phase_noise_psd: tuple | None = None
    resonance: ResonanceConfig = field(default_factory=ResonanceConfig)
    doa: DoaConfig = field(default_factory=DoaConfig)
    bfls_total_power_w: float | None = None  # defaults to initial_power_w
    seed: int = 0

    def constants(self) -> RfConstants:
        return RfConstants.from_frequency(self.frequency_hz, self.max_gain_dbi)

    def bs_geometry(self) -> ArrayGeometry:
        return build_upa(
            self.bs_rows,
            self.bs_cols,
            self.spacing_m,
            center=(0.0, 0.0, 0.0),
            boresight=(0.0, 0.0, 1.0),
            anchor="centroid",
        )

    def mt_geometries(self) -> list[ArrayGeometry]:
        return [place_mt(p, self.spacing_m) for p in self.mts]

    def noise_model(self) -> PhaseNoiseModel:
        if self.phase_noise_psd is not None:
            return PhaseNoiseModel.from_psd(self.phase_noise_psd)
        return PhaseNoiseModel(variance=self.phase_noise_variance)

    def bfls_power(self) -> float:
        if self.bfls_total_power_w is not None:
            return self.bfls_total_power_w
        return self.initial_power_w

    def canonical_dict(self) -> dict:
        d = {
            "rf": {"frequency_hz": self.frequency_hz, "max_gain_dbi": self.max_gain_dbi},
            "bs": {
                "rows": self.bs_rows,
                "cols": self.bs_cols,
                "spacing_m": self.spacing_m,
                "initial_power_w": self.initial_power_w,
            },
            "mts": [
                {
                    "range_m": p.range_m,
                    "elevation_deg": math.degrees(p.elevation),
                    "azimuth_deg": math.degrees(p.azimuth),
                    "rows": p.rows,
                    "cols": p.cols,
                    "reflection_ratio": p.reflection_ratio,
                }
                for p in self.mts
            ],
            "pa": {
                "max_gain_db": self.pa.max_gain_db,
                "max_output_w": self.pa.max_output_w,
                "mode": self.pa.mode,
            },
            "phase_noise": (
                {"variance_rad2": self.phase_noise_variance}
                if self.phase_noise_psd is None
                else {
                    "psd": [
                        {"f_lo_hz": lo, "f_hi_hz": hi, "level_dbc_hz": lv}
                        for lo, hi, lv in self.phase_noise_psd
                    ]
                }
            ),
            "resonance": {
                "max_iterations": self.resonance.max_iterations,
                "convergence_rel": self.resonance.convergence_rel,
                "oracle_mode": self.resonance.oracle_mode,
            },
            "doa": {
                "snapshots": self.doa.snapshots,
                "noise_power_w": self.doa.noise_power_w,
                "grid": {
                    "theta_range": list(self.doa.grid.theta_range),
                    "phi_range": list(self.doa.grid.phi_range),
                    "step_deg": self.doa.grid.step_deg,
                },
                "coarse_to_fine": self.doa.coarse_to_fine,
                "source_power_iters": self.doa.source_power_iters,
            },
            "seed": self.seed,
        }
        if self.bfls_total_power_w is not None:
            d["bfls"] = {"total_power_w": self.bfls_total_power_w}
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace_seed(self, seed: int) -> "Scenario":
        import dataclasses

        return dataclasses.replace(self, seed=seed)


def _require(mapping: dict, path: str, allowed: set[str]):
    unknown = set(mapping) - allowed
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key '{path}.{key}'" if path else f"unknown key '{key}'")


def _num(mapping: dict, path: str, key: str, default, lo=None, hi=None, integer=False):
    v = mapping.get(key, default)
    if v is None:
        raise ConfigError(f"missing required key '{path}.{key}'")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{path}.{key}' must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"'{path}.{key}' must be an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"'{path}.{key}' must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"'{path}.{key}' must be <= {hi}, got {v}")
    return int(v) if integer else float(v)


def _bool(mapping: dict, path: str, key: str, default):
    v = mapping.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"'{path}.{key}' must be true or false, got {v!r}")
    return v


def scenario_from_dict(raw: dict) -> Scenario:
    """Validate a config tree and build a Scenario. Unknown keys are errors."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _require(
        raw, "", {"rf", "bs", "mts", "pa", "phase_noise", "resonance", "doa", "bfls", "seed"}
    )

    rf = raw.get("rf", {}) or {}
    _require(rf, "rf", {"frequency_hz", "max_gain_dbi"})
    frequency = _num(rf, "rf", "frequency_hz", 30.0e9, lo=1e6)
    max_gain = _num(rf, "rf", "max_gain_dbi", 4.97)

    bs = raw.get("bs", {}) or {}
    _require(bs, "bs", {"rows", "cols", "spacing_m", "initial_power_w"})
    bs_rows = _num(bs, "bs", "rows", 40, lo=1, integer=True)
    bs_cols = _num(bs, "bs", "cols", 40, lo=1, integer=True)
    spacing = _num(bs, "bs", "spacing_m", 0.005, lo=1e-6)
    p0 = _num(bs, "bs", "initial_power_w", 1.0e-3, lo=0.0)

    mts_raw = raw.get("mts")
    if not isinstance(mts_raw, list) or not mts_raw:
        raise ConfigError("'mts' must be a non-empty list of target placements")
    mts = []
    for i, m in enumerate(mts_raw):
        path = f"mts[{i}]"
        if not isinstance(m, dict):
            raise ConfigError(f"'{path}' must be a mapping")
        _require(
            m, path, {"range_m", "elevation_deg", "azimuth_deg", "rows", "cols", "reflection_ratio"}
        )
        mts.append(
            MtPlacement(
                range_m=_num(m, path, "range_m", None, lo=1e-6),
                elevation=math.radians(_num(m, path, "elevation_deg", 0.0, lo=-90.0, hi=90.0)),
                azimuth=math.radians(_num(m, path, "azimuth_deg", 0.0)),
                rows=_num(m, path, "rows", 40, lo=1, integer=True),
                cols=_num(m, path, "cols", 40, lo=1, integer=True),
                reflection_ratio=_num(m, path, "reflection_ratio", 0.004, lo=0.0, hi=1.0),
            )
        )

    pa_raw = raw.get("pa", {}) or {}
    _require(pa_raw, "pa", {"max_gain_db", "max_output_w", "mode"})
    pa_mode = pa_raw.get("mode", "regulated")
    if pa_mode not in ("regulated", "gain"):
        raise ConfigError(f"'pa.mode' must be 'regulated' or 'gain', got {pa_mode!r}")
    pa = PaConfig(
        max_gain_db=_num(pa_raw, "pa", "max_gain_db", 24.0, lo=0.0),
        max_output_w=_num(pa_raw, "pa", "max_output_w", 1.0, lo=0.0),
        mode=pa_mode,
    )

    pn_raw = raw.get("phase_noise", {}) or {}
    _require(pn_raw, "phase_noise", {"variance_rad2", "psd"})
    psd = None
    if "psd" in pn_raw:
        if "variance_rad2" in pn_raw:
            raise ConfigError("'phase_noise' takes either 'variance_rad2' or 'psd', not both")
        if not isinstance(pn_raw["psd"], list) or not pn_raw["psd"]:
            raise ConfigError("'phase_noise.psd' must be a non-empty list of segments")
        psd = []
        for i, seg in enumerate(pn_raw["psd"]):
            path = f"phase_noise.psd[{i}]"
            if not isinstance(seg, dict):
                raise ConfigError(f"'{path}' must be a mapping")
            _require(seg, path, {"f_lo_hz", "f_hi_hz", "level_dbc_hz"})
            psd.append(
                (
                    _num(seg, path, "f_lo_hz", None, lo=0.0),
                    _num(seg, path, "f_hi_hz", None, lo=0.0),
                    _num(seg, path, "level_dbc_hz", None),
                )
            )
        psd = tuple(psd)
        variance = sum(2 * 10 ** (lv / 10) * (hi - lo) for lo, hi, lv in psd)
    else:
        variance = _num(pn_raw, "phase_noise", "variance_rad2", 0.3162, lo=0.0)

    res_raw = raw.get("resonance", {}) or {}
    _require(res_raw, "resonance", {"max_iterations", "convergence_rel", "oracle_mode"})
    resonance = ResonanceConfig(
        max_iterations=_num(res_raw, "resonance", "max_iterations", 500, lo=1, integer=True),
        convergence_rel=_num(res_raw, "resonance", "convergence_rel", 1.0e-5, lo=0.0),
        oracle_mode=_bool(res_raw, "resonance", "oracle_mode", False),
    )

    doa_raw = raw.get("doa", {}) or {}
    _require(
        doa_raw,
        "doa",
        {"snapshots", "noise_power_w", "grid", "coarse_to_fine", "source_power_iters"},
    )
    grid_raw = doa_raw.get("grid", {}) or {}
    _require(grid_raw, "doa.grid", {"theta_range", "phi_range", "step_deg"})

    def _range(key, default):
        v = grid_raw.get(key, default)
        if not (isinstance(v, (list, tuple)) and len(v) == 2):
            raise ConfigError(f"'doa.grid.{key}' must be a [start, stop] pair")
        lo, hi = float(v[0]), float(v[1])
        if hi <= lo:
            raise ConfigError(f"'doa.grid.{key}' must have stop > start")
        return (lo, hi)

    grid = GridSpec(
        theta_range=_range("theta_range", [0.0, 60.0]),
        phi_range=_range("phi_range", [0.0, 90.0]),
        step_deg=_num(grid_raw, "doa.grid", "step_deg", 0.25, lo=1e-4),
    )
    doa = DoaConfig(
        snapshots=_num(doa_raw, "doa", "snapshots", 200, lo=1, integer=True),
        noise_power_w=_num(doa_raw, "doa", "noise_power_w", 3.0e-5, lo=0.0),
        grid=grid,
        coarse_to_fine=_bool(doa_raw, "doa", "coarse_to_fine", False),
        source_power_iters=_num(doa_raw, "doa", "source_power_iters", 10, lo=1, integer=True),
    )

    bfls_raw = raw.get("bfls", {}) or {}
    _require(bfls_raw, "bfls", {"total_power_w"})
    bfls_power = (
        _num(bfls_raw, "bfls", "total_power_w", None, lo=0.0) if bfls_raw else None
    )

    seed = _num(raw, "", "seed", 0, integer=True)

    return Scenario(
        frequency_hz=frequency,
        max_gain_dbi=max_gain,
        bs_rows=bs_rows,
        bs_cols=bs_cols,
        spacing_m=spacing,
        initial_power_w=p0,
        mts=tuple(mts),
        pa=pa,
        phase_noise_variance=variance,
        phase_noise_psd=psd,
        resonance=resonance,
        doa=doa,
        bfls_total_power_w=bfls_power,
        seed=seed,
    )


def load_scenario(path) -> Scenario:
    """Load and validate a YAML/JSON scenario file."""
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e
    return scenario_from_dict(raw)
