"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line (visible via the test name in -v
output and an explicit summary line on stdout) and pins its tolerances
inline. The statistical trend checks (criteria 4-6) use fixed master
seeds so reruns are reproducible.
"""

import dataclasses
import math
import time
from pathlib import Path

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from mrls import doa as D
from mrls.channel import PhaseNoiseModel, RfConstants, sample_phase_noise, transfer_matrix
from mrls.cli import main as cli_main
from mrls.geometry import MtPlacement, build_upa, place_mt
from mrls.metrics import SweepSpec, match_estimates, run_sweep, snr
from mrls.resonance import build_channels, run_resonance, transmission_efficiency
from mrls.scenario import GridSpec, load_scenario, scenario_from_dict

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"CRITERION {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def with_elevation(scenario, deg, range_m=None, mt_size=None):
    mts = []
    for p in scenario.mts:
        q = dataclasses.replace(p, elevation=math.radians(deg))
        if range_m is not None:
            q = dataclasses.replace(q, range_m=range_m)
        if mt_size is not None:
            q = dataclasses.replace(q, rows=mt_size, cols=mt_size)
        mts.append(q)
    return dataclasses.replace(scenario, mts=tuple(mts))


class TestCriterion1EigenmodeOracle:
    def test_criterion_1_eigenmode_oracle(self):
        start = time.time()
        s = scenario_from_dict(
            {
                "bs": {"rows": 8, "cols": 8},
                "mts": [
                    {
                        "range_m": 1.0,
                        "elevation_deg": 0.0,
                        "azimuth_deg": 0.0,
                        "rows": 4,
                        "cols": 4,
                        "reflection_ratio": 0.004,
                    }
                ],
                "phase_noise": {"variance_rad2": 0.0},
                "resonance": {"oracle_mode": True},
                "seed": 1,
            }
        )
        trace = run_resonance(s)
        h = build_channels(s)[0].entries
        vals, vecs = np.linalg.eigh(h.conj().T @ h)
        top_vec, top_val = vecs[:, -1], vals[-1]
        a = trace.final_bs_excitation
        cos = abs(np.vdot(top_vec, a)) / (np.linalg.norm(top_vec) * np.linalg.norm(a))
        # At the fixed point P_rx / P_tx = beta * lambda_top^2.
        beta = s.mts[0].reflection_ratio
        lam = math.sqrt(trace.bs_received_power[-1] / (beta * trace.bs_transmit_power[-1]))
        elapsed = time.time() - start
        ok = cos >= 0.999 and abs(lam - top_val) <= 1e-3 * top_val and elapsed < 1.0
        report(
            1,
            ok,
            f"cosine={cos:.6f} (>=0.999), rayleigh eigenvalue rel err "
            f"{abs(lam - top_val) / top_val:.2e} (<=1e-3), {elapsed:.2f}s (<1s)",
        )


class TestCriterion2Convergence:
    def test_criterion_2_convergence_contract(self):
        start = time.time()
        s = load_scenario(CONFIGS / "table2_ideal.yaml")
        trace = run_resonance(s)
        p = trace.bs_received_power
        rel = abs(p[-1] - p[-2]) / p[-2]
        elapsed = time.time() - start
        ok = trace.converged and trace.iterations < 500 and rel < 1e-5 and elapsed < 60
        report(
            2,
            ok,
            f"converged={trace.converged} in {trace.iterations} iters (<500), "
            f"final rel diff {rel:.2e} (<1e-5), {elapsed:.1f}s (<60s)",
        )


class TestCriterion3MultiTargetDoa:
    @pytest.mark.slow
    def test_criterion_3_multi_target_doa(self):
        s = load_scenario(CONFIGS / "table2.yaml")
        channels = build_channels(s)
        truths = [(math.degrees(t), math.degrees(p)) for t, p in D.true_directions(s)]
        resolved = 0
        worst = 0.0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            trace = run_resonance(s, channels=channels, rng=rng)
            snaps = D.generate_snapshots(trace, s, rng=rng)
            try:
                result = D.estimate_doa(snaps, s)
            except Exception:
                continue
            pairs = match_estimates(truths, result.estimates)
            errs = [
                max(
                    abs(truths[i][0] - result.estimates[j][0]),
                    abs(truths[i][1] - result.estimates[j][1]),
                )
                for i, j in pairs
            ]
            if len(errs) == 3 and max(errs) < 1.0:
                resolved += 1
                worst = max(worst, max(errs))
        ok = resolved >= 9
        report(
            3,
            ok,
            f"all three MTs resolved within 1 deg in {resolved}/10 seeds (>=9), "
            f"worst resolved error {worst:.3f} deg",
        )


class TestCriterion4SnrCrossover:
    @pytest.mark.slow
    def test_criterion_4_snr_crossover(self):
        s0 = load_scenario(CONFIGS / "table2_single_mt40.yaml")
        trials = 20
        rows = []
        for deg in range(0, 71, 10):
            s = with_elevation(s0, deg)
            channels = build_channels(s)
            mrls = []
            for t in range(trials):
                rng = np.random.default_rng(4000 + 100 * deg + t)
                trace = run_resonance(s, channels=channels, rng=rng)
                mrls.append(snr(trace.steady_source_powers(s.doa.source_power_iters), s.doa.noise_power_w))
            bfls_state = D.bfls_baseline(s, channels=channels)
            bfls = snr(bfls_state.per_mt_bs_received_power, s.doa.noise_power_w)
            rows.append((deg, float(np.mean(mrls)), bfls))
        low_ok = all(m > b for deg, m, b in rows if deg <= 50)
        high_ok = all(m < b for deg, m, b in rows if deg >= 60)
        detail = "; ".join(f"{d}deg {m:.2f}/{b:.2f}" for d, m, b in rows)
        report(4, low_ok and high_ok, f"mean MRLS/BFLS SNR dB over {trials} trials: {detail}")


class TestCriterion5EfficiencyTrends:
    @pytest.mark.slow
    def test_criterion_5_efficiency_trends(self):
        s0 = load_scenario(CONFIGS / "table2_single.yaml")
        trials = 100
        degs = list(range(0, 51, 10))

        def mean_eta(range_m, mt_size):
            out = []
            for deg in degs:
                s = with_elevation(s0, deg, range_m=range_m, mt_size=mt_size)
                channels = build_channels(s)
                etas = []
                for t in range(trials):
                    rng = np.random.default_rng(5000 + 100 * deg + t)
                    trace = run_resonance(s, channels=channels, rng=rng)
                    etas.append(transmission_efficiency(trace))
                out.append(float(np.mean(etas)))
            return out

        eta_3m_30 = mean_eta(3.0, 30)
        eta_2m_30 = mean_eta(2.0, 30)
        eta_3m_40 = mean_eta(3.0, 40)
        mono = all(a >= b for a, b in zip(eta_3m_30, eta_3m_30[1:]))
        closer = all(x > y for x, y in zip(eta_2m_30, eta_3m_30))
        bigger = all(x > y for x, y in zip(eta_3m_40, eta_3m_30))
        report(
            5,
            mono and closer and bigger,
            f"eta(3m,30x30)={[round(v, 4) for v in eta_3m_30]} non-increasing={mono}; "
            f"2m>3m pointwise={closer}; 40x40>30x30 pointwise={bigger} "
            f"({trials} trials per point)",
        )


class TestCriterion6RmseTrends:
    @pytest.mark.slow
    def test_criterion_6a_rmse_vs_snr(self):
        s0 = load_scenario(CONFIGS / "table2_single.yaml")
        spec = SweepSpec(
            variable="noise_power",
            values=(0.048, 0.027, 0.0152, 0.0085, 0.0048),
            trials=200,
            systems=("mrls",),
        )
        result = run_sweep(spec, s0, master_seed=606)
        snrs = [a["mean_snr_db"] for a in result.aggregates]
        rmses = [a["rmse_deg"] for a in result.aggregates]
        slope = float(np.polyfit(snrs, rmses, 1)[0])
        ok = slope < 0
        report(
            6,
            ok,
            f"(a) RMSE vs SNR slope {slope:.4e} deg/dB (<0) over 10 dB span, 200 trials: "
            + "; ".join(f"{s:.1f}dB->{r:.3f}deg" for s, r in zip(snrs, rmses)),
        )

    @pytest.mark.slow
    def test_criterion_6b_rmse_vs_distance(self):
        s0 = load_scenario(CONFIGS / "table2_single_highnoise.yaml")
        spec = SweepSpec(
            variable="distance",
            values=(2.0, 3.0, 4.0, 5.0, 6.0),
            trials=100,
            systems=("mrls", "bfls"),
        )
        result = run_sweep(spec, s0, master_seed=607)
        table = {(a["system"], a["value"]): a["rmse_deg"] for a in result.aggregates}
        near_ok = all(table[("mrls", v)] < table[("bfls", v)] for v in ("2", "3"))
        far_ok = table[("mrls", "6")] > table[("bfls", "6")]
        detail = "; ".join(
            f"{v}m {table[('mrls', v)]:.3f}/{table[('bfls', v)]:.3f}"
            for v in ("2", "3", "4", "5", "6")
        )
        report(6, near_ok and far_ok, f"(b) MRLS/BFLS RMSE deg, 100 trials: {detail}")


class TestCriterion7UnitCorrectness:
    def test_criterion_7_unit_correctness(self):
        start = time.time()

        # Exact-covariance MUSIC at (30, 15): noise-subspace orthogonality
        # below 1e-10 and a grid-exact estimate.
        bs = build_upa(12, 12, 0.005, center=(0, 0, 0), boresight=(0, 0, 1), anchor="centroid")
        constants = RfConstants.from_frequency(30e9, 4.97)
        alpha = D.steering_vector(math.radians(30), math.radians(15), bs, constants)
        r = np.outer(alpha, alpha.conj()) + 1e-6 * np.eye(alpha.size)
        _, vecs = np.linalg.eigh(r)
        qn = vecs[:, :-1]
        ortho = float(np.linalg.norm(qn.conj().T @ alpha) ** 2)
        step = 0.25
        result = D.music_spectrum(r, 1, GridSpec((0, 60), (0, 90), step), bs, constants)
        est = result.estimates[0]
        music_ok = ortho < 1e-10 and abs(est[0] - 30) <= step and abs(est[1] - 15) <= step

        # Phase-noise sampler variance at n = 1e6.
        samples = sample_phase_noise(
            PhaseNoiseModel(variance=0.3162), 10**6, np.random.default_rng(7)
        )
        var = float(samples.var())
        noise_ok = 0.30 <= var <= 0.33

        # Friis and reciprocity property suite on 100 random geometries.
        rng = np.random.default_rng(99)
        friis_ok = True
        for _ in range(100):
            bs_g = build_upa(
                int(rng.integers(1, 4)), int(rng.integers(1, 4)), 0.005,
                center=(0, 0, 0), boresight=(0, 0, 1),
            )
            placement = MtPlacement(
                range_m=float(rng.uniform(0.5, 4.0)),
                elevation=float(rng.uniform(0.0, 1.2)),
                azimuth=float(rng.uniform(-math.pi, math.pi)),
                rows=int(rng.integers(1, 4)),
                cols=int(rng.integers(1, 4)),
                reflection_ratio=0.004,
            )
            mt_g = place_mt(placement, 0.005)
            h = transfer_matrix(bs_g, mt_g, constants).entries
            h_rev = transfer_matrix(mt_g, bs_g, constants).entries
            diff = mt_g.element_positions[:, None, :] - bs_g.element_positions[None, :, :]
            dist = np.linalg.norm(diff, axis=2)
            unit = diff / dist[..., None]
            g_bs = constants.max_gain * np.clip(unit @ bs_g.boresight, 0, None)
            g_mt = constants.max_gain * np.clip(-(unit @ mt_g.boresight), 0, None)
            expected = g_bs * g_mt * constants.wavelength**2 / (16 * np.pi**2 * dist**2)
            if not np.allclose(np.abs(h) ** 2, expected, rtol=1e-10):
                friis_ok = False
                break
            if not np.array_equal(h_rev, h.T):
                friis_ok = False
                break

        elapsed = time.time() - start
        ok = music_ok and noise_ok and friis_ok and elapsed < 30
        report(
            7,
            ok,
            f"subspace orthogonality {ortho:.2e} (<1e-10), estimate "
            f"({est[0]:.2f},{est[1]:.2f}) within one {step} deg step of (30,15), "
            f"sampler variance {var:.4f} in [0.30,0.33], 100-geometry "
            f"Friis/reciprocity={friis_ok}, {elapsed:.1f}s (<30s)",
        )


class TestCriterion8Determinism:
    def test_criterion_8_cli_determinism(self, tmp_path):
        config = tmp_path / "scenario.yaml"
        config.write_text(
            yaml.safe_dump(
                {
                    "bs": {"rows": 8, "cols": 8},
                    "mts": [
                        {
                            "range_m": 1.0,
                            "elevation_deg": 20.0,
                            "azimuth_deg": 30.0,
                            "rows": 4,
                            "cols": 4,
                            "reflection_ratio": 0.004,
                        }
                    ],
                    "phase_noise": {"variance_rad2": 0.3162},
                    "resonance": {"max_iterations": 25},
                    "doa": {"noise_power_w": 1.0e-8, "snapshots": 64, "grid": {"step_deg": 0.5}},
                    "seed": 21,
                }
            )
        )
        sweep_spec = tmp_path / "sweep.yaml"
        sweep_spec.write_text(
            yaml.safe_dump(
                {"variable": "elevation", "values": [10, 20], "trials": 2, "systems": "both"}
            )
        )
        runner = CliRunner()
        jobs = [
            ("resonate", []),
            ("fieldmap", ["--extent", "-0.5", "0.5", "0.3", "1.2", "--resolution", "11", "11"]),
            ("doa", []),
            ("sweep", ["--sweep", str(sweep_spec)]),
        ]
        mismatches = []
        for command, extra in jobs:
            outputs = []
            for run in range(2):
                out = tmp_path / f"{command}{run}"
                r = runner.invoke(
                    cli_main,
                    [command, "--config", str(config), "--out", str(out), "--seed", "21"] + extra,
                )
                assert r.exit_code == 0, f"{command}: {r.output}"
                outputs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
            if outputs[0] != outputs[1]:
                mismatches.append(command)
        ok = not mismatches
        report(
            8,
            ok,
            "byte-identical outputs for resonate/fieldmap/doa/sweep"
            + (f"; mismatches: {mismatches}" if mismatches else ""),
        )
