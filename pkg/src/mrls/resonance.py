"""The iterative BS <-> MT phase-conjugation power cycle.

Each iteration: the BS transmits, every MT receives, conjugates, and
reflects a fraction of the power back, the returns superpose coherently
at the BS, and the BS conjugates and re-amplifies. With zero phase noise
and power renormalization this is power iteration on sum_i(beta_i
H_i^H H_i), so the loop converges to the dominant eigenmode of the
round-trip operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix, PhaseNoiseModel, sample_phase_noise, transfer_matrix
from .errors import InvalidArgumentError, UndefinedEfficiencyError
from .scenario import Scenario

COLLAPSE_FLOOR = 1.0e-300  # received power below this is treated as dead

RESONANCE_COLLAPSE = "resonance-collapse"


@dataclass(frozen=True)
class PaModel:
    """BS power amplifier: linear power gain bounded by an output ceiling."""

    max_gain: float  # linear power gain
    max_output_power: float  # W
    mode: str = "gain"  # "gain" or "regulated"

    def __post_init__(self):
        if self.max_gain < 1:
            raise InvalidArgumentError(f"max_gain must be >= 1, got {self.max_gain}")
        if self.max_output_power <= 0:
            raise InvalidArgumentError(
                f"max_output_power must be positive, got {self.max_output_power}"
            )
        if self.mode not in ("gain", "regulated"):
            raise InvalidArgumentError(f"unknown PA mode {self.mode!r}")

    @classmethod
    def from_db(cls, max_gain_db: float, max_output_power: float, mode: str = "gain"):
        return cls(10 ** (max_gain_db / 10), max_output_power, mode)


@dataclass
class ResonanceTrace:
    """Per-iteration powers plus the final steady-state excitations."""

    iterations: int
    converged: bool
    diagnostic: str | None
    bs_received_power: np.ndarray  # (K,)
    bs_transmit_power: np.ndarray  # (K,)
    per_mt_received_power: np.ndarray  # (K, I): power arriving at each MT
    per_mt_bs_received_power: np.ndarray  # (K, I): per-MT share arriving back at BS
    final_bs_excitation: np.ndarray  # (M,) complex
    final_mt_excitations: list  # I vectors of MT transmit excitations

    def steady_source_powers(self, tail: int = 10) -> np.ndarray:
        """Per-MT BS-received power averaged over the trailing iterations."""
        tail = max(1, min(tail, self.iterations))
        return self.per_mt_bs_received_power[-tail:].mean(axis=0)

    def to_csv(self, path, header_lines=()) -> None:
        n_mt = self.per_mt_received_power.shape[1]
        cols = ["iter", "p_bs_rx_w", "p_bs_tx_w"]
        cols += [f"p_mt{i + 1}_rx_w" for i in range(n_mt)]
        cols += [f"p_bs_rx_mt{i + 1}_w" for i in range(n_mt)]
        with open(path, "w") as f:
            for line in header_lines:
                f.write(f"# {line}\n")
            f.write(",".join(cols) + "\n")
            for it in range(self.iterations):
                row = [str(it), f"{self.bs_received_power[it]:.12e}",
                       f"{self.bs_transmit_power[it]:.12e}"]
                row += [f"{v:.12e}" for v in self.per_mt_received_power[it]]
                row += [f"{v:.12e}" for v in self.per_mt_bs_received_power[it]]
                f.write(",".join(row) + "\n")


def mt_reflect(
    received: np.ndarray,
    reflection_ratio: float,
    noise: PhaseNoiseModel,
    rng: np.random.Generator,
) -> np.ndarray:
    """Phase-conjugate reflection of a fraction of the received power."""
    if not 0 <= reflection_ratio <= 1:
        raise InvalidArgumentError(
            f"reflection_ratio must be in [0, 1], got {reflection_ratio}"
        )
    phases = sample_phase_noise(noise, received.size, rng)
    return np.sqrt(reflection_ratio) * np.conj(received) * np.exp(1j * phases)


def bs_process(
    received: np.ndarray,
    pa: PaModel,
    noise: PhaseNoiseModel,
    rng: np.random.Generator,
) -> np.ndarray:
    """Conjugate, amplify subject to the PA model, and add phase noise.

    In "gain" mode the output power is min(max_gain * P_in, ceiling); in
    "regulated" mode the drive level is adjusted so the PA always emits at
    its ceiling. Zero input yields zero output.
    """
    p_in = float(np.vdot(received, received).real)
    if p_in == 0.0:
        return np.zeros_like(received)
    out = np.conj(received)
    if pa.mode == "gain":
        power_gain = min(pa.max_gain, pa.max_output_power / p_in)
    else:
        power_gain = pa.max_output_power / p_in
    out = out * np.sqrt(power_gain)
    phases = sample_phase_noise(noise, out.size, rng)
    return out * np.exp(1j * phases)


def build_channels(scenario: Scenario) -> list[ChannelMatrix]:
    """One BS <-> MT transfer matrix per target."""
    constants = scenario.constants()
    bs = scenario.bs_geometry()
    return [transfer_matrix(bs, mt, constants) for mt in scenario.mt_geometries()]


def run_resonance(
    scenario: Scenario,
    channels: list[ChannelMatrix] | None = None,
    rng: np.random.Generator | None = None,
) -> ResonanceTrace:
    """Iterate the power cycle until the BS received power is steady.

    Convergence: the BS received power changes by less than
    ``convergence_rel`` relative to the previous iteration. Hitting
    ``max_iterations`` first is reported, not raised; a received power
    that underflows to zero ends the run with a "resonance-collapse"
    diagnostic.
    """
    if not scenario.mts:
        raise InvalidArgumentError("scenario must place at least one MT")
    if channels is None:
        channels = build_channels(scenario)
    if rng is None:
        rng = np.random.default_rng(scenario.seed)

    noise = scenario.noise_model()
    pa = PaModel.from_db(
        scenario.pa.max_gain_db, scenario.pa.max_output_w, scenario.pa.mode
    )
    p0 = scenario.initial_power_w
    m = channels[0].shape[1]
    betas = [p.reflection_ratio for p in scenario.mts]
    conv_rel = scenario.resonance.convergence_rel
    max_iter = scenario.resonance.max_iterations

    # Random omnidirectional start: uniform amplitude, uniform phases.
    a = np.sqrt(p0 / m) * np.exp(1j * rng.uniform(0.0, 2 * np.pi, m))

    bs_rx, bs_tx = [], []
    mt_rx, bs_rx_per_mt = [], []
    reflections = []
    converged = False
    diagnostic = None

    for _ in range(max_iter):
        bs_tx.append(float(np.vdot(a, a).real))
        returns = []
        reflections = []
        mt_rx_row, bs_rx_row = [], []
        for h, beta in zip(channels, betas):
            b = h.forward(a)
            mt_rx_row.append(float(np.vdot(b, b).real))
            refl = mt_reflect(b, beta, noise, rng)
            reflections.append(refl)
            r_i = h.reverse(refl)
            bs_rx_row.append(float(np.vdot(r_i, r_i).real))
            returns.append(r_i)
        r = np.sum(returns, axis=0)
        p_r = float(np.vdot(r, r).real)
        bs_rx.append(p_r)
        mt_rx.append(mt_rx_row)
        bs_rx_per_mt.append(bs_rx_row)

        if p_r < COLLAPSE_FLOOR:
            diagnostic = RESONANCE_COLLAPSE
            a = np.zeros_like(a)
            break

        if scenario.resonance.oracle_mode:
            out = np.conj(r) * np.exp(1j * sample_phase_noise(noise, r.size, rng))
            a = np.sqrt(p0) * out / np.linalg.norm(out)
        else:
            a = bs_process(r, pa, noise, rng)

        if len(bs_rx) >= 2 and abs(bs_rx[-1] - bs_rx[-2]) < conv_rel * bs_rx[-2]:
            converged = True
            break

    return ResonanceTrace(
        iterations=len(bs_rx),
        converged=converged,
        diagnostic=diagnostic,
        bs_received_power=np.array(bs_rx),
        bs_transmit_power=np.array(bs_tx),
        per_mt_received_power=np.array(mt_rx),
        per_mt_bs_received_power=np.array(bs_rx_per_mt),
        final_bs_excitation=a,
        final_mt_excitations=reflections,
    )


def transmission_efficiency(trace: ResonanceTrace) -> float:
    """Total MT received power over BS transmit power at the final iteration."""
    if trace.iterations == 0:
        raise UndefinedEfficiencyError("empty trace")
    if trace.diagnostic == RESONANCE_COLLAPSE:
        raise UndefinedEfficiencyError("efficiency undefined after resonance collapse")
    p_tx = trace.bs_transmit_power[-1]
    if p_tx <= 0:
        raise UndefinedEfficiencyError("zero transmit power at final iteration")
    return float(trace.per_mt_received_power[-1].sum() / p_tx)
