"""Direction-of-arrival estimation at the BS via 2-D MUSIC.

Pipeline: take the per-MT steady-state powers arriving back at the BS
(from a resonance trace or the single-pass BFLS baseline), synthesize
array snapshots with incoherent pulse-to-pulse source phases plus
circular complex Gaussian noise, form the sample covariance, and search
the MUSIC spectrum 1 / (alpha^H Q_N Q_N^H alpha) over an
(elevation, azimuth) grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelMatrix, RfConstants
from .errors import InvalidArgumentError, UnresolvedSourcesError
from .geometry import ArrayGeometry, direction_unit
from .resonance import ResonanceTrace, build_channels
from .scenario import GridSpec, Scenario

# Spectrum values are clamped at 1/DENOM_FLOOR when the steering vector is
# numerically inside the signal subspace (denominator underflow).
DENOM_FLOOR = 1.0e-12


@dataclass(frozen=True)
class SnapshotSet:
    """BS array snapshots: M elements by T time samples."""

    snapshots: np.ndarray  # (M, T) complex
    noise_power: float  # W, total across elements per snapshot
    source_count: int

    def __post_init__(self):
        m, t = self.snapshots.shape
        if t < self.source_count or m <= self.source_count:
            raise InvalidArgumentError(
                f"need T >= sources and M > sources, got M={m}, T={t}, "
                f"sources={self.source_count}"
            )


@dataclass(frozen=True)
class MusicResult:
    """MUSIC spectrum over the search grid plus the extracted estimates."""

    theta_deg: np.ndarray  # (n_theta,)
    phi_deg: np.ndarray  # (n_phi,)
    spectrum: np.ndarray  # (n_theta, n_phi)
    grid: GridSpec
    estimates: list  # [(theta_deg, phi_deg), ...] sorted by descending peak
    peak_values: list

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w") as f:
            for line in header_lines:
                f.write(f"# {line}\n")
            f.write("theta_deg,phi_deg,p_music\n")
            for i, th in enumerate(self.theta_deg):
                for j, ph in enumerate(self.phi_deg):
                    f.write(f"{th:.6f},{ph:.6f},{self.spectrum[i, j]:.12e}\n")


@dataclass(frozen=True)
class BflsState:
    """Single-pass active baseline: each MT beamforms once toward the BS."""

    per_mt_bs_received_power: np.ndarray  # (I,)
    per_mt_excitations: list = field(default_factory=list)


def steering_vector(
    theta: float, phi: float, bs: ArrayGeometry, constants: RfConstants
) -> np.ndarray:
    """Unit-modulus array response for a plane wave from (theta, phi).

    Phase per element is k times the projection of the arrival direction
    onto the array plane, evaluated at the element position, so boresight
    arrivals give the all-ones vector.
    """
    d = direction_unit(theta, phi)
    d_plane = d - (d @ bs.boresight) * bs.boresight
    return np.exp(1j * constants.wavenumber * (bs.element_positions @ d_plane))


def _steering_block(
    thetas_rad: np.ndarray, phis_rad: np.ndarray, bs: ArrayGeometry, constants: RfConstants
) -> np.ndarray:
    """Steering matrix (M, n_theta * n_phi) for a grid, theta-major order."""
    tt, pp = np.meshgrid(thetas_rad, phis_rad, indexing="ij")
    st = np.sin(tt.ravel())
    d = np.stack([st * np.cos(pp.ravel()), st * np.sin(pp.ravel()), np.cos(tt.ravel())], axis=1)
    d_plane = d - np.outer(d @ bs.boresight, bs.boresight)
    return np.exp(1j * constants.wavenumber * (bs.element_positions @ d_plane.T))


def true_directions(scenario: Scenario) -> list:
    """(theta, phi) in radians for every MT placement."""
    return [(p.elevation, p.azimuth) for p in scenario.mts]


def source_powers(state, scenario: Scenario) -> np.ndarray:
    """Per-MT signal power arriving at the BS, from a trace or BFLS state."""
    if isinstance(state, ResonanceTrace):
        return state.steady_source_powers(scenario.doa.source_power_iters)
    if isinstance(state, BflsState):
        return np.asarray(state.per_mt_bs_received_power, dtype=float)
    raise InvalidArgumentError(f"unsupported source state {type(state).__name__}")


def generate_snapshots(
    state,
    scenario: Scenario,
    snapshots: int | None = None,
    noise_power: float | None = None,
    rng: np.random.Generator | None = None,
) -> SnapshotSet:
    """Synthesize BS snapshots from the steady-state per-MT powers.

    Snapshot t is sum_i alpha(theta_i, phi_i) s_i(t) + n(t), where s_i(t)
    has power P_i / M per element (so the array-total source power is P_i)
    and an i.i.d. uniform phase per pulse, and n(t) is circular complex
    Gaussian with total expected power ``noise_power`` per snapshot.
    """
    t = scenario.doa.snapshots if snapshots is None else snapshots
    n_pow = scenario.doa.noise_power_w if noise_power is None else noise_power
    if t < 1:
        raise InvalidArgumentError(f"snapshot count must be >= 1, got {t}")
    if n_pow < 0:
        raise InvalidArgumentError(f"noise power must be >= 0, got {n_pow}")
    if rng is None:
        rng = np.random.default_rng(scenario.seed)

    bs = scenario.bs_geometry()
    constants = scenario.constants()
    powers = source_powers(state, scenario)
    m = bs.num_elements

    a = np.stack(
        [steering_vector(th, ph, bs, constants) for th, ph in true_directions(scenario)],
        axis=1,
    )  # (M, I)
    phases = rng.uniform(0.0, 2 * np.pi, (len(powers), t))
    s = np.sqrt(powers / m)[:, None] * np.exp(1j * phases)  # (I, T)
    x = a @ s
    if n_pow > 0:
        sigma = np.sqrt(n_pow / m / 2.0)
        x = x + sigma * (rng.standard_normal((m, t)) + 1j * rng.standard_normal((m, t)))
    return SnapshotSet(snapshots=x, noise_power=n_pow, source_count=len(powers))


def sample_covariance(snapshot_set: SnapshotSet) -> np.ndarray:
    """R = (1/T) sum_t x_t x_t^H, Hermitian PSD by construction."""
    x = snapshot_set.snapshots
    r = (x @ x.conj().T) / x.shape[1]
    return (r + r.conj().T) / 2.0


def _signal_subspace_from_covariance(r: np.ndarray, count: int) -> np.ndarray:
    """Orthonormal basis of the ``count`` largest eigenvectors of R."""
    if r.shape[0] != r.shape[1]:
        raise InvalidArgumentError("covariance must be square")
    if count >= r.shape[0]:
        raise InvalidArgumentError(
            f"source count {count} must be below the element count {r.shape[0]}"
        )
    if not np.allclose(r, r.conj().T, atol=1e-9 * max(1.0, float(np.abs(r).max()))):
        raise InvalidArgumentError("covariance must be Hermitian")
    _, vecs = np.linalg.eigh(r)
    return vecs[:, -count:]


def _signal_subspace_from_snapshots(snapshot_set: SnapshotSet) -> np.ndarray:
    """Left singular vectors of X spanning the signal subspace.

    Identical to eigendecomposing the sample covariance, but an economy
    SVD of the M x T snapshot matrix is far cheaper when T << M.
    """
    u, _, _ = np.linalg.svd(snapshot_set.snapshots, full_matrices=False)
    return u[:, : snapshot_set.source_count]


# Steering matrices for repeated (geometry, grid) pairs are cached so Monte
# Carlo sweeps do not rebuild the same large complex exponential each trial.
_STEERING_CACHE: dict = {}
_STEERING_CACHE_MAX = 2
_STEERING_CACHE_ENTRIES = 1.2e7  # max cached matrix size, elements


def _cached_steering(
    thetas: np.ndarray, phis: np.ndarray, bs: ArrayGeometry, constants: RfConstants
) -> np.ndarray | None:
    if bs.num_elements * thetas.size * phis.size > _STEERING_CACHE_ENTRIES:
        return None
    key = (
        constants.wavenumber,
        bs.element_positions.tobytes(),
        bs.boresight.tobytes(),
        thetas.tobytes(),
        phis.tobytes(),
    )
    hit = _STEERING_CACHE.get(key)
    if hit is None:
        hit = _steering_block(thetas, phis, bs, constants)
        if len(_STEERING_CACHE) >= _STEERING_CACHE_MAX:
            _STEERING_CACHE.pop(next(iter(_STEERING_CACHE)))
        _STEERING_CACHE[key] = hit
    return hit


def _spectrum_grid(
    q_signal: np.ndarray,
    thetas_deg: np.ndarray,
    phis_deg: np.ndarray,
    bs: ArrayGeometry,
    constants: RfConstants,
) -> np.ndarray:
    """Evaluate 1 / (alpha^H Q_N Q_N^H alpha) on the grid.

    Uses alpha^H Q_N Q_N^H alpha = M - ||Q_S^H alpha||^2 (the subspaces are
    orthogonal complements), so only the small signal basis is needed.
    Rows are chunked to bound memory on large uncached grids.
    """
    m = bs.num_elements
    thetas = np.radians(thetas_deg)
    phis = np.radians(phis_deg)

    a = _cached_steering(thetas, phis, bs, constants)
    if a is not None:
        proj = np.abs(q_signal.conj().T @ a) ** 2
        denom = np.maximum(m - proj.sum(axis=0), DENOM_FLOOR)
        return (1.0 / denom).reshape(thetas.size, phis.size)

    out = np.empty((thetas.size, phis.size))
    chunk = max(1, int(2e6 // max(1, m * phis.size)) or 1)
    for lo in range(0, thetas.size, chunk):
        hi = min(lo + chunk, thetas.size)
        block = _steering_block(thetas[lo:hi], phis, bs, constants)
        proj = np.abs(q_signal.conj().T @ block) ** 2
        denom = np.maximum(m - proj.sum(axis=0), DENOM_FLOOR)
        out[lo:hi] = (1.0 / denom).reshape(hi - lo, phis.size)
    return out


def _grid_axes(grid: GridSpec):
    nt = int(round((grid.theta_range[1] - grid.theta_range[0]) / grid.step_deg)) + 1
    np_ = int(round((grid.phi_range[1] - grid.phi_range[0]) / grid.step_deg)) + 1
    thetas = grid.theta_range[0] + grid.step_deg * np.arange(nt)
    phis = grid.phi_range[0] + grid.step_deg * np.arange(np_)
    return thetas, phis


def _refine_axis(values: np.ndarray, idx: int) -> float:
    """Sub-grid offset of a peak by quadratic interpolation, in grid steps."""
    if idx <= 0 or idx >= values.size - 1:
        return 0.0
    y0, y1, y2 = values[idx - 1], values[idx], values[idx + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return 0.0
    off = 0.5 * (y0 - y2) / denom
    return float(np.clip(off, -0.5, 0.5))


def find_peaks(
    spectrum: np.ndarray,
    thetas_deg: np.ndarray,
    phis_deg: np.ndarray,
    count: int,
    min_separation_deg: float = 2.0,
    refine: bool = True,
) -> tuple[list, list]:
    """The ``count`` largest strict local maxima, pairwise separated.

    Separation uses the Chebyshev metric on (theta, phi) degrees. Ties
    break toward lower theta, then lower phi. Each peak is refined by one
    quadratic interpolation step per axis. Raises when fewer than
    ``count`` maxima exist.
    """
    if count < 1:
        raise InvalidArgumentError(f"peak count must be >= 1, got {count}")
    s = spectrum
    nt, np_ = s.shape
    if nt == 0 or np_ == 0:
        raise InvalidArgumentError("spectrum grid is empty")

    # Strict local maxima over the (up to) 8-neighborhood; boundary cells
    # compare only against neighbors that exist.
    is_max = np.ones_like(s, dtype=bool)
    padded = np.full((nt + 2, np_ + 2), -np.inf)
    padded[1:-1, 1:-1] = s
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_max &= s > padded[1 + di : 1 + di + nt, 1 + dj : 1 + dj + np_]
    ti, pj = np.nonzero(is_max)
    if ti.size == 0:
        raise UnresolvedSourcesError(count, [])

    order = sorted(
        range(ti.size),
        key=lambda i: (-s[ti[i], pj[i]], thetas_deg[ti[i]], phis_deg[pj[i]]),
    )
    picked = []
    for i in order:
        th, ph = thetas_deg[ti[i]], phis_deg[pj[i]]
        if all(
            max(abs(th - th2), abs(ph - ph2)) >= min_separation_deg
            for th2, ph2, _ in picked
        ):
            picked.append((th, ph, (ti[i], pj[i])))
            if len(picked) == count:
                break

    estimates, values = [], []
    for th, ph, (i, j) in picked:
        if refine:
            th = th + _refine_axis(s[:, j], i) * (
                thetas_deg[1] - thetas_deg[0] if nt > 1 else 0.0
            )
            ph = ph + _refine_axis(s[i, :], j) * (
                phis_deg[1] - phis_deg[0] if np_ > 1 else 0.0
            )
        estimates.append((float(th), float(ph)))
        values.append(float(s[i, j]))
    if len(estimates) < count:
        raise UnresolvedSourcesError(count, estimates)
    return estimates, values


def _music_from_subspace(
    q_signal: np.ndarray,
    source_count: int,
    grid: GridSpec,
    bs: ArrayGeometry,
    constants: RfConstants,
    coarse_to_fine: bool = False,
    min_separation_deg: float = 2.0,
) -> MusicResult:
    if coarse_to_fine:
        coarse_step = max(grid.step_deg, 1.0)
        coarse = GridSpec(grid.theta_range, grid.phi_range, coarse_step)
        thetas, phis = _grid_axes(coarse)
        spectrum = _spectrum_grid(q_signal, thetas, phis, bs, constants)
        rough, _ = find_peaks(
            spectrum, thetas, phis, source_count, min_separation_deg, refine=False
        )
        fine_step = 0.05
        estimates, values = [], []
        for th0, ph0 in rough:
            ft = np.clip(
                th0 + fine_step * np.arange(-20, 21), grid.theta_range[0], grid.theta_range[1]
            )
            fp = np.clip(
                ph0 + fine_step * np.arange(-20, 21), grid.phi_range[0], grid.phi_range[1]
            )
            ft, fp = np.unique(ft), np.unique(fp)
            local = _spectrum_grid(q_signal, ft, fp, bs, constants)
            i, j = np.unravel_index(np.argmax(local), local.shape)
            th = ft[i] + _refine_axis(local[:, j], i) * fine_step
            ph = fp[j] + _refine_axis(local[i, :], j) * fine_step
            estimates.append((float(th), float(ph)))
            values.append(float(local[i, j]))
        order = sorted(range(len(values)), key=lambda i: -values[i])
        return MusicResult(
            theta_deg=thetas,
            phi_deg=phis,
            spectrum=spectrum,
            grid=coarse,
            estimates=[estimates[i] for i in order],
            peak_values=[values[i] for i in order],
        )

    thetas, phis = _grid_axes(grid)
    spectrum = _spectrum_grid(q_signal, thetas, phis, bs, constants)
    estimates, values = find_peaks(spectrum, thetas, phis, source_count, min_separation_deg)
    return MusicResult(
        theta_deg=thetas,
        phi_deg=phis,
        spectrum=spectrum,
        grid=grid,
        estimates=estimates,
        peak_values=values,
    )


def music_spectrum(
    r: np.ndarray,
    source_count: int,
    grid: GridSpec,
    bs: ArrayGeometry,
    constants: RfConstants,
    coarse_to_fine: bool = False,
    min_separation_deg: float = 2.0,
) -> MusicResult:
    """2-D MUSIC from a covariance matrix.

    The noise subspace is the span of the M - I smallest eigenvectors; the
    spectrum is 1 / (alpha^H Q_N Q_N^H alpha) over the configured grid.
    """
    q_signal = _signal_subspace_from_covariance(r, source_count)
    return _music_from_subspace(
        q_signal, source_count, grid, bs, constants, coarse_to_fine, min_separation_deg
    )


def estimate_doa(
    snapshot_set: SnapshotSet,
    scenario: Scenario,
    min_separation_deg: float = 2.0,
) -> MusicResult:
    """MUSIC estimates straight from snapshots (SVD signal subspace)."""
    q_signal = _signal_subspace_from_snapshots(snapshot_set)
    return _music_from_subspace(
        q_signal,
        snapshot_set.source_count,
        scenario.doa.grid,
        scenario.bs_geometry(),
        scenario.constants(),
        scenario.doa.coarse_to_fine,
        min_separation_deg,
    )


def bfls_baseline(
    scenario: Scenario, channels: list[ChannelMatrix] | None = None
) -> BflsState:
    """Active single-pass baseline: each MT beamforms once toward the BS.

    Every MT transmits a plane-wave excitation steered at the BS center
    with an equal share of the configured total transmit power; the BS
    receives through the reciprocal channel. Deterministic (no iteration,
    no PA, no phase noise).
    """
    if not scenario.mts:
        raise InvalidArgumentError("scenario must place at least one MT")
    if channels is None:
        channels = build_channels(scenario)
    constants = scenario.constants()
    bs = scenario.bs_geometry()
    mt_geoms = scenario.mt_geometries()
    p_tx = scenario.bfls_power() / len(scenario.mts)

    powers = []
    excitations = []
    for h, mt in zip(channels, mt_geoms):
        to_bs = bs.center - mt.center
        to_bs = to_bs / np.linalg.norm(to_bs)
        delta = mt.element_positions - mt.center
        # The link phase to a BS element is k (l_center - <delta_n, c_hat>)
        # in the far field, so the conjugating weight carries +<delta_n, c_hat>.
        t = np.exp(1j * constants.wavenumber * (delta @ to_bs))
        t *= np.sqrt(p_tx / mt.num_elements)
        r = h.reverse(t)
        powers.append(float(np.vdot(r, r).real))
        excitations.append(t)
    return BflsState(
        per_mt_bs_received_power=np.array(powers), per_mt_excitations=excitations
    )
