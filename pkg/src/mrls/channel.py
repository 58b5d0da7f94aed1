"""Free-space links between arrays and the phase-noise model.

Every BS-element-to-MT-element link is a Friis amplitude transfer with
per-link antenna gains and the propagation phase exp(j*k*l). Excitations
are carried as complex vectors whose squared magnitudes are powers in
watts, so received power per element is |(H a)_n|^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, InvalidArgumentError
from .geometry import ArrayGeometry

SPEED_OF_LIGHT = 299_792_458.0
FREE_SPACE_IMPEDANCE = 376.730313668  # ohms

# Friis is invalid below a few wavelengths; fail loudly instead.
FAR_FIELD_WAVELENGTHS = 10.0


@dataclass(frozen=True)
class RfConstants:
    """Carrier constants shared by every link in a scenario."""

    frequency: float  # Hz
    wavelength: float  # m
    wavenumber: float  # rad/m
    max_gain: float  # linear boresight element gain
    wave_impedance: float = FREE_SPACE_IMPEDANCE

    def __post_init__(self):
        lam = SPEED_OF_LIGHT / self.frequency
        if abs(self.wavelength - lam) > 1e-9 * lam:
            raise InvalidArgumentError(
                f"wavelength {self.wavelength} inconsistent with frequency "
                f"{self.frequency} (expected {lam})"
            )
        k = 2 * np.pi / self.wavelength
        if abs(self.wavenumber - k) > 1e-12 * k:
            raise InvalidArgumentError(
                f"wavenumber {self.wavenumber} inconsistent with wavelength "
                f"{self.wavelength}"
            )

    @classmethod
    def from_frequency(cls, frequency: float, max_gain_dbi: float) -> "RfConstants":
        lam = SPEED_OF_LIGHT / frequency
        return cls(
            frequency=frequency,
            wavelength=lam,
            wavenumber=2 * np.pi / lam,
            max_gain=10 ** (max_gain_dbi / 10),
        )


def element_gain(angle_from_boresight, constants: RfConstants):
    """Linear element gain G_max * cos(angle); zero behind the array plane."""
    angle = np.asarray(angle_from_boresight, dtype=float)
    g = np.where(
        np.abs(angle) < np.pi / 2,
        constants.max_gain * np.cos(angle),
        0.0,
    )
    return float(g) if g.ndim == 0 else g


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex amplitude transfer from BS elements (cols) to MT elements (rows)."""

    entries: np.ndarray  # (N_mt, M_bs) complex

    def __post_init__(self):
        e = np.ascontiguousarray(np.asarray(self.entries, dtype=complex))
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def forward(self, bs_excitation: np.ndarray) -> np.ndarray:
        """Received MT excitation for a BS excitation (b = H a)."""
        return self.entries @ bs_excitation

    def reverse(self, mt_excitation: np.ndarray) -> np.ndarray:
        """Received BS excitation for an MT excitation (reciprocity: H^T)."""
        return self.entries.T @ mt_excitation


def _link_gains(
    geom: ArrayGeometry, unit_to_other: np.ndarray, constants: RfConstants
) -> np.ndarray:
    """Per-link gain of ``geom``'s elements toward the given unit directions."""
    cosang = unit_to_other @ geom.boresight
    return constants.max_gain * np.clip(cosang, 0.0, None)


def transfer_matrix(
    bs: ArrayGeometry, mt: ArrayGeometry, constants: RfConstants
) -> ChannelMatrix:
    """Coherent Friis transfer matrix between two arrays.

    h_nm = sqrt(G_bs * G_mt) * lambda / (4 pi l_nm) * exp(j k l_nm), with each
    element's gain evaluated at the angle between its own boresight and the
    link direction.
    """
    diff = mt.element_positions[:, None, :] - bs.element_positions[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    if np.min(dist) < FAR_FIELD_WAVELENGTHS * constants.wavelength:
        raise GeometryError(
            f"closest element pair at {np.min(dist):.4g} m violates the "
            f"{FAR_FIELD_WAVELENGTHS:g}-wavelength far-field guard"
        )
    unit = diff / dist[..., None]
    g_bs = _link_gains(bs, unit, constants)
    g_mt = constants.max_gain * np.clip(-(unit @ mt.boresight), 0.0, None)
    amp = np.sqrt(g_bs * g_mt) * constants.wavelength / (4 * np.pi * dist)
    return ChannelMatrix(entries=amp * np.exp(1j * constants.wavenumber * dist))


@dataclass(frozen=True)
class PhaseNoiseModel:
    """Zero-mean Gaussian per-element phase jitter, in radians."""

    variance: float  # rad^2
    psd_segments: tuple | None = None  # ((f_lo, f_hi, dbc_per_hz), ...)

    def __post_init__(self):
        if self.variance < 0:
            raise InvalidArgumentError(f"variance must be >= 0, got {self.variance}")
        if self.psd_segments is not None:
            object.__setattr__(
                self, "psd_segments", tuple(tuple(s) for s in self.psd_segments)
            )
            v = psd_to_variance(self.psd_segments)
            if abs(v - self.variance) > 1e-9 * max(v, 1e-300):
                raise InvalidArgumentError(
                    f"variance {self.variance} does not match PSD integral {v}"
                )

    @classmethod
    def from_psd(cls, segments) -> "PhaseNoiseModel":
        return cls(variance=psd_to_variance(segments), psd_segments=tuple(segments))


def psd_to_variance(segments) -> float:
    """Phase variance from a piecewise-constant phase-noise PSD.

    ``segments`` is a sequence of (f_lo, f_hi, level) with the level in
    dBc/Hz; the variance is 2 * integral of the linear-scale PSD, which is
    exact for piecewise-constant input.
    """
    segments = list(segments)
    if not segments:
        raise InvalidArgumentError("PSD must have at least one segment")
    total = 0.0
    for f_lo, f_hi, dbc in segments:
        if not 0 < f_lo < f_hi:
            raise InvalidArgumentError(
                f"PSD segment needs 0 < f_lo < f_hi, got [{f_lo}, {f_hi}]"
            )
        total += 10 ** (dbc / 10) * (f_hi - f_lo)
    return 2.0 * total


def sample_phase_noise(
    model: PhaseNoiseModel, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` i.i.d. N(0, variance) phase samples in radians."""
    if count < 0:
        raise InvalidArgumentError(f"count must be >= 0, got {count}")
    return rng.normal(0.0, np.sqrt(model.variance), count)
