"""Spatial power-density maps radiated by excited arrays.

Every excited element contributes a spherical wave weighted by its
element gain toward the field point; contributions from all elements of
all requested arrays superpose coherently, and the power density is
|E|^2 / (2 * wave impedance) in W/m^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FAR_FIELD_WAVELENGTHS, RfConstants
from .errors import DegenerateGridError, GeometryError, InvalidArgumentError
from .geometry import ArrayGeometry

_AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}

# Named planes: (u axis, v axis). The offset moves the plane along its normal.
PLANES = {"yoz": ("y", "z"), "xoz": ("x", "z"), "xoy": ("x", "y")}


@dataclass(frozen=True)
class FieldGridSpec:
    """A sampled rectangle in space: origin plus two orthonormal axes."""

    origin: np.ndarray  # (3,)
    axis_u: np.ndarray  # unit 3-vector
    axis_v: np.ndarray  # unit 3-vector
    u_range: tuple[float, float]
    v_range: tuple[float, float]
    resolution: tuple[int, int] = (201, 201)

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        for name in ("axis_u", "axis_v"):
            a = np.asarray(getattr(self, name), dtype=float)
            n = np.linalg.norm(a)
            if n == 0:
                raise InvalidArgumentError(f"{name} must be nonzero")
            object.__setattr__(self, name, a / n)
        if abs(self.axis_u @ self.axis_v) > 1e-9:
            raise InvalidArgumentError("grid axes must be orthogonal")
        if self.resolution[0] < 1 or self.resolution[1] < 1:
            raise InvalidArgumentError(f"resolution must be >= 1, got {self.resolution}")

    @property
    def u(self) -> np.ndarray:
        return np.linspace(self.u_range[0], self.u_range[1], self.resolution[0])

    @property
    def v(self) -> np.ndarray:
        return np.linspace(self.v_range[0], self.v_range[1], self.resolution[1])

    def points(self) -> np.ndarray:
        """All grid points, u-major, shape (nu * nv, 3)."""
        uu, vv = np.meshgrid(self.u, self.v, indexing="ij")
        return (
            self.origin
            + uu.ravel()[:, None] * self.axis_u
            + vv.ravel()[:, None] * self.axis_v
        )


def plane_spec(
    name: str,
    extent: tuple[float, float, float, float],
    resolution: tuple[int, int] = (201, 201),
    offset: float = 0.0,
) -> FieldGridSpec:
    """Build a named coordinate-plane grid, e.g. the yoz plane through x=offset."""
    if name not in PLANES:
        raise InvalidArgumentError(
            f"unknown plane {name!r}; expected one of {sorted(PLANES)}"
        )
    u_name, v_name = PLANES[name]
    normal = _AXES[({"x", "y", "z"} - {u_name, v_name}).pop()]
    return FieldGridSpec(
        origin=normal * offset,
        axis_u=_AXES[u_name],
        axis_v=_AXES[v_name],
        u_range=(extent[0], extent[1]),
        v_range=(extent[2], extent[3]),
        resolution=resolution,
    )


@dataclass(frozen=True)
class FieldGrid:
    """Power densities sampled on a FieldGridSpec."""

    spec: FieldGridSpec
    values: np.ndarray  # (nu, nv), W/m^2

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.spec.resolution:
            raise InvalidArgumentError(
                f"values shape {v.shape} does not match resolution {self.spec.resolution}"
            )
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidArgumentError("field values must be finite and nonnegative")
        object.__setattr__(self, "values", v)

    def to_csv(self, path, header_lines=()) -> None:
        peak = float(self.values.max())
        norm = self.values / peak if peak > 0 else self.values
        u, v = self.spec.u, self.spec.v
        with open(path, "w") as f:
            for line in header_lines:
                f.write(f"# {line}\n")
            def fmt(vec):
                return "(" + ",".join(f"{float(x):g}" for x in vec) + ")"

            f.write(
                f"# origin={fmt(self.spec.origin)} axis_u={fmt(self.spec.axis_u)} "
                f"axis_v={fmt(self.spec.axis_v)}\n"
            )
            f.write("u,v,power_w_m2,power_normalized\n")
            for i in range(u.size):
                for j in range(v.size):
                    f.write(
                        f"{u[i]:.6f},{v[j]:.6f},{self.values[i, j]:.12e},"
                        f"{norm[i, j]:.12e}\n"
                    )


def radiate(
    sources,
    grid: FieldGridSpec,
    constants: RfConstants,
    chunk_points: int = 4096,
) -> FieldGrid:
    """Coherent power-density map from one or more excited arrays.

    ``sources`` is one (ArrayGeometry, excitation) pair or a list of them;
    all arrays must share ``constants``. Each element contributes
    sqrt(2 mu0 P_el G / (4 pi r^2)) * exp(jkr) with the element's complex
    excitation phase; the map is |sum E|^2 / (2 mu0).
    """
    if isinstance(sources, tuple) and isinstance(sources[0], ArrayGeometry):
        sources = [sources]
    if not sources:
        raise InvalidArgumentError("at least one radiating array is required")
    for geom, exc in sources:
        if np.asarray(exc).shape != (geom.num_elements,):
            raise InvalidArgumentError(
                f"excitation length {np.asarray(exc).shape} does not match "
                f"{geom.num_elements} elements"
            )

    points = grid.points()
    guard = FAR_FIELD_WAVELENGTHS * constants.wavelength
    mu0 = constants.wave_impedance
    field = np.zeros(points.shape[0], dtype=complex)
    for geom, exc in sources:
        exc = np.asarray(exc, dtype=complex)
        for lo in range(0, points.shape[0], chunk_points):
            p = points[lo : lo + chunk_points]
            diff = p[:, None, :] - geom.element_positions[None, :, :]
            r = np.linalg.norm(diff, axis=2)
            if np.min(r) < guard:
                raise GeometryError(
                    f"grid point within {np.min(r):.4g} m of an element violates "
                    f"the {FAR_FIELD_WAVELENGTHS:g}-wavelength far-field guard"
                )
            cosang = np.clip((diff @ geom.boresight) / r, 0.0, None)
            gain = constants.max_gain * cosang
            amp = np.sqrt(2 * mu0 * gain / (4 * np.pi * r * r))
            field[lo : lo + p.shape[0]] += (
                amp * exc[None, :] * np.exp(1j * constants.wavenumber * r)
            ).sum(axis=1)
    values = (np.abs(field) ** 2 / (2 * mu0)).reshape(grid.resolution)
    return FieldGrid(spec=grid, values=values)


def normalize(grid: FieldGrid) -> FieldGrid:
    """Scale so the maximum value is exactly 1."""
    peak = float(grid.values.max())
    if peak <= 0:
        raise DegenerateGridError("cannot normalize an all-zero field grid")
    return FieldGrid(spec=grid.spec, values=grid.values / peak)
