"""Uniform planar array construction and target placement.

All coordinates are in the base-station frame: BS plane at z = 0 with
boresight +z. A mobile target (MT) array lies in a plane parallel to the
BS plane and faces it (boresight -z). The direction unit vector for
polar angle theta (from +z) and azimuth phi (from +x) is
(sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

_Z = np.array([0.0, 0.0, 1.0])


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.flags.writeable = False
    return a


def _rotation_to(boresight: np.ndarray) -> np.ndarray:
    """Rotation matrix mapping local +z onto ``boresight``."""
    b = np.asarray(boresight, dtype=float)
    n = np.linalg.norm(b)
    if n == 0:
        raise InvalidArgumentError("boresight must be a nonzero vector")
    b = b / n
    c = float(b @ _Z)
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        # 180-degree flip about the x axis keeps the plane parallel.
        return np.diag([1.0, -1.0, -1.0])
    axis = np.cross(_Z, b)
    axis /= np.linalg.norm(axis)
    s = np.sqrt(1.0 - c * c)
    K = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


@dataclass(frozen=True)
class ArrayGeometry:
    """One uniform planar array: element positions, boresight, centroid."""

    rows: int
    cols: int
    spacing: float
    element_positions: np.ndarray  # (rows*cols, 3), row-major over (p_x, p_y)
    boresight: np.ndarray  # unit 3-vector, orthogonal to the array plane
    center: np.ndarray  # centroid of the elements

    def __post_init__(self):
        object.__setattr__(self, "element_positions", _readonly(self.element_positions))
        object.__setattr__(self, "boresight", _readonly(self.boresight))
        object.__setattr__(self, "center", _readonly(self.center))
        if self.element_positions.shape != (self.rows * self.cols, 3):
            raise InvalidArgumentError("element count must equal rows * cols")

    @property
    def num_elements(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class MtPlacement:
    """Where one MT array sits relative to the BS, and how much it reflects."""

    range_m: float
    elevation: float  # radians, polar angle from BS boresight
    azimuth: float  # radians, from +x in the BS plane
    rows: int
    cols: int
    reflection_ratio: float

    def __post_init__(self):
        if self.range_m <= 0:
            raise InvalidArgumentError(f"range must be positive, got {self.range_m}")
        if not abs(self.elevation) < np.pi / 2:
            raise InvalidArgumentError(
                f"|elevation| must be below pi/2, got {self.elevation}"
            )
        # Zero is tolerated so a dead return path surfaces as a
        # resonance-collapse diagnostic instead of a config error.
        if not 0 <= self.reflection_ratio <= 1:
            raise InvalidArgumentError(
                f"reflection_ratio must be in [0, 1], got {self.reflection_ratio}"
            )


def direction_unit(theta: float, phi: float) -> np.ndarray:
    """Unit vector for polar angle theta (from +z) and azimuth phi (from +x)."""
    st = np.sin(theta)
    return np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


def direction_angles(v) -> tuple[float, float]:
    """Recover (theta, phi) in radians from a direction vector; theta >= 0."""
    v = np.asarray(v, dtype=float)
    theta = float(np.arctan2(np.hypot(v[0], v[1]), v[2]))
    phi = float(np.arctan2(v[1], v[0]))
    return theta, phi


def build_upa(
    rows: int,
    cols: int,
    spacing: float,
    center,
    boresight,
    anchor: str = "corner",
) -> ArrayGeometry:
    """Build a uniform planar array.

    With ``anchor="corner"`` the element at index (1, 1) sits at ``center``
    and element (p_x, p_y) at center + ((p_x-1)d, (p_y-1)d, 0) in the local
    frame; ``anchor="centroid"`` shifts the grid so its centroid is at
    ``center``. The local frame is rotated so local +z maps to ``boresight``.
    Element ordering is row-major over (p_x, p_y) and stable.
    """
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"rows and cols must be >= 1, got {rows}x{cols}")
    if spacing <= 0:
        raise InvalidArgumentError(f"spacing must be positive, got {spacing}")
    if anchor not in ("corner", "centroid"):
        raise InvalidArgumentError(f"unknown anchor {anchor!r}")
    center = np.asarray(center, dtype=float)

    px = np.repeat(np.arange(rows), cols)  # row-major: p_x outer, p_y inner
    py = np.tile(np.arange(cols), rows)
    local = np.stack([px * spacing, py * spacing, np.zeros(rows * cols)], axis=1)
    if anchor == "centroid":
        local -= local.mean(axis=0)

    R = _rotation_to(boresight)
    positions = local @ R.T + center
    b = np.asarray(boresight, dtype=float)
    b = b / np.linalg.norm(b)
    return ArrayGeometry(
        rows=rows,
        cols=cols,
        spacing=spacing,
        element_positions=positions,
        boresight=b,
        center=positions.mean(axis=0),
    )


def place_mt(placement: MtPlacement, spacing: float) -> ArrayGeometry:
    """Place an MT array centered at range * direction(theta, phi).

    The MT plane is parallel to the BS plane and faces it (boresight -z).
    """
    c = placement.range_m * direction_unit(placement.elevation, placement.azimuth)
    return build_upa(
        placement.rows,
        placement.cols,
        spacing,
        center=c,
        boresight=-_Z,
        anchor="centroid",
    )
