"""Array element placement, IRS index mapping, and GCS/LCS coordinate rotation.

Conventions used throughout the package:

* All angles are in radians and stored in [-pi, pi).
* Element indices are 1-based (q on BS, p on USER, r on IRS) to match the
  usual channel-matrix notation.
* The world frame (GCS) is anchored at BS element 1.  BS/USER element
  offsets are referenced to the first element of the linear array, IRS
  element offsets to the panel center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0


def wrap_angle(angle: float) -> float:
    """Wrap an angle (radians) into [-pi, pi)."""
    return float(np.mod(angle + np.pi, 2.0 * np.pi) - np.pi)


def flatten_index(x: int, y: int, m_y: int) -> int:
    """Map a 1-based (row, column) IRS element index to the 1-based flat index.

    The panel is traversed row by row: r = (x - 1) * M_y + y.
    """
    if m_y < 1:
        raise ValueError(f"column count must be >= 1, got {m_y}")
    if x < 1:
        raise ValueError(f"row index must be >= 1, got {x}")
    if not 1 <= y <= m_y:
        raise ValueError(f"column index {y} outside [1, {m_y}]")
    return (x - 1) * m_y + y


def unflatten_index(r: int, m_y: int, m_x: int | None = None) -> tuple[int, int]:
    """Invert :func:`flatten_index`, returning the 1-based (row, column) pair.

    Uses x = ceil(r / M_y), y = r - (x - 1) * M_y, which is the exact inverse
    of the row-major flattening for every r (a naive integer-division /
    modulo split fails at the column boundaries where mod(r, M_y) = 0).
    If ``m_x`` is given, r is range-checked against the full panel.
    """
    if m_y < 1:
        raise ValueError(f"column count must be >= 1, got {m_y}")
    if r < 1:
        raise ValueError(f"flat index must be >= 1, got {r}")
    if m_x is not None and r > m_x * m_y:
        raise ValueError(f"flat index {r} outside [1, {m_x * m_y}]")
    x = (r - 1) // m_y + 1
    y = r - (x - 1) * m_y
    return x, y


def _unit_from_angles(azimuth: float, elevation: float) -> np.ndarray:
    """Unit vector [cos(el)cos(az), cos(el)sin(az), sin(el)]."""
    ce = math.cos(elevation)
    return np.array(
        [ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)]
    )


@dataclass(frozen=True)
class TerminalLayout:
    """Geometry of one terminal's antenna array.

    BS and USER are uniform linear arrays described by one element count,
    spacing and pointing direction; the IRS is a uniform planar array with
    separate parameters for its two extending directions.

    Attributes
    ----------
    kind : str
        "BS", "USER" or "IRS".
    counts : tuple of int
        (M,) for linear arrays, (M_x, M_y) for the IRS.
    spacings : tuple of float
        Element intervals in meters, one entry per array direction.
    azimuths, elevations : tuple of float
        Pointing angles of each array direction, radians in [-pi, pi).
    """

    kind: str
    counts: tuple[int, ...]
    spacings: tuple[float, ...]
    azimuths: tuple[float, ...]
    elevations: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("BS", "USER", "IRS"):
            raise ValueError(f"unknown terminal kind {self.kind!r}")
        ndim = 2 if self.kind == "IRS" else 1
        for name, values in (
            ("counts", self.counts),
            ("spacings", self.spacings),
            ("azimuths", self.azimuths),
            ("elevations", self.elevations),
        ):
            if len(values) != ndim:
                raise ValueError(f"{self.kind} layout needs {ndim} {name}, got {len(values)}")
        if any(m < 1 for m in self.counts):
            raise ValueError(f"element counts must be >= 1, got {self.counts}")
        if any(d <= 0 for d in self.spacings):
            raise ValueError(f"spacings must be > 0, got {self.spacings}")
        object.__setattr__(self, "azimuths", tuple(wrap_angle(a) for a in self.azimuths))
        object.__setattr__(self, "elevations", tuple(wrap_angle(e) for e in self.elevations))

    @classmethod
    def linear(cls, kind: str, num_elements: int, spacing: float,
               azimuth: float, elevation: float) -> "TerminalLayout":
        return cls(kind, (num_elements,), (spacing,), (azimuth,), (elevation,))

    @classmethod
    def planar(cls, m_x: int, m_y: int, spacing_x: float, spacing_y: float,
               azimuth_x: float, elevation_x: float,
               azimuth_y: float, elevation_y: float) -> "TerminalLayout":
        return cls("IRS", (m_x, m_y), (spacing_x, spacing_y),
                   (azimuth_x, azimuth_y), (elevation_x, elevation_y))

    @property
    def num_elements(self) -> int:
        return int(np.prod(self.counts))

    def axis_vector(self, axis: int = 0) -> np.ndarray:
        """Spacing-scaled direction vector of one array axis."""
        return self.spacings[axis] * _unit_from_angles(self.azimuths[axis], self.elevations[axis])


def element_offset(layout: TerminalLayout, index: int) -> np.ndarray:
    """Offset vector of one element, meters in the GCS orientation.

    For BS/USER this is l_q = (q - 1) * delta * [cos(bE)cos(bA),
    cos(bE)sin(bA), sin(bE)], referenced to the first element.  For the IRS
    it is referenced to the panel center with the row/column weights
    ((M_x + 1)/2 - x) and (y - (M_y + 1)/2) on the two axis vectors.
    """
    if not 1 <= index <= layout.num_elements:
        raise ValueError(f"element index {index} outside [1, {layout.num_elements}]")
    if layout.kind == "IRS":
        m_x, m_y = layout.counts
        x, y = unflatten_index(index, m_y, m_x)
        wx = (m_x + 1) / 2.0 - x
        wy = y - (m_y + 1) / 2.0
        return wx * layout.axis_vector(0) + wy * layout.axis_vector(1)
    return (index - 1) * layout.axis_vector(0)


def element_offsets(layout: TerminalLayout) -> np.ndarray:
    """Offsets of every element, shape (num_elements, 3), flat-index order."""
    if layout.kind == "IRS":
        m_x, m_y = layout.counts
        xs, ys = np.meshgrid(np.arange(1, m_x + 1), np.arange(1, m_y + 1), indexing="ij")
        wx = ((m_x + 1) / 2.0 - xs).reshape(-1)
        wy = (ys - (m_y + 1) / 2.0).reshape(-1)
        return np.outer(wx, layout.axis_vector(0)) + np.outer(wy, layout.axis_vector(1))
    q = np.arange(layout.counts[0])
    return np.outer(q, layout.axis_vector(0))


@dataclass(frozen=True)
class SceneGeometry:
    """Pointing vectors among the three terminals at the initial time.

    d_bi points from BS element 1 to the IRS center, d_iu from the IRS
    center to USER element 1, d_bu from BS element 1 to USER element 1.
    Exactly two of the three must be supplied; the third is derived from
    the closure d_bu = d_bi + d_iu.
    """

    d_bi: np.ndarray
    d_iu: np.ndarray
    d_bu: np.ndarray

    def __init__(self, d_bi=None, d_iu=None, d_bu=None):
        given = [v is not None for v in (d_bi, d_iu, d_bu)]
        if sum(given) < 2:
            raise ValueError("need at least two of d_bi, d_iu, d_bu")
        if d_bi is not None and d_iu is not None:
            d_bi = np.asarray(d_bi, dtype=float)
            d_iu = np.asarray(d_iu, dtype=float)
            derived_bu = d_bi + d_iu
            if d_bu is not None and not np.array_equal(np.asarray(d_bu, dtype=float), derived_bu):
                raise ValueError("d_bu inconsistent with d_bi + d_iu")
            d_bu = derived_bu
        elif d_bi is None:
            d_iu = np.asarray(d_iu, dtype=float)
            d_bu = np.asarray(d_bu, dtype=float)
            d_bi = d_bu - d_iu
        else:
            d_bi = np.asarray(d_bi, dtype=float)
            d_bu = np.asarray(d_bu, dtype=float)
            d_iu = d_bu - d_bi
        for name, v in (("d_bi", d_bi), ("d_iu", d_iu), ("d_bu", d_bu)):
            if v.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
            v.flags.writeable = False
        object.__setattr__(self, "d_bi", d_bi)
        object.__setattr__(self, "d_iu", d_iu)
        object.__setattr__(self, "d_bu", d_bu)


@dataclass(frozen=True)
class RotationAngles:
    """Bearing / downtilt / slant angles of a local coordinate system."""

    bearing: float
    downtilt: float
    slant: float


def rotation_matrix(angles: RotationAngles) -> np.ndarray:
    """3x3 rotation matrix R = R_z(bearing) @ R_y(downtilt) @ R_x(slant)."""
    ca, sa = math.cos(angles.bearing), math.sin(angles.bearing)
    cb, sb = math.cos(angles.downtilt), math.sin(angles.downtilt)
    cg, sg = math.cos(angles.slant), math.sin(angles.slant)
    r_z = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    r_y = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    r_x = np.array([[1.0, 0.0, 0.0], [0.0, cg, -sg], [0.0, sg, cg]])
    return r_z @ r_y @ r_x


def rotation_matrices(bearing: np.ndarray, downtilt: np.ndarray,
                      slant: np.ndarray) -> np.ndarray:
    """Stacked rotation matrices for angle arrays, shape (n, 3, 3)."""
    ca, sa = np.cos(bearing), np.sin(bearing)
    cb, sb = np.cos(downtilt), np.sin(downtilt)
    cg, sg = np.cos(slant), np.sin(slant)
    n = ca.shape[0]
    out = np.empty((n, 3, 3))
    out[:, 0, 0] = ca * cb
    out[:, 0, 1] = ca * sb * sg - sa * cg
    out[:, 0, 2] = ca * sb * cg + sa * sg
    out[:, 1, 0] = sa * cb
    out[:, 1, 1] = sa * sb * sg + ca * cg
    out[:, 1, 2] = sa * sb * cg - ca * sg
    out[:, 2, 0] = -sb
    out[:, 2, 1] = cb * sg
    out[:, 2, 2] = cb * cg
    return out


def gcs_to_lcs(point_gcs: np.ndarray, angles: RotationAngles,
               origin_gcs: np.ndarray | None = None) -> np.ndarray:
    """Express a GCS point in the local frame: row-vector right-multiply by R."""
    p = np.asarray(point_gcs, dtype=float)
    if origin_gcs is not None:
        p = p - np.asarray(origin_gcs, dtype=float)
    return p @ rotation_matrix(angles)


def lcs_to_gcs(point_lcs: np.ndarray, angles: RotationAngles,
               origin_gcs: np.ndarray | None = None) -> np.ndarray:
    """Inverse of :func:`gcs_to_lcs`; exact round-trip since R is orthonormal."""
    p = np.asarray(point_lcs, dtype=float) @ rotation_matrix(angles).T
    if origin_gcs is not None:
        p = p + np.asarray(origin_gcs, dtype=float)
    return p
