"""Walker constellation generation and Earth-fixed position computation.

Satellites follow circular two-body orbits; the Earth is a rotating
sphere of radius 6371 km. Positions come out in the Earth-centered
Earth-fixed (ECEF) frame as float64 ``(3,)`` arrays in kilometers, so
ground stations are time-independent and satellite-ground geometry is
a plain Euclidean computation.
"""
import math
from dataclasses import dataclass

import numpy as np

from .constants import EARTH_RADIUS_KM, EARTH_ROTATION_RAD_S, MU_EARTH

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WalkerShell:
    """Walker-style constellation shell.

    ``raan_span_deg`` is 360 for a delta pattern and 180 for a star
    pattern; ``phasing_factor`` is the integer inter-plane phase offset
    numerator (0 <= F < planes).
    """

    planes: int
    sats_per_plane: int
    inclination_deg: float
    altitude_km: float
    phasing_factor: int = 0
    raan_span_deg: float = 360.0

    def __post_init__(self):
        if self.planes < 1 or self.sats_per_plane < 1:
            raise ValueError("planes and sats_per_plane must be >= 1")
        if not 0.0 <= self.inclination_deg <= 180.0:
            raise ValueError("inclination must be in [0, 180] degrees")
        if self.altitude_km <= 0.0:
            raise ValueError("altitude must be positive")
        if not 0 <= self.phasing_factor < self.planes:
            raise ValueError("phasing_factor must satisfy 0 <= F < planes")

    @property
    def total_sats(self) -> int:
        return self.planes * self.sats_per_plane

    @property
    def semi_major_axis_km(self) -> float:
        return EARTH_RADIUS_KM + self.altitude_km


@dataclass(frozen=True)
class SatelliteElement:
    """Orbital parameters of one satellite; angles in radians."""

    sat_id: tuple[int, int]  # (plane_index, slot_index)
    raan: float
    initial_phase: float
    semi_major_axis_km: float
    inclination: float

    def __post_init__(self):
        if self.semi_major_axis_km <= EARTH_RADIUS_KM:
            raise ValueError("semi-major axis must exceed Earth radius")

    @property
    def mean_motion(self) -> float:
        """Angular rate of the circular orbit, rad/s."""
        return math.sqrt(MU_EARTH / self.semi_major_axis_km**3)

    @property
    def period_s(self) -> float:
        return TWO_PI / self.mean_motion


@dataclass(frozen=True)
class GroundStation:
    gs_id: int
    name: str
    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0

    def __post_init__(self):
        if abs(self.latitude_deg) > 90.0:
            raise ValueError("latitude out of range")
        if abs(self.longitude_deg) > 180.0:
            raise ValueError("longitude out of range")


def generate_constellation(shell: WalkerShell) -> list[SatelliteElement]:
    """Expand a shell into its planes x sats_per_plane satellite elements.

    RAANs are evenly spaced over the shell's RAAN span; in-plane phases
    are evenly spaced over 360 degrees with an inter-plane offset of
    ``phasing_factor * 360 / (planes * sats_per_plane)`` degrees.
    """
    a = shell.semi_major_axis_km
    incl = math.radians(shell.inclination_deg)
    raan_step = math.radians(shell.raan_span_deg) / shell.planes
    slot_step = TWO_PI / shell.sats_per_plane
    phase_offset = shell.phasing_factor * TWO_PI / shell.total_sats

    elements = []
    for p in range(shell.planes):
        raan = p * raan_step
        for s in range(shell.sats_per_plane):
            elements.append(
                SatelliteElement(
                    sat_id=(p, s),
                    raan=raan,
                    initial_phase=(s * slot_step + p * phase_offset) % TWO_PI,
                    semi_major_axis_km=a,
                    inclination=incl,
                )
            )
    return elements


def propagate(elem: SatelliteElement, t: float) -> np.ndarray:
    """ECEF position of one satellite at time ``t`` seconds."""
    u = elem.initial_phase + elem.mean_motion * t
    a = elem.semi_major_axis_km
    cos_u, sin_u = math.cos(u), math.sin(u)
    cos_i, sin_i = math.cos(elem.inclination), math.sin(elem.inclination)
    # orbital plane -> inertial: rotate by inclination about x, then RAAN about z
    x_orb, y_orb = a * cos_u, a * sin_u
    y_inc, z_inc = y_orb * cos_i, y_orb * sin_i
    cos_o, sin_o = math.cos(elem.raan), math.sin(elem.raan)
    x_eci = x_orb * cos_o - y_inc * sin_o
    y_eci = x_orb * sin_o + y_inc * cos_o
    # inertial -> ECEF: rotate by -(Earth rotation) about z
    theta = EARTH_ROTATION_RAD_S * t
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    return np.array(
        [x_eci * cos_t + y_eci * sin_t, -x_eci * sin_t + y_eci * cos_t, z_inc]
    )


@dataclass(frozen=True)
class ElementArrays:
    """Column-packed elements for vectorized propagation."""

    raan: np.ndarray
    phase: np.ndarray
    a: np.ndarray
    incl: np.ndarray

    @property
    def n(self) -> int:
        return self.raan.shape[0]


def pack_elements(elements: list[SatelliteElement]) -> ElementArrays:
    return ElementArrays(
        raan=np.array([e.raan for e in elements]),
        phase=np.array([e.initial_phase for e in elements]),
        a=np.array([e.semi_major_axis_km for e in elements]),
        incl=np.array([e.inclination for e in elements]),
    )


def propagate_all(arrs: ElementArrays, t: float) -> np.ndarray:
    """ECEF positions of every satellite at ``t``, shape (n, 3)."""
    u = arrs.phase + np.sqrt(MU_EARTH / arrs.a**3) * t
    x_orb = arrs.a * np.cos(u)
    y_orb = arrs.a * np.sin(u)
    y_inc = y_orb * np.cos(arrs.incl)
    z = y_orb * np.sin(arrs.incl)
    cos_o, sin_o = np.cos(arrs.raan), np.sin(arrs.raan)
    x_eci = x_orb * cos_o - y_inc * sin_o
    y_eci = x_orb * sin_o + y_inc * cos_o
    theta = EARTH_ROTATION_RAD_S * t
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    out = np.empty((arrs.n, 3))
    out[:, 0] = x_eci * cos_t + y_eci * sin_t
    out[:, 1] = -x_eci * sin_t + y_eci * cos_t
    out[:, 2] = z
    return out


def station_position(gs: GroundStation) -> np.ndarray:
    """Geodetic -> ECEF on the spherical Earth; constant over time."""
    r = EARTH_RADIUS_KM + gs.altitude_m / 1000.0
    lat = math.radians(gs.latitude_deg)
    lon = math.radians(gs.longitude_deg)
    return np.array(
        [r * math.cos(lat) * math.cos(lon), r * math.cos(lat) * math.sin(lon), r * math.sin(lat)]
    )


def station_positions(stations: list[GroundStation]) -> np.ndarray:
    return np.array([station_position(g) for g in stations]).reshape(len(stations), 3)
