"""Array geometry primitives: positions, angles, UPA steering vectors, pathloss.

Conventions used throughout the package:

* Azimuth is measured in the global xy-plane, ``atan2(y, x)``, in (-pi, pi].
* Elevation is the polar angle from the +z axis, in [0, pi].  With this
  convention the direction cosines of a unit propagation vector are
  ``(cos(az) sin(el), sin(az) sin(el), cos(el))``.
* UPAs are half-wavelength spaced and indexed axis-major: the full steering
  vector is ``kron(axis_a, axis_b)`` where ``axis_a`` runs over the first
  in-plane axis (x for xy/xz planes, y for the yz plane) and ``axis_b`` over
  the second (y for the xy plane, z otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

_PLANES = ("xy", "xz", "yz")


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(np.isfinite([self.x, self.y, self.z])):
            raise ValueError("position components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(v) -> "Position3D":
        v = np.asarray(v, dtype=float)
        return Position3D(float(v[0]), float(v[1]), float(v[2]))


@dataclass(frozen=True)
class AnglePair:
    """(azimuth, elevation) with elevation as polar angle from +z."""

    azimuth: float
    elevation: float

    def __post_init__(self):
        if not (-np.pi < self.azimuth <= np.pi + 1e-12):
            raise ValueError(f"azimuth {self.azimuth} outside (-pi, pi]")
        if not (-1e-12 <= self.elevation <= np.pi + 1e-12):
            raise ValueError(f"elevation {self.elevation} outside [0, pi]")


@dataclass(frozen=True)
class UpaLayout:
    """Uniform planar array: mounting plane and element counts per axis."""

    plane: str
    n_a: int
    n_z: int

    def __post_init__(self):
        if self.plane not in _PLANES:
            raise ValueError(f"plane must be one of {_PLANES}, got {self.plane!r}")
        if self.n_a < 1 or self.n_z < 1:
            raise ValueError("element counts must be >= 1")

    @property
    def size(self) -> int:
        return self.n_a * self.n_z

    @property
    def normal_axis(self) -> int:
        """Index (0=x, 1=y, 2=z) of the axis orthogonal to the mounting plane."""
        return {"xy": 2, "xz": 1, "yz": 0}[self.plane]


@dataclass(frozen=True)
class RadioParams:
    carrier_hz: float
    tx_power: float
    noise_var: float

    def __post_init__(self):
        if self.carrier_hz <= 0 or self.tx_power <= 0 or self.noise_var < 0:
            raise ValueError("carrier, power must be > 0 and noise variance >= 0")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz


@dataclass(frozen=True)
class PathGain:
    """End-to-end two-hop gain: magnitude sqrt(g_UR * g_RB) and phase 2*pi*f_c*tau."""

    magnitude: float
    phase: float
    delay: float
    d_ur: float
    d_rb: float

    @property
    def complex_gain(self) -> complex:
        return self.magnitude * np.exp(1j * self.phase)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = (a + np.pi) % (2 * np.pi) - np.pi
    if a == -np.pi:
        a = np.pi
    return float(a)


def pathloss(d: float, wavelength: float) -> float:
    """Free-space pathloss (lambda / (4 pi d))**2 for a single hop."""
    if d <= 0:
        raise ValueError(f"distance must be > 0, got {d}")
    return (wavelength / (4.0 * np.pi * d)) ** 2


def path_gain(d_ur: float, d_rb: float, radio: RadioParams) -> PathGain:
    """Two-hop gain for the UE -> RIS -> BS path; phase from the total delay."""
    lam = radio.wavelength_m
    g = np.sqrt(pathloss(d_ur, lam) * pathloss(d_rb, lam))
    tau = (d_ur + d_rb) / SPEED_OF_LIGHT
    nu = wrap_angle(2.0 * np.pi * radio.carrier_hz * tau)
    return PathGain(magnitude=float(g), phase=nu, delay=tau, d_ur=d_ur, d_rb=d_rb)


def gamma_components(angles: AnglePair, layout: UpaLayout) -> tuple[float, float]:
    """Direction cosines sampled by the two in-plane axes of the UPA.

    For an xz-plane array returns (cos(az) sin(el), cos(el)); for yz
    (sin(az) sin(el), cos(el)); for the xy plane (cos(az) sin(el),
    sin(az) sin(el)).
    """
    az, el = angles.azimuth, angles.elevation
    gx = np.cos(az) * np.sin(el)
    gy = np.sin(az) * np.sin(el)
    gz = np.cos(el)
    if layout.plane == "xz":
        return float(gx), float(gz)
    if layout.plane == "yz":
        return float(gy), float(gz)
    return float(gx), float(gy)


def steering_axis(gamma: float, n: int) -> np.ndarray:
    """Half-wavelength ULA response along one axis: entries exp(j pi k gamma)."""
    if abs(gamma) > 1.0 + 1e-9:
        raise ValueError(f"|gamma| = {abs(gamma)} exceeds 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n)
    return np.exp(1j * np.pi * k * gamma)


def steering_upa(angles: AnglePair, layout: UpaLayout) -> np.ndarray:
    """Full UPA response as the Kronecker product of the two axis responses."""
    g_a, g_b = gamma_components(angles, layout)
    return np.kron(steering_axis(g_a, layout.n_a), steering_axis(g_b, layout.n_z))


def steering_upa_from_gammas(g_a: float, g_b: float, layout: UpaLayout) -> np.ndarray:
    return np.kron(steering_axis(g_a, layout.n_a), steering_axis(g_b, layout.n_z))


def angles_between(origin: Position3D, target: Position3D) -> AnglePair:
    """Azimuth/elevation of the direction from ``origin`` toward ``target``."""
    d = target.as_array() - origin.as_array()
    r = np.linalg.norm(d)
    if r == 0:
        raise ValueError("coincident points have no direction")
    az = np.arctan2(d[1], d[0])
    # atan2 form keeps full precision for near-axial directions
    el = np.arctan2(np.hypot(d[0], d[1]), d[2])
    return AnglePair(azimuth=wrap_angle(az), elevation=float(el))


def e2e_channel(
    gain: PathGain,
    bs_aoa: AnglePair,
    ris_aod: AnglePair,
    ris_aoa: AnglePair,
    omega: np.ndarray,
    bs_layout: UpaLayout,
    ris_layout: UpaLayout,
) -> np.ndarray:
    """Per-RIS channel seen at the BS for one reflection profile ``omega``.

    Returns l * alpha(bs_aoa) * (omega^T (alpha(ris_aod) o alpha(ris_aoa))),
    a scaled BS steering vector of length N.
    """
    omega = np.asarray(omega)
    if omega.shape != (ris_layout.size,):
        raise ValueError("profile length does not match the RIS layout")
    if np.any(np.abs(np.abs(omega) - 1.0) > 1e-9):
        raise ValueError("RIS profile entries must be unit modulus")
    a_bs = steering_upa(bs_aoa, bs_layout)
    a_dep = steering_upa(ris_aod, ris_layout)
    a_arr = steering_upa(ris_aoa, ris_layout)
    inner = omega @ (a_dep * a_arr)
    return gain.complex_gain * inner * a_bs
