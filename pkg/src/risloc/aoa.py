"""From the recovered sparse channel vector to the RIS angle of arrival.

Pipeline: rank-1 Kronecker factorization of the recovered vector, element-wise
removal of the known departure-angle response per axis, single-source
root-MUSIC per axis, and direction-cosine to angle conversion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .anm import AnmSolution
from .geometry import AnglePair, UpaLayout, gamma_components, steering_axis, wrap_angle

_SIGNAL_FLOOR = 1e-300


class NoSignalError(ValueError):
    pass


class ZenithSingularityError(ValueError):
    pass


class RootMusicResult(NamedTuple):
    gamma: float
    eig_gap: float      # largest / second-largest eigenvalue of R
    confident: bool


@dataclass(frozen=True)
class AoaEstimate:
    angles: AnglePair
    gammas: tuple[float, float]
    side_flag: int
    quality: float      # min over axes of the eigenvalue gap ratio


def kron_factorize(h: np.ndarray, layout: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Best rank-1 Kronecker factors (v_a, v_z) with kron(v_a, v_z) ~ h.

    Uses the SVD of the axis-major reshape of h; exact when h is a pure
    Kronecker product.
    """
    la, lz = layout
    h = np.asarray(h, dtype=complex).ravel()
    if h.size != la * lz:
        raise ValueError("vector length does not match the layout")
    nrm = np.linalg.norm(h)
    if not np.isfinite(nrm) or nrm < _SIGNAL_FLOOR:
        raise NoSignalError("recovered vector is numerically zero")
    H = h.reshape(la, lz)
    U, S, Vh = np.linalg.svd(H)
    v_a = S[0] * U[:, 0]
    v_z = Vh[0]         # row of V^H, so kron(v_a, v_z) matches H = v_a v_z^T
    return v_a, v_z


def remove_aod(v: np.ndarray, aod_axis_response: np.ndarray) -> np.ndarray:
    """Divide out the (unit-modulus) departure response entry-wise."""
    return np.asarray(v) / np.asarray(aod_axis_response)


def root_music_single(R: np.ndarray) -> RootMusicResult:
    """Single-source root-MUSIC on a K x K axis covariance.

    Returns the direction cosine gamma = angle(root)/pi of the root closest
    to the unit circle (from inside or on it).
    """
    R = np.asarray(R)
    K = R.shape[0]
    if K < 2 or R.shape != (K, K):
        raise ValueError("covariance must be square with K >= 2")
    w, Q = np.linalg.eigh(0.5 * (R + R.conj().T))
    gap = float(w[-1] / max(w[-2], 1e-300 * w[-1])) if w[-1] > 0 else 1.0
    confident = gap >= 1.0 + 1e-6
    En = Q[:, : K - 1]                       # noise subspace
    C = En @ En.conj().T
    # polynomial sum_k c_k z^(k + K - 1) from the diagonals of C
    coeffs = np.array([np.trace(C, offset=k) for k in range(K - 1, -K, -1)])
    roots = np.roots(coeffs)
    inside = roots[np.abs(roots) <= 1.0 + 1e-9]
    if inside.size == 0:
        inside = roots
    root = inside[np.argmin(np.abs(np.abs(inside) - 1.0))]
    gamma = float(np.angle(root) / np.pi)
    return RootMusicResult(gamma=gamma, eig_gap=gap, confident=confident)


def gammas_to_angles(
    gamma_a: float,
    gamma_z: float,
    plane: str,
    facing_side: int,
    consistency_tol: float = 0.1,
) -> AnglePair:
    """Invert the direction cosines of an xz- or yz-mounted array into an
    (azimuth, elevation) pair, resolving the out-of-plane sign with the
    half-space the surface reflects into.

    ``consistency_tol`` bounds how far gamma_a**2 + gamma_z**2 may exceed 1
    before the pair is rejected; within tolerance gamma_a is clamped.
    """
    if plane not in ("xz", "yz"):
        raise ValueError("gamma inversion applies to xz/yz mounted panels")
    if facing_side not in (-1, 1):
        raise ValueError("facing_side must be +1 or -1")
    if abs(gamma_a) > 1 + 1e-9 or abs(gamma_z) > 1 + 1e-9:
        raise ValueError("direction cosines must lie in [-1, 1]")
    gamma_z = float(np.clip(gamma_z, -1.0, 1.0))
    sin_el_sq = 1.0 - gamma_z**2
    if gamma_a**2 > sin_el_sq + consistency_tol:
        raise ValueError(
            f"inconsistent cosine pair: gamma_a^2 = {gamma_a**2:.4g} exceeds "
            f"1 - gamma_z^2 = {sin_el_sq:.4g} beyond tolerance"
        )
    ga = float(np.clip(gamma_a, -np.sqrt(max(sin_el_sq, 0.0)), np.sqrt(max(sin_el_sq, 0.0))))
    el = float(np.arccos(gamma_z))
    if el == 0.0:
        raise ZenithSingularityError("elevation 0: azimuth undefined at the zenith")
    out_of_plane = facing_side * float(np.sqrt(max(sin_el_sq - ga**2, 0.0)))
    if plane == "xz":
        gx, gy = ga, out_of_plane
    else:
        gx, gy = out_of_plane, ga
    az = wrap_angle(np.arctan2(gy, gx))
    return AnglePair(azimuth=az, elevation=el)


def estimate_aoa(
    anm: AnmSolution | np.ndarray,
    known_aod: AnglePair,
    layout: UpaLayout,
    facing_side: int,
    consistency_tol: float = 0.1,
) -> AoaEstimate:
    """Full AoA stage for one RIS path."""
    h = anm.h_hat if isinstance(anm, AnmSolution) else np.asarray(anm)
    la, lz = layout.n_a, layout.n_z
    v_a, v_z = kron_factorize(h, (la, lz))
    aod_a, aod_z = gamma_components(known_aod, layout)
    w_a = remove_aod(v_a, steering_axis(aod_a, la))
    w_z = remove_aod(v_z, steering_axis(aod_z, lz))
    res_a = root_music_single(np.outer(w_a, np.conj(w_a)))
    res_z = root_music_single(np.outer(w_z, np.conj(w_z)))
    angles = gammas_to_angles(
        res_a.gamma, res_z.gamma, layout.plane, facing_side, consistency_tol
    )
    return AoaEstimate(
        angles=angles,
        gammas=(res_a.gamma, res_z.gamma),
        side_flag=facing_side,
        quality=min(res_a.eig_gap, res_z.eig_gap),
    )
