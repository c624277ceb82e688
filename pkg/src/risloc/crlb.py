"""Fisher information and the position error bound.

Per path, the unknowns are eta = [sqrt(g_UR), nu, theta_az, theta_el]; their
4x4 FIM is assembled from the analytic derivatives of the noiseless separated
observation.  The angle block (after eliminating the gain/phase nuisances by
Schur complement) maps through the position Jacobian of each RIS bearing and
sums into the 3x3 position FIM, whose inverse trace gives the PEB.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    AnglePair,
    Position3D,
    RadioParams,
    UpaLayout,
    pathloss,
    steering_axis,
    steering_upa,
)
from .sounding import PathTruth, SceneConfig, derive_truth
from .zf import build_bs_response_matrix, zf_weights


class SingularFimError(ValueError):
    pass


@dataclass(frozen=True)
class PebReport:
    fim_channel: tuple[np.ndarray, ...]   # per-RIS 4x4
    efim_angles: tuple[np.ndarray, ...]   # per-RIS 2x2, (el, az) ordering
    fim_position: np.ndarray              # 3x3
    peb_m: float
    axis_bounds_m: tuple[float, float, float]


def _axis_gammas_and_partials(az: float, el: float, plane: str):
    """Direction cosines of the two array axes and their (az, el) partials."""
    sa, ca, se, ce = np.sin(az), np.cos(az), np.sin(el), np.cos(el)
    by_axis = {
        "x": (ca * se, -sa * se, ca * ce),
        "y": (sa * se, ca * se, sa * ce),
        "z": (ce, 0.0, -se),
    }
    axes = {"xy": ("x", "y"), "xz": ("x", "z"), "yz": ("y", "z")}[plane]
    return by_axis[axes[0]], by_axis[axes[1]]


def _upa_with_grad(az: float, el: float, layout: UpaLayout):
    (g1, g1az, g1el), (g2, g2az, g2el) = _axis_gammas_and_partials(az, el, layout.plane)
    a1 = steering_axis(float(np.clip(g1, -1, 1)), layout.n_a)
    a2 = steering_axis(float(np.clip(g2, -1, 1)), layout.n_z)
    d1 = 1j * np.pi * np.arange(layout.n_a) * a1
    d2 = 1j * np.pi * np.arange(layout.n_z) * a2
    alpha = np.kron(a1, a2)
    d_az = np.kron(d1 * g1az, a2) + np.kron(a1, d2 * g2az)
    d_el = np.kron(d1 * g1el, a2) + np.kron(a1, d2 * g2el)
    return alpha, d_az, d_el


def steering_upa_with_grad(angles: AnglePair, layout: UpaLayout):
    """UPA response and its partials with respect to azimuth and elevation."""
    return _upa_with_grad(angles.azimuth, angles.elevation, layout)


def slot_means_eta(
    eta: np.ndarray,
    sqrt_g_rb: float,
    ris_aod: AnglePair,
    omega: np.ndarray,
    pilot: float,
    ris_layout: UpaLayout,
) -> np.ndarray:
    """Noiseless separated slot means as a function of the unknown vector
    eta = [sqrt(g_UR), nu, theta_az, theta_el] (finite-difference target)."""
    sqrt_g_ur, nu, az, el = (float(v) for v in eta)
    a_dep = steering_upa(ris_aod, ris_layout)
    a_arr, _, _ = _upa_with_grad(az, el, ris_layout)
    return sqrt_g_ur * sqrt_g_rb * np.exp(1j * nu) * pilot * (omega.T @ (a_dep * a_arr))


def slot_mean_derivatives_eta(
    eta: np.ndarray,
    sqrt_g_rb: float,
    ris_aod: AnglePair,
    omega: np.ndarray,
    pilot: float,
    ris_layout: UpaLayout,
) -> np.ndarray:
    """T x 4 analytic derivatives of the slot means with respect to eta."""
    sqrt_g_ur, nu, az, el = (float(v) for v in eta)
    a_dep = steering_upa(ris_aod, ris_layout)
    a_arr, d_az, d_el = _upa_with_grad(az, el, ris_layout)
    proj = omega.T @ (a_dep * a_arr)
    proj_az = omega.T @ (a_dep * d_az)
    proj_el = omega.T @ (a_dep * d_el)
    common = sqrt_g_rb * np.exp(1j * nu) * pilot
    mu = sqrt_g_ur * common * proj
    return np.column_stack(
        [
            common * proj,                 # d/d sqrt(g_UR)
            1j * mu,                       # d/d nu
            sqrt_g_ur * common * proj_az,  # d/d theta_az
            sqrt_g_ur * common * proj_el,  # d/d theta_el
        ]
    )


def eta_of_truth(truth: PathTruth, radio: RadioParams) -> tuple[np.ndarray, float]:
    """(eta, sqrt_g_rb) for a ground-truth path."""
    lam = radio.wavelength_m
    eta = np.array(
        [
            np.sqrt(pathloss(truth.gain.d_ur, lam)),
            truth.gain.phase,
            truth.ris_aoa.azimuth,
            truth.ris_aoa.elevation,
        ]
    )
    return eta, float(np.sqrt(pathloss(truth.gain.d_rb, lam)))


def fim_channel(
    truth: PathTruth,
    omega: np.ndarray,
    radio: RadioParams,
    w_norm: float,
    ris_layout: UpaLayout,
) -> np.ndarray:
    """4x4 FIM of eta for one RIS path under noise variance rho * ||w||^2."""
    eta, sqrt_g_rb = eta_of_truth(truth, radio)
    pilot = float(np.sqrt(radio.tx_power))
    D = slot_mean_derivatives_eta(eta, sqrt_g_rb, truth.ris_aod, omega, pilot, ris_layout)
    rho_m = radio.noise_var * w_norm**2
    if rho_m <= 0:
        raise ValueError("noise variance must be positive for a finite FIM")
    J = (2.0 / rho_m) * np.real(D.conj().T @ D)
    return 0.5 * (J + J.T)


def efim_angles(J: np.ndarray) -> np.ndarray:
    """2x2 equivalent FIM of (theta_el, theta_az) after Schur elimination of
    the gain and phase nuisances."""
    if J.shape != (4, 4):
        raise ValueError("expected the 4x4 channel-parameter FIM")
    Jnn = J[:2, :2]
    Jtt = J[2:, 2:]
    Jtn = J[2:, :2]
    try:
        E = Jtt - Jtn @ np.linalg.solve(Jnn, Jtn.T)
    except np.linalg.LinAlgError as exc:
        raise SingularFimError("gain/phase nuisance block is singular") from exc
    # eta carries (az, el); the position mapping consumes (el, az)
    E = E[np.ix_([1, 0], [1, 0])]
    return 0.5 * (E + E.T)


def jacobian_position(p_ue: Position3D, p_ris: Position3D) -> np.ndarray:
    """3x2 Jacobian [d theta_el / d p_UE, d theta_az / d p_UE] of the RIS-seen
    UE bearing with respect to the UE coordinates."""
    d = p_ue.as_array() - p_ris.as_array()
    r = np.linalg.norm(d)
    if r == 0:
        raise ValueError("UE coincides with the RIS")
    rho_xy = np.hypot(d[0], d[1])
    if rho_xy == 0:
        raise ValueError("UE on the RIS zenith axis: azimuth Jacobian singular")
    d_el = -np.array([0.0, 0.0, 1.0]) / rho_xy + d[2] * d / (r**2 * rho_xy)
    d_az = np.array([-d[1], d[0], 0.0]) / rho_xy**2
    return np.column_stack([d_el, d_az])


def fim_position(
    scene: SceneConfig, schedule: tuple[np.ndarray, ...]
) -> tuple[np.ndarray, PebReport]:
    """3x3 position FIM over all RIS paths and the resulting PEB report."""
    truth = derive_truth(scene)
    A = build_bs_response_matrix(scene, truth)
    W = zf_weights(A)
    J4s, E2s = [], []
    Jp = np.zeros((3, 3))
    for m, (r, tr) in enumerate(zip(scene.ris, truth)):
        w_norm = float(np.linalg.norm(W[:, m]))
        J4 = fim_channel(tr, schedule[m], scene.radio, w_norm, r.layout)
        E2 = efim_angles(J4)
        Tm = jacobian_position(scene.ue_position, r.position)
        Jp += Tm @ E2 @ Tm.T
        J4s.append(J4)
        E2s.append(E2)
    Jp = 0.5 * (Jp + Jp.T)
    sv = np.linalg.svd(Jp, compute_uv=False)
    rank = int(np.sum(sv > 3 * np.finfo(float).eps * sv[0]))
    if rank < 3:
        raise SingularFimError(
            f"position FIM is rank {rank}: geometry cannot fix all coordinates"
        )
    Jinv = np.linalg.inv(Jp)
    peb = float(np.sqrt(np.trace(Jinv)))
    axis = tuple(float(np.sqrt(Jinv[i, i])) for i in range(3))
    report = PebReport(
        fim_channel=tuple(J4s),
        efim_angles=tuple(E2s),
        fim_position=Jp,
        peb_m=peb,
        axis_bounds_m=axis,
    )
    return Jp, report
