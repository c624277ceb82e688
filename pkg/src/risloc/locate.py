"""Mapping per-RIS angle estimates to the UE position: least-squares line
intersection, plus local maximum-likelihood refinement of the fix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .geometry import AnglePair, Position3D, angles_between, steering_upa
from .sounding import SceneConfig
from .zf import SeparatedObservation


class DegenerateGeometryError(ValueError):
    pass


def direction_vector(angles: AnglePair) -> np.ndarray:
    """Unit vector (cos az sin el, sin az sin el, cos el)."""
    az, el = angles.azimuth, angles.elevation
    return np.array(
        [np.cos(az) * np.sin(el), np.sin(az) * np.sin(el), np.cos(el)]
    )


def ls_intersection(
    estimates: list[tuple[AnglePair, Position3D]],
) -> tuple[Position3D, float]:
    """Point closest (in summed squared distance) to the rays from each RIS.

    Each entry pairs an angle estimate with the RIS position the ray leaves
    from.  Returns the fix and the condition number of the normal matrix.
    """
    if len(estimates) < 2:
        raise ValueError("need at least two lines for a 3D fix")
    S = np.zeros((3, 3))
    rhs = np.zeros(3)
    for angles, p_ris in estimates:
        xi = direction_vector(angles)
        Bm = np.eye(3) - np.outer(xi, xi)
        S += Bm
        rhs += Bm @ p_ris.as_array()
    cond = float(np.linalg.cond(S))
    sv = np.linalg.svd(S, compute_uv=False)
    if sv[-1] <= 3 * np.finfo(float).eps * sv[0]:
        raise DegenerateGeometryError(
            f"all bearing lines are parallel (condition number {cond:.3g})"
        )
    p = np.linalg.solve(S, rhs)
    return Position3D.from_array(p), cond


def ml_cost(
    p: np.ndarray,
    separated: list[SeparatedObservation],
    scene: SceneConfig,
    schedule: tuple[np.ndarray, ...],
) -> float:
    """Negative log-likelihood (up to constants) of the separated observations
    at candidate position p, with the complex path gains concentrated out."""
    pilot = np.sqrt(scene.radio.tx_power)
    p_pos = Position3D.from_array(p)
    total = 0.0
    for sep, ris, Om in zip(separated, scene.ris, schedule):
        try:
            theta = angles_between(ris.position, p_pos)
        except ValueError:
            return np.inf
        phi = angles_between(ris.position, scene.bs_position)
        b = pilot * (Om.T @ (steering_upa(phi, ris.layout) * steering_upa(theta, ris.layout)))
        bn = np.vdot(b, b).real
        if bn == 0:
            return np.inf
        gain = np.vdot(b, sep.z) / bn          # closed-form LS gain
        resid = sep.z - gain * b
        total += float(np.vdot(resid, resid).real) / sep.noise_scale
    return total


def ml_refine(
    p0: Position3D,
    separated: list[SeparatedObservation],
    scene: SceneConfig,
    schedule: tuple[np.ndarray, ...],
    max_iterations: int = 400,
) -> tuple[Position3D, float, bool]:
    """Local likelihood refinement started from p0.

    Returns (position, cost, improved).  Never returns a point whose cost
    exceeds the initializer's.
    """
    x0 = p0.as_array()
    f0 = ml_cost(x0, separated, scene, schedule)
    res = minimize(
        ml_cost,
        x0,
        args=(separated, scene, schedule),
        method="Nelder-Mead",
        options={"maxiter": max_iterations, "xatol": 1e-9, "fatol": 0.0},
    )
    if np.isfinite(res.fun) and res.fun <= f0:
        return Position3D.from_array(res.x), float(res.fun), True
    return p0, float(f0), False
