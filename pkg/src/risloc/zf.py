"""Zero-forcing separation of the per-RIS reflections at the BS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import steering_upa
from .sounding import SceneConfig, SoundingRecord, derive_truth


@dataclass(frozen=True)
class SeparatedObservation:
    """Per-RIS post-combining observation z_m over the T slots."""

    z: np.ndarray
    ris_index: int
    noise_scale: float   # rho * ||w_m||^2
    w_norm: float


class RankDeficientGeometryError(ValueError):
    pass


def build_bs_response_matrix(scene: SceneConfig, truth=None) -> np.ndarray:
    """N x M matrix whose columns are the BS responses toward each RIS."""
    if truth is None:
        truth = derive_truth(scene)
    A = np.column_stack([steering_upa(tr.bs_aoa, scene.bs_layout) for tr in truth])
    N, M = A.shape
    if M > N:
        raise RankDeficientGeometryError(f"need N >= M, got N={N}, M={M}")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= N * np.finfo(float).eps * sv[0]:
        # find the closest pair of columns to name the degeneracy
        corr = np.abs(A.conj().T @ A) / N
        np.fill_diagonal(corr, 0.0)
        i, j = np.unravel_index(np.argmax(corr), corr.shape)
        raise RankDeficientGeometryError(
            f"BS response matrix is rank deficient: RIS {min(i, j)} and "
            f"RIS {max(i, j)} are seen at indistinguishable angles"
        )
    return A


def zf_weights(A: np.ndarray) -> np.ndarray:
    """Minimum-norm combiners W = A (A^H A)^-1 satisfying A^H W = I."""
    G = A.conj().T @ A
    try:
        W = A @ np.linalg.inv(G)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientGeometryError("A^H A is singular") from exc
    return W


def separate(record: SoundingRecord, W: np.ndarray, noise_var: float) -> list[SeparatedObservation]:
    """Apply the ZF combiners slot-wise: z_m[t] = w_m^H y_t."""
    N, T = record.Y.shape
    if W.shape[0] != N:
        raise ValueError("combiner height does not match the observation")
    Z = W.conj().T @ record.Y  # M x T
    out = []
    for m in range(W.shape[1]):
        wn = float(np.linalg.norm(W[:, m]))
        out.append(
            SeparatedObservation(
                z=Z[m], ris_index=m, noise_scale=noise_var * wn**2, w_norm=wn
            )
        )
    return out


def balance_report(W: np.ndarray) -> tuple[list[float], float]:
    """Per-combiner norms and their max/min ratio (noise-balance diagnostic)."""
    norms = [float(np.linalg.norm(W[:, m])) for m in range(W.shape[1])]
    ratio = max(norms) / min(norms)
    return norms, ratio
