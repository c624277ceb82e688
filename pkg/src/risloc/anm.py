"""Atomic-norm machinery for the single-atom recovery problem.

The sparse vector lives on an L_a x L_z grid of 2D complex exponentials.  Its
atomic norm is characterized by an SDP with a 2-level Toeplitz matrix in the
PSD block constraint; we solve the regularized recovery problem with an
ADMM-style splitting whose only non-closed-form step is the projection onto
the PSD cone of the (L+1) x (L+1) block matrix.  An exact interior-point
reference path (cvxpy) is provided for small instances and used as the test
oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve


@lru_cache(maxsize=32)
def _lag_index(layout: tuple[int, int]):
    """Entry -> flattened 2-level-lag index map for an L x L matrix, plus the
    number of matrix entries sharing each lag."""
    la, lz = layout
    ka = np.subtract.outer(np.arange(la), np.arange(la)) + (la - 1)   # la x la
    kz = np.subtract.outer(np.arange(lz), np.arange(lz)) + (lz - 1)   # lz x lz
    ia = np.repeat(np.repeat(ka, lz, axis=0), lz, axis=1)
    iz = np.tile(kz, (la, la))
    flat = (ia * (2 * lz - 1) + iz).astype(np.intp)
    n_lags = (2 * la - 1) * (2 * lz - 1)
    counts = np.bincount(flat.ravel(), minlength=n_lags).astype(float)
    return flat, counts


@dataclass(frozen=True)
class Toeplitz2Params:
    """Lag tensor U(k_a, k_z) stored as a (2 L_a - 1) x (2 L_z - 1) array with
    the zero lag at the center and U(-k_a, -k_z) = conj(U(k_a, k_z))."""

    lags: np.ndarray
    layout: tuple[int, int]

    def __post_init__(self):
        la, lz = self.layout
        if self.lags.shape != (2 * la - 1, 2 * lz - 1):
            raise ValueError("lag tensor shape does not match the layout")

    def symmetry_error(self) -> float:
        return float(np.max(np.abs(self.lags - np.conj(self.lags[::-1, ::-1]))))

    @property
    def zero_lag(self) -> complex:
        la, lz = self.layout
        return complex(self.lags[la - 1, lz - 1])


def toeplitz2_assemble(params: Toeplitz2Params, layout: tuple[int, int]) -> np.ndarray:
    """Hermitian L x L 2-level Toeplitz matrix from its lag tensor."""
    if params.symmetry_error() > 1e-10 * (1.0 + np.max(np.abs(params.lags))):
        raise ValueError("lag tensor violates conjugate-lag symmetry")
    flat, _ = _lag_index(layout)
    return params.lags.ravel()[flat]


def toeplitz2_adjoint(X: np.ndarray, layout: tuple[int, int]) -> Toeplitz2Params:
    """Adjoint of assembly: sums the entries of X sharing each 2-level lag,
    so that <Toep(U), X> = <U, toeplitz2_adjoint(X)> with the plain (unweighted)
    Frobenius inner product on lag tensors."""
    la, lz = layout
    flat, _ = _lag_index(layout)
    n_lags = (2 * la - 1) * (2 * lz - 1)
    Xc = np.asarray(X)
    sums = np.bincount(flat.ravel(), weights=Xc.real.ravel(), minlength=n_lags) + 1j * np.bincount(
        flat.ravel(), weights=Xc.imag.ravel(), minlength=n_lags
    )
    return Toeplitz2Params(lags=sums.reshape(2 * la - 1, 2 * lz - 1), layout=layout)


def lag_counts(layout: tuple[int, int]) -> np.ndarray:
    _, counts = _lag_index(layout)
    la, lz = layout
    return counts.reshape(2 * la - 1, 2 * lz - 1)


def regularization_weight(rho: float, w_norm: float, L: int, c0: float = 1.0) -> float:
    """Penalty weight c0 * sqrt(rho) * ||w|| * sqrt(L log L)."""
    if rho < 0 or w_norm <= 0:
        raise ValueError("noise variance must be >= 0 and the combiner norm > 0")
    if L < 2:
        raise ValueError("L must be >= 2")
    return c0 * np.sqrt(rho) * w_norm * np.sqrt(L * np.log(L))


@dataclass
class SolverOptions:
    max_iterations: int = 5000
    eps_abs: float = 1e-6
    eps_rel: float = 1e-5
    penalty: float = 1.0
    adapt_factor: float = 2.0
    adapt_ratio: float = 10.0
    adapt_every: int = 25
    check_every: int = 10
    verbose: bool = False

    def __post_init__(self):
        if self.eps_abs <= 0 or self.eps_rel <= 0 or self.penalty <= 0:
            raise ValueError("tolerances and penalty must be positive")


@dataclass
class AnmSolution:
    h_hat: np.ndarray
    U_hat: Toeplitz2Params
    t_hat: float
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    merit_history: list = field(default_factory=list, repr=False)

    def psd_block(self) -> np.ndarray:
        L = self.h_hat.size
        G = np.zeros((L + 1, L + 1), dtype=complex)
        G[:L, :L] = toeplitz2_assemble(self.U_hat, self.U_hat.layout)
        G[:L, L] = self.h_hat
        G[L, :L] = np.conj(self.h_hat)
        G[L, L] = self.t_hat
        return G


def _objective(h, u_lags, t, mus, B, zs, layout):
    la, lz = layout
    tr = (la * lz) * u_lags[la - 1, lz - 1].real
    fit = 0.5 * float(np.linalg.norm(zs - B @ h) ** 2)
    return mus * (tr / (2.0 * la * lz) + t / 2.0) + fit


def solve_anm(z, omega: np.ndarray, power: float, mu: float, layout: tuple[int, int],
              opts: SolverOptions | None = None) -> AnmSolution:
    """Solve the regularized atomic-norm recovery problem

        min  mu * (Tr(Toep(U))/(2L) + t/2) + 1/2 ||z - sqrt(P) Omega^T h||^2
        s.t. [[Toep(U), h], [h^H, t]] >= 0

    by ADMM splitting with a consensus PSD variable.  The problem is solved in
    units normalized by ||z|| (the problem is jointly 1-homogeneous in
    (z, mu) -> (h, U, t)) and rescaled on return.
    """
    if opts is None:
        opts = SolverOptions()
    z = np.asarray(getattr(z, "z", z), dtype=complex).ravel()
    la, lz = layout
    L = la * lz
    if omega.shape[0] != L or omega.shape[1] != z.size:
        raise ValueError("profile matrix dimensions inconsistent with z and layout")
    if mu < 0:
        raise ValueError("mu must be >= 0")

    scale = float(np.linalg.norm(z))
    if scale == 0.0:
        scale = 1.0
    zs = z / scale
    mus = mu / scale
    B = np.sqrt(power) * omega.T                       # T x L
    BhB = B.conj().T @ B
    Bhz = B.conj().T @ zs

    flat, counts = _lag_index(layout)
    n_lags = counts.size
    center = (la - 1) * (2 * lz - 1) + (lz - 1)
    flat_ravel = flat.ravel()

    tau = opts.penalty
    eye = np.eye(L)
    cho = cho_factor(BhB + 2.0 * tau * eye)

    Z = np.zeros((L + 1, L + 1), dtype=complex)
    Lam = np.zeros_like(Z)
    G = np.zeros_like(Z)
    h = np.zeros(L, dtype=complex)
    u = np.zeros(n_lags, dtype=complex)
    t_val = 0.0

    best = None   # (merit, h, u, t)
    merit_history: list[float] = []
    r_pri = r_dual = np.inf
    converged = False
    it = 0

    for it in range(1, opts.max_iterations + 1):
        Mmat = Z + Lam / tau
        # x-update: closed-form per component against the relevant blocks of Mmat
        zeta = 0.5 * (Mmat[:L, L] + np.conj(Mmat[L, :L]))
        t_val = Mmat[L, L].real - mus / (2.0 * tau)
        blk = Mmat[:L, :L]
        sums = np.bincount(flat_ravel, weights=blk.real.ravel(), minlength=n_lags) + 1j * np.bincount(
            flat_ravel, weights=blk.imag.ravel(), minlength=n_lags
        )
        u = sums / counts
        u[center] = u[center].real - mus / (2.0 * tau * L)
        u = 0.5 * (u + np.conj(u[::-1]))               # enforce conjugate-lag symmetry
        h = cho_solve(cho, Bhz + 2.0 * tau * zeta)

        G[:L, :L] = u[flat]
        G[:L, L] = h
        G[L, :L] = np.conj(h)
        G[L, L] = t_val

        # Z-update: projection onto the PSD cone
        V = G - Lam / tau
        V = 0.5 * (V + V.conj().T)
        w, Q = np.linalg.eigh(V)
        Zn = (Q * np.clip(w, 0.0, None)) @ Q.conj().T

        r_pri = float(np.linalg.norm(Zn - G))
        r_dual = float(tau * np.linalg.norm(Zn - Z))
        Z = Zn
        Lam = Lam + tau * (Z - G)

        if it % opts.check_every == 0 or it == 1:
            # merit: objective of the PSD-polished iterate (feasible upper bound)
            lam_min = float(np.linalg.eigvalsh(0.5 * (G + G.conj().T))[0])
            shift = max(0.0, -lam_min)
            merit = _objective(h, u.reshape(2 * la - 1, 2 * lz - 1), t_val, mus, B, zs, layout) + mus * shift
            if best is None or merit < best[0]:
                best = (merit, h.copy(), u.copy(), t_val, shift)
            merit_history.append(best[0])

        eps_pri = (L + 1) * opts.eps_abs + opts.eps_rel * max(np.linalg.norm(G), np.linalg.norm(Z))
        eps_dual = (L + 1) * opts.eps_abs + opts.eps_rel * np.linalg.norm(Lam)
        if r_pri <= eps_pri and r_dual <= eps_dual:
            converged = True
            break

        if it % opts.adapt_every == 0:
            if r_pri > opts.adapt_ratio * r_dual:
                tau *= opts.adapt_factor
                cho = cho_factor(BhB + 2.0 * tau * eye)
            elif r_dual > opts.adapt_ratio * r_pri:
                tau /= opts.adapt_factor
                cho = cho_factor(BhB + 2.0 * tau * eye)

    # final candidate, PSD-polished, compared against the best recorded iterate
    lam_min = float(np.linalg.eigvalsh(0.5 * (G + G.conj().T))[0])
    shift = max(0.0, -lam_min)
    merit = _objective(h, u.reshape(2 * la - 1, 2 * lz - 1), t_val, mus, B, zs, layout) + mus * shift
    if best is not None and best[0] < merit:
        merit, h, u, t_val, shift = best
    merit_history.append(merit)

    u2 = u.reshape(2 * la - 1, 2 * lz - 1).copy()
    u2[la - 1, lz - 1] += shift
    t_out = t_val + shift

    h_out = scale * h
    params = Toeplitz2Params(lags=scale * u2, layout=layout)
    objective = scale**2 * _objective(h, u2, t_out, mus, B, zs, layout)
    return AnmSolution(
        h_hat=h_out,
        U_hat=params,
        t_hat=scale * t_out,
        objective=float(objective),
        iterations=it,
        primal_residual=r_pri,
        dual_residual=r_dual,
        converged=converged,
        merit_history=[scale**2 * m for m in merit_history],
    )


# ---------------------------------------------------------------------------
# exact SDP reference path (small instances, test oracle)

_MAX_EXACT_L = 36


def _toeplitz_expr(layout: tuple[int, int]):
    import cvxpy as cp

    la, lz = layout
    n_lags = (2 * la - 1) * (2 * lz - 1)
    flat, _ = _lag_index(layout)
    u = cp.Variable(n_lags, complex=True)
    sym = [u == cp.conj(u[::-1])]   # flat reversal == reversing both lag axes
    Tmat = cp.reshape(u[flat.ravel()], (la * lz, la * lz), order="C")
    return u, Tmat, sym


def atomic_norm_exact(h: np.ndarray, layout: tuple[int, int]) -> float:
    """Atomic norm of h by the exact SDP characterization (interior point)."""
    import cvxpy as cp

    la, lz = layout
    L = la * lz
    if L > _MAX_EXACT_L:
        raise ValueError(f"exact path limited to L <= {_MAX_EXACT_L}")
    h = np.asarray(h, dtype=complex).ravel()
    if h.size != L:
        raise ValueError("h length does not match the layout")
    nrm = float(np.linalg.norm(h))
    if nrm == 0.0:
        return 0.0
    hs = h / nrm

    u, Tmat, sym = _toeplitz_expr(layout)
    t = cp.Variable(nonneg=True)
    col = cp.Constant(hs.reshape(L, 1))
    G = cp.bmat([[Tmat, col], [col.H, cp.reshape(t, (1, 1), order="C")]])
    G = (G + G.H) / 2
    prob = cp.Problem(
        cp.Minimize(cp.real(cp.trace(Tmat)) / (2 * L) + t / 2),
        sym + [G >> 0],
    )
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"reference SDP failed: {prob.status}")
    return float(nrm * prob.value)


def solve_anm_reference(z, omega: np.ndarray, power: float, mu: float,
                        layout: tuple[int, int]) -> tuple[np.ndarray, float]:
    """Interior-point solution of the regularized problem (small instances).

    Returns (h, objective).  Used as the independent oracle for solve_anm.
    """
    import cvxpy as cp

    z = np.asarray(getattr(z, "z", z), dtype=complex).ravel()
    la, lz = layout
    L = la * lz
    if L > _MAX_EXACT_L:
        raise ValueError(f"exact path limited to L <= {_MAX_EXACT_L}")
    scale = float(np.linalg.norm(z))
    if scale == 0.0:
        scale = 1.0
    zs = z / scale
    mus = mu / scale
    B = np.sqrt(power) * omega.T

    u, Tmat, sym = _toeplitz_expr(layout)
    t = cp.Variable(nonneg=True)
    h = cp.Variable(L, complex=True)
    col = cp.reshape(h, (L, 1), order="C")
    G = cp.bmat([[Tmat, col], [col.H, cp.reshape(t, (1, 1), order="C")]])
    G = (G + G.H) / 2
    obj = mus * (cp.real(cp.trace(Tmat)) / (2 * L) + t / 2) + 0.5 * cp.sum_squares(zs - B @ h)
    prob = cp.Problem(cp.Minimize(obj), sym + [G >> 0])
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"reference SDP failed: {prob.status}")
    return scale * np.asarray(h.value).ravel(), float(scale**2 * prob.value)
