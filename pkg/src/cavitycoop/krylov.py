"""Krylov-subspace action of exp(L t) on a vector.

The Arnoldi basis is built with modified Gram-Schmidt; the small upper
Hessenberg projection is diagonalised and the propagated vector is
reassembled as ``V [U exp(D t) U^-1] [V^+ v]``.  Steps whose residual
estimate exceeds the tolerance are halved.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import DensityMatrix, Liouvillian

DEFAULT_KRYLOV_DIM = 20
DEFAULT_STEP_TOL = 1e-9
BREAKDOWN_TOL = 1e-14
# Beyond this condition number of the Hessenberg eigenbasis the dense
# scaling-and-squaring exponential is used instead.
MAX_EIGENBASIS_COND = 1e6
MAX_HALVINGS = 60


def _as_matrix(L):
    return L.matrix if isinstance(L, Liouvillian) else L


@dataclass
class KrylovBasis:
    """Orthonormal Krylov basis with its Hessenberg projection.

    ``h_next`` and ``v_next`` are the coupling to and the direction of the
    next (unused) Arnoldi vector; ``h_next == 0`` after a happy breakdown.
    """

    V: np.ndarray
    H_small: np.ndarray
    beta: float
    h_next: float
    v_next: np.ndarray

    @property
    def m(self) -> int:
        return self.H_small.shape[0]

    @property
    def breakdown(self) -> bool:
        return self.h_next == 0.0

    def exp_coefficients(self, times) -> np.ndarray:
        """Columns exp(H_small t) e_1 for each t, shape (m, len(times))."""
        return small_expm_e1(self.H_small, np.atleast_1d(np.asarray(times, dtype=float)))

    def error_estimate(self, t: float) -> float:
        """Residual surrogate beta * h_{m+1,m} * |[exp(H t) e_1]_m|."""
        if self.breakdown:
            return 0.0
        y = self.exp_coefficients([t])[:, 0]
        return float(self.beta * self.h_next * abs(y[-1]))


def arnoldi(L, v0, m: int = DEFAULT_KRYLOV_DIM) -> KrylovBasis:
    """Arnoldi factorisation L V = V H + h v_next e_m^T via modified Gram-Schmidt.

    A second orthogonalisation pass runs whenever the candidate vector loses
    more than ~30% of its norm, which keeps V^+ V = I at working precision.
    """
    A = _as_matrix(L)
    v0 = np.asarray(v0, dtype=complex).ravel()
    if m < 1:
        raise ValueError(f"Krylov dimension must be >= 1, got {m}")
    beta = float(np.linalg.norm(v0))
    if beta == 0.0:
        raise ValueError("cannot build a Krylov basis from a zero vector")
    n = v0.size
    m = min(m, n)
    V = np.zeros((n, m), dtype=complex)
    H = np.zeros((m, m), dtype=complex)
    V[:, 0] = v0 / beta
    scale = 0.0
    for j in range(m):
        w = np.asarray(A @ V[:, j]).ravel()
        norm_in = np.linalg.norm(w)
        for i in range(j + 1):
            h = np.vdot(V[:, i], w)
            H[i, j] = h
            w = w - h * V[:, i]
        if np.linalg.norm(w) < 0.7 * norm_in:
            for i in range(j + 1):
                h = np.vdot(V[:, i], w)
                H[i, j] += h
                w = w - h * V[:, i]
        h_sub = float(np.linalg.norm(w))
        scale = max(scale, float(np.max(np.abs(H[: j + 1, j]), initial=0.0)), h_sub)
        if h_sub <= BREAKDOWN_TOL * max(1.0, scale):
            k = j + 1
            return KrylovBasis(V[:, :k].copy(), H[:k, :k].copy(), beta, 0.0,
                               np.zeros(n, dtype=complex))
        if j + 1 < m:
            H[j + 1, j] = h_sub
            V[:, j + 1] = w / h_sub
        else:
            return KrylovBasis(V, H, beta, h_sub, w / h_sub)
    raise AssertionError("unreachable")


def small_expm_e1(H: np.ndarray, times: np.ndarray) -> np.ndarray:
    """exp(H t) e_1 for every t, through the eigendecomposition H = U D U^-1.

    Falls back to dense scaling-and-squaring when the eigenbasis is too
    ill-conditioned (defective or nearly defective H).
    """
    m = H.shape[0]
    e1 = np.zeros(m, dtype=complex)
    e1[0] = 1.0
    w, U = np.linalg.eig(H)
    if np.linalg.cond(U) <= MAX_EIGENBASIS_COND:
        c = np.linalg.solve(U, e1)
        return U @ (np.exp(np.outer(w, times)) * c[:, None])
    return np.stack([scipy.linalg.expm(H * t)[:, 0] for t in times], axis=1)


def _accepted_step(basis: KrylovBasis, dt: float, tol: float) -> float:
    """Largest dt / 2**k whose residual estimate passes ``tol * beta``."""
    step = dt
    for _ in range(MAX_HALVINGS):
        if basis.error_estimate(step) <= tol * basis.beta:
            return step
        step *= 0.5
    raise RuntimeError("Krylov step size underflow; the operator norm is too large")


def expm_apply(L, v, dt: float, m: int = DEFAULT_KRYLOV_DIM,
               tol: float = DEFAULT_STEP_TOL) -> np.ndarray:
    """Approximate exp(L dt) v."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    v = np.asarray(v, dtype=complex).ravel()
    if dt == 0 or not np.any(v):
        return v.copy()
    t = 0.0
    while t < dt:
        basis = arnoldi(L, v, m)
        step = _accepted_step(basis, dt - t, tol)
        y = basis.exp_coefficients([step])[:, 0]
        v = basis.beta * (basis.V @ y)
        t = dt if step == dt - t else t + step
    return v


def propagate(L, v0, t_grid, m: int = DEFAULT_KRYLOV_DIM,
              tol: float = DEFAULT_STEP_TOL, functional=None,
              return_state: bool = False):
    """Evaluate exp(L t) v0 on an ascending grid of times t >= 0.

    With ``functional`` (a vector f) only the scalars f^+ exp(L t) v0 are
    returned; each accepted Krylov step then covers all grid points inside
    it at the cost of m-dimensional products.  Step sizes grow by doubling
    after every accepted step and shrink by halving on rejection.

    With ``return_state`` the vector at the last grid time is returned too,
    so a longer horizon can be continued without starting over.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a nonempty 1-D array")
    if t_grid[0] < 0 or np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be ascending and start at t >= 0")
    v = np.asarray(v0, dtype=complex).ravel().copy()
    f = None if functional is None else np.asarray(functional, dtype=complex).ravel()
    out = (np.zeros(t_grid.size, dtype=complex) if f is not None
           else np.zeros((t_grid.size, v.size), dtype=complex))

    t, k = 0.0, 0
    while k < t_grid.size and t_grid[k] == t:
        out[k] = np.vdot(f, v) if f is not None else v
        k += 1
    t_end = t_grid[-1]
    trial = t_end - t
    while k < t_grid.size:
        if not np.any(v):
            break
        basis = arnoldi(L, v, m)
        step = _accepted_step(basis, min(trial, t_end - t), tol)
        if basis.breakdown:
            step = t_end - t
        t_next = t_end if step >= t_end - t else t + step
        stop = int(np.searchsorted(t_grid, t_next, side="right"))
        if stop > k:
            y = basis.beta * basis.exp_coefficients(t_grid[k:stop] - t)
            if f is not None:
                out[k:stop] = (np.conj(f) @ basis.V) @ y
            else:
                out[k:stop] = (basis.V @ y).T
            k = stop
        if k < t_grid.size or return_state:
            v = basis.beta * (basis.V @ basis.exp_coefficients([t_next - t])[:, 0])
        t = t_next
        trial = 2.0 * step
    if return_state:
        return out, v
    return out


def propagate_density(rho: DensityMatrix, L: Liouvillian, t_grid,
                      m: int = DEFAULT_KRYLOV_DIM,
                      tol: float = DEFAULT_STEP_TOL) -> list:
    """Density matrices exp(L t) rho for each t in ``t_grid``."""
    vecs = propagate(L, rho.vec, t_grid, m=m, tol=tol)
    return [DensityMatrix(vec=row.copy(), layout=rho.layout) for row in vecs]
