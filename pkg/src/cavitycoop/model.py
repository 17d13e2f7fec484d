"""Tavis-Cummings Hamiltonian and Lindblad superoperator.

Density matrices are vectorized by column stacking, so that
``vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)``.  All rates are in units of
the cavity loss rate.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .operators import (
    HilbertLayout,
    SparseOperator,
    cavity_annihilation,
    dagger,
    emitter_lowering,
    identity,
    normalize,
)


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class SystemParams:
    n_emitters: int
    g: float
    pump: float
    n_max: int
    kappa: float = 1.0
    dephasing: float = 0.0
    detunings: tuple = None

    def __post_init__(self):
        if self.detunings is None:
            object.__setattr__(self, "detunings", (0.0,) * int(self.n_emitters))
        else:
            object.__setattr__(self, "detunings",
                               tuple(float(d) for d in self.detunings))
        if int(self.n_emitters) != self.n_emitters or self.n_emitters < 1:
            raise ParameterError(f"n_emitters must be a positive integer, got {self.n_emitters}")
        for name in ("g", "pump", "dephasing"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ParameterError(f"{name} must be a finite rate >= 0, got {value}")
        if not np.isfinite(self.kappa) or self.kappa <= 0:
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")
        if len(self.detunings) != self.n_emitters:
            raise ParameterError(
                f"detunings has {len(self.detunings)} entries for {self.n_emitters} emitters")
        if not all(np.isfinite(self.detunings)):
            raise ParameterError("detunings must be finite")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError(f"n_max must be an integer >= 1, got {self.n_max}")

    @property
    def gamma_purcell(self) -> float:
        """Single-emitter relaxation rate 4 g^2 / kappa in the bad-cavity limit."""
        return 4.0 * self.g ** 2 / self.kappa

    def layout(self) -> HilbertLayout:
        return HilbertLayout(n_max=int(self.n_max), n_emitters=int(self.n_emitters))

    def replace(self, **changes) -> "SystemParams":
        if "n_emitters" in changes and "detunings" not in changes:
            changes["detunings"] = None
        return dataclasses.replace(self, **changes)

    def single_emitter(self, i: int) -> "SystemParams":
        """The one-emitter system for emitter ``i`` (0-based) in its own cavity."""
        return dataclasses.replace(self, n_emitters=1, detunings=(self.detunings[i],))

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["detunings"] = list(self.detunings)
        return d


def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v) -> np.ndarray:
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d, order="F")


def build_hamiltonian(params: SystemParams, layout: HilbertLayout) -> SparseOperator:
    """H = sum_i [delta_i s_i^+ s_i + g (s_i^+ a + s_i a^+)] in the cavity frame."""
    if layout.n_emitters != params.n_emitters:
        raise ParameterError("layout and params disagree on the number of emitters")
    a = cavity_annihilation(layout)
    ad = dagger(a)
    h = sparse.csr_matrix((layout.dim, layout.dim), dtype=complex)
    for i, delta in enumerate(params.detunings, start=1):
        s = emitter_lowering(layout, i)
        sd = dagger(s)
        h = h + delta * (sd @ s) + params.g * (sd @ a + s @ ad)
    return normalize(h)


def build_dissipator(x, rate: float) -> SparseOperator:
    """Column-stacked superoperator of rate * (x rho x^+ - {x^+ x, rho}/2)."""
    d = x.shape[0]
    if rate == 0:
        return sparse.csr_matrix((d * d, d * d), dtype=complex)
    x = sparse.csr_matrix(x, dtype=complex)
    xdx = x.conj().T @ x
    eye = identity(d)
    out = (sparse.kron(x.conj(), x)
           - 0.5 * sparse.kron(eye, xdx)
           - 0.5 * sparse.kron(xdx.T, eye))
    return normalize(rate * out)


def commutator_superoperator(h) -> SparseOperator:
    """-i [H, .] in column-stacked form."""
    eye = identity(h.shape[0])
    return normalize(-1j * (sparse.kron(eye, h) - sparse.kron(h.T, eye)))


@dataclass
class Liouvillian:
    matrix: SparseOperator
    layout: HilbertLayout
    params: SystemParams
    _sectors: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def sector_indices(self, charge: int) -> np.ndarray:
        """Indices of vec(rho) entries |m><n| with exc(m) - exc(n) == charge.

        Sorted by the excitation number of the ket, which keeps the sparse
        LU fill-in of the sector block small.
        """
        exc = self.layout.excitation_number
        d = self.layout.dim
        ket = np.tile(np.arange(d), d)
        bra = np.repeat(np.arange(d), d)
        idx = np.flatnonzero(exc[ket] - exc[bra] == charge)
        return idx[np.argsort(exc[ket[idx]], kind="stable")]

    def sector(self, charge: int):
        """(indices, block) of the Liouvillian restricted to one U(1) sector.

        The incoherently driven model conserves the excitation-number
        difference between ket and bra, so each block is an exact invariant
        subspace of the full matrix.
        """
        if charge not in self._sectors:
            idx = self.sector_indices(charge)
            block = self.matrix[idx][:, idx].tocsc()
            self._sectors[charge] = (idx, block)
        return self._sectors[charge]


def build_liouvillian(params: SystemParams, layout: HilbertLayout = None) -> Liouvillian:
    layout = layout or params.layout()
    h = build_hamiltonian(params, layout)
    a = cavity_annihilation(layout)
    total = commutator_superoperator(h) + build_dissipator(a, params.kappa)
    for i in range(1, layout.n_emitters + 1):
        s = emitter_lowering(layout, i)
        total = total + build_dissipator(dagger(s), params.pump)
        if params.dephasing:
            total = total + build_dissipator(dagger(s) @ s, params.dephasing)
    return Liouvillian(matrix=normalize(total), layout=layout, params=params)


@dataclass
class DensityMatrix:
    vec: np.ndarray
    layout: HilbertLayout

    @classmethod
    def from_matrix(cls, rho, layout: HilbertLayout) -> "DensityMatrix":
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (layout.dim, layout.dim):
            raise ValueError(f"matrix shape {rho.shape} does not match dimension {layout.dim}")
        return cls(vec=vec(rho).copy(), layout=layout)

    @property
    def matrix(self) -> np.ndarray:
        return unvec(self.vec)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m - m.conj().T)))

    def min_eigenvalue(self) -> float:
        m = self.matrix
        return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])

    def photon_distribution(self) -> np.ndarray:
        diag = np.real(np.diag(self.matrix))
        return diag.reshape(self.layout.n_levels, -1).sum(axis=1)

    def normalized(self) -> "DensityMatrix":
        m = self.matrix
        m = 0.5 * (m + m.conj().T)
        m = m / np.trace(m).real
        return DensityMatrix(vec=vec(m).copy(), layout=self.layout)


def trace_functional(dim: int) -> np.ndarray:
    """vec(I), so that vec(I)^+ vec(rho) = tr(rho)."""
    return vec(np.eye(dim, dtype=complex))
