"""Sparse operator algebra on the cavity + emitters Hilbert space.

Every operator is a :class:`scipy.sparse.csr_matrix` with complex entries.
Basis ordering is cavity first, then emitter 1 ... emitter N, and each
two-level factor uses index 0 = ground, 1 = excited.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

SparseOperator = sparse.csr_matrix

CAVITY = "cavity"


class InvalidDimensionError(ValueError):
    pass


class InvalidEmbeddingError(ValueError):
    pass


def normalize(op) -> SparseOperator:
    """Return a CSR copy with duplicates summed and explicit zeros pruned."""
    out = sparse.csr_matrix(op, dtype=complex, copy=True)
    out.sum_duplicates()
    out.eliminate_zeros()
    out.sort_indices()
    return out


def from_triplets(rows, cols, values, shape) -> SparseOperator:
    """Assemble from (row, col, value) triplets; duplicate pairs are summed."""
    if shape[0] < 1 or shape[1] < 1:
        raise InvalidDimensionError(f"shape must be positive, got {shape}")
    coo = sparse.coo_matrix(
        (np.asarray(values, dtype=complex), (np.asarray(rows), np.asarray(cols))),
        shape=shape,
    )
    return normalize(coo)


def identity(n: int) -> SparseOperator:
    if n < 1:
        raise InvalidDimensionError(f"identity dimension must be >= 1, got {n}")
    return sparse.identity(n, dtype=complex, format="csr")


def fock_annihilation(n_levels: int) -> SparseOperator:
    """Truncated bosonic annihilation operator on ``n_levels`` Fock states."""
    if n_levels < 1:
        raise InvalidDimensionError(f"n_levels must be >= 1, got {n_levels}")
    m = np.arange(1, n_levels)
    return from_triplets(m - 1, m, np.sqrt(m), (n_levels, n_levels))


def two_level_lowering() -> SparseOperator:
    return from_triplets([0], [1], [1.0], (2, 2))


def dagger(op) -> SparseOperator:
    return normalize(op.conj().T)


def kron(a, b) -> SparseOperator:
    return normalize(sparse.kron(a, b, format="csr"))


@dataclass(frozen=True)
class HilbertLayout:
    """Truncated cavity (``n_max + 1`` Fock levels) times ``n_emitters`` qubits."""

    n_max: int
    n_emitters: int
    ordering: tuple = field(init=False)

    def __post_init__(self):
        if self.n_max < 0:
            raise InvalidDimensionError(f"n_max must be >= 0, got {self.n_max}")
        if self.n_emitters < 1:
            raise InvalidDimensionError(
                f"n_emitters must be >= 1, got {self.n_emitters}")
        order = (CAVITY,) + tuple(range(1, self.n_emitters + 1))
        object.__setattr__(self, "ordering", order)

    @property
    def n_levels(self) -> int:
        return self.n_max + 1

    @property
    def local_dims(self) -> tuple:
        return (self.n_levels,) + (2,) * self.n_emitters

    @property
    def dim(self) -> int:
        return self.n_levels * 2 ** self.n_emitters

    def site_index(self, site) -> int:
        if site == CAVITY or site == 0:
            return 0
        if isinstance(site, (int, np.integer)) and 1 <= site <= self.n_emitters:
            return int(site)
        raise InvalidEmbeddingError(f"unknown site {site!r}")

    @cached_property
    def photon_number(self) -> np.ndarray:
        """Photon count of each basis state."""
        return np.repeat(np.arange(self.n_levels), 2 ** self.n_emitters)

    @cached_property
    def excitation_number(self) -> np.ndarray:
        """Photons plus excited emitters for each basis state."""
        emitters = np.array(
            [bin(j).count("1") for j in range(2 ** self.n_emitters)])
        return self.photon_number + np.tile(emitters, self.n_levels)


def embed(op, site, layout: HilbertLayout) -> SparseOperator:
    """Place ``op`` on one tensor factor, identity on the others.

    ``site`` is ``"cavity"`` (or 0) for the cavity and 1..N for emitters.
    """
    k = layout.site_index(site)
    local = layout.local_dims[k]
    if op.shape != (local, local):
        raise InvalidEmbeddingError(
            f"operator shape {op.shape} does not match site {site!r} "
            f"of local dimension {local}")
    left = int(np.prod(layout.local_dims[:k], dtype=int))
    right = int(np.prod(layout.local_dims[k + 1:], dtype=int))
    out = sparse.csr_matrix(op, dtype=complex)
    if left > 1:
        out = sparse.kron(identity(left), out, format="csr")
    if right > 1:
        out = sparse.kron(out, identity(right), format="csr")
    return normalize(out)


def cavity_annihilation(layout: HilbertLayout) -> SparseOperator:
    return embed(fock_annihilation(layout.n_levels), CAVITY, layout)


def emitter_lowering(layout: HilbertLayout, i: int) -> SparseOperator:
    return embed(two_level_lowering(), i, layout)


def collective_lowering(layout: HilbertLayout) -> SparseOperator:
    """J = sum_i sigma_i."""
    total = emitter_lowering(layout, 1)
    for i in range(2, layout.n_emitters + 1):
        total = total + emitter_lowering(layout, i)
    return normalize(total)
