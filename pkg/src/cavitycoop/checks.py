"""Physics invariants evaluated on every solved parameter point."""
from __future__ import annotations

import numpy as np

from .model import Liouvillian, build_hamiltonian, trace_functional, unvec, vec


def random_density_pair(dim: int, seed: int = 0):
    """A random Hermitian matrix and a random non-Hermitian one."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (x + x.conj().T), x


def liouvillian_checks(L: Liouvillian, seed: int = 0) -> dict:
    d = L.layout.dim
    H = build_hamiltonian(L.params, L.layout)
    t = trace_functional(d)
    left = np.asarray(L.matrix.conj().T @ t).ravel()
    herm, general = random_density_pair(d, seed)
    out = {}
    out["hamiltonian_hermiticity"] = float(abs(H - H.conj().T).max()) if H.nnz else 0.0
    out["liouvillian_trace_residual"] = float(np.max(np.abs(left)))
    worst_h = 0.0
    worst_t = 0.0
    for x in (herm, general):
        image = unvec(L.matrix @ vec(x))
        image_adj = unvec(L.matrix @ vec(x.conj().T))
        scale = max(1.0, float(np.max(np.abs(image))))
        worst_h = max(worst_h, float(np.max(np.abs(image - image_adj.conj().T))) / scale)
        worst_t = max(worst_t, abs(np.trace(image)) / scale)
    out["hermiticity_preservation"] = worst_h
    out["trace_preservation"] = worst_t
    return out
