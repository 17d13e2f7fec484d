import numpy as np
import pytest
import scipy.linalg
from hypothesis import example, given, settings, strategies as st
from scipy import sparse

from cavitycoop.krylov import arnoldi, expm_apply, propagate, propagate_density
from cavitycoop.model import (
    DensityMatrix,
    Liouvillian,
    SystemParams,
    build_liouvillian,
    commutator_superoperator,
    build_hamiltonian,
    trace_functional,
    vec,
)
from cavitycoop.observables import layout_operators
from cavitycoop.steady_state import solve_steady

from conftest import small_params


def random_liouvillian(seed, max_dim=20):
    rng = np.random.default_rng(seed)
    while True:
        n = int(rng.integers(1, 3))
        n_max = int(rng.integers(1, 9))
        if (n_max + 1) * 2 ** n <= max_dim:
            break
    p = SystemParams(n_emitters=n, g=float(rng.uniform(0, 2)), pump=float(rng.uniform(0.05, 2)),
                     n_max=n_max, kappa=float(rng.uniform(0.3, 2)),
                     dephasing=float(rng.uniform(0, 1)), detunings=tuple(rng.uniform(-2, 2, n)))
    L = build_liouvillian(p)
    d = L.layout.dim
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    return L, vec(rho / np.trace(rho))


def test_arnoldi_eigenvector_breakdown():
    A = sparse.diags([1.0, -2.0, 3.0]).tocsr()
    basis = arnoldi(A, np.array([0, 1.0, 0]), 5)
    assert basis.breakdown
    assert basis.m == 1
    assert basis.H_small[0, 0] == pytest.approx(-2.0)


def test_arnoldi_nilpotent_closure():
    q = 4
    A = sparse.diags([np.ones(q - 1)], [1], shape=(q, q)).tocsr()
    v = np.ones(q)
    basis = arnoldi(A, v, 10)
    assert basis.breakdown and basis.m == q
    for t in (0.5, 3.0):
        exact = scipy.linalg.expm(A.toarray() * t) @ v
        np.testing.assert_allclose(expm_apply(A, v, t, m=10), exact, rtol=1e-13, atol=1e-13)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_arnoldi_orthogonality_and_structure(seed):
    L, v = random_liouvillian(seed)
    basis = arnoldi(L, v, 20)
    V, H = basis.V, basis.H_small
    assert np.max(np.abs(V.conj().T @ V - np.eye(basis.m))) <= 1e-10
    assert np.all(np.tril(H, -2) == 0)
    np.testing.assert_allclose(V.conj().T @ (L.matrix @ V), H, atol=1e-8)


def test_zero_vector_rejected():
    with pytest.raises(ValueError):
        arnoldi(sparse.identity(3).tocsr(), np.zeros(3), 2)


def test_trivial_cases():
    L, v = random_liouvillian(3)
    np.testing.assert_array_equal(expm_apply(L, v, 0.0), v)
    zero = sparse.csr_matrix(L.matrix.shape, dtype=complex)
    for dt in (0.1, 10.0, 1e4):
        np.testing.assert_allclose(expm_apply(zero, v, dt), v, rtol=1e-15)
    with pytest.raises(ValueError):
        expm_apply(L, v, -1.0)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 1.0, 10.0]))
def test_matches_dense_expm(seed, dt):
    L, v = random_liouvillian(seed)
    exact = scipy.linalg.expm(L.matrix.toarray() * dt) @ v
    approx = expm_apply(L, v, dt)
    assert np.linalg.norm(approx - exact) <= 1e-8 * np.linalg.norm(exact)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 5.0), st.floats(0.01, 5.0))
def test_semigroup(seed, t1, t2):
    L, v = random_liouvillian(seed)
    joint = expm_apply(L, v, t1 + t2)
    split = expm_apply(L, expm_apply(L, v, t1), t2)
    assert np.linalg.norm(joint - split) <= 1e-7 * np.linalg.norm(joint)


def test_smaller_steps_do_not_increase_error():
    L, v = random_liouvillian(11)
    t = 2.0
    exact = scipy.linalg.expm(L.matrix.toarray() * t) @ v
    errors = []
    for k in (1, 2, 4, 8, 16):
        w = v
        for _ in range(k):
            w = expm_apply(L, w, t / k, m=6, tol=np.inf)
        errors.append(np.linalg.norm(w - exact))
    assert all(b <= a * (1 + 1e-6) + 1e-15 for a, b in zip(errors, errors[1:]))


def test_krylov_exact_on_small_invariant_subspace():
    L, v = random_liouvillian(5, max_dim=4)
    assert L.dim <= 16
    exact = scipy.linalg.expm(L.matrix.toarray() * 3.0) @ v
    np.testing.assert_allclose(expm_apply(L, v, 3.0, m=20), exact, atol=1e-12)


def test_propagate_functional_matches_vectors():
    L, v = random_liouvillian(8)
    grid = np.linspace(0, 4, 41)
    f = np.random.default_rng(0).normal(size=v.size)
    full = propagate(L, v, grid)
    scalars = propagate(L, v, grid, functional=f)
    np.testing.assert_allclose(scalars, full @ f.conj(), atol=1e-9)


def test_steady_state_is_fixed_point():
    p = SystemParams(n_emitters=2, g=0.8, pump=0.5, n_max=4)
    L = build_liouvillian(p)
    rho = solve_steady(L).rho
    for out in propagate_density(rho, L, [1.0, 10.0, 50.0]):
        np.testing.assert_allclose(out.vec, rho.vec, atol=1e-8)


def test_pumped_emitter_population():
    p = SystemParams(n_emitters=1, g=0.0, pump=0.7, n_max=1)
    L = build_liouvillian(p)
    start = np.zeros((4, 4))
    start[0, 0] = 1.0  # vacuum, ground
    grid = np.linspace(0, 6, 31)
    inversion = layout_operators(L.layout)["inversion"].toarray()
    for t, rho in zip(grid, propagate_density(DensityMatrix.from_matrix(start, L.layout), L, grid)):
        assert np.trace(inversion @ rho.matrix).real == pytest.approx(1 - np.exp(-0.7 * t), abs=1e-6)


def test_vacuum_rabi_oscillation():
    p = SystemParams(n_emitters=1, g=0.9, pump=0.0, n_max=2)
    layout = p.layout()
    L = Liouvillian(commutator_superoperator(build_hamiltonian(p, layout)), layout, p)
    start = np.zeros((layout.dim, layout.dim))
    start[1, 1] = 1.0  # |0, e>
    grid = np.linspace(0, 10, 101)
    number = layout_operators(layout)["number"].toarray()
    for t, rho in zip(grid, propagate_density(DensityMatrix.from_matrix(start, layout), L, grid)):
        assert np.trace(number @ rho.matrix).real == pytest.approx(np.sin(0.9 * t) ** 2, abs=1e-6)


@settings(max_examples=15)
@given(small_params(max_dim=24))
@example(SystemParams(n_emitters=2, g=0.0, pump=1.75, n_max=1, detunings=(1.0, 0.875)))
def test_trace_and_hermiticity_conserved(p):
    L = build_liouvillian(p)
    d = L.layout.dim
    rng = np.random.default_rng(2)
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = DensityMatrix.from_matrix(x @ x.conj().T / np.trace(x @ x.conj().T), L.layout)
    t = trace_functional(d)
    # conservation is checked below the default step tolerance of 1e-9
    for out in propagate_density(rho, L, np.linspace(0, 20, 21), tol=1e-11):
        assert abs(np.vdot(t, out.vec) - 1) <= 1e-10
        assert out.hermiticity_error() <= 1e-9
