import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import sparse

from cavitycoop.operators import (
    CAVITY,
    HilbertLayout,
    InvalidDimensionError,
    InvalidEmbeddingError,
    collective_lowering,
    dagger,
    embed,
    emitter_lowering,
    fock_annihilation,
    from_triplets,
    identity,
    kron,
    normalize,
    two_level_lowering,
)


def random_sparse(rng, rows, cols, density=0.4):
    a = sparse.random(rows, cols, density=density, random_state=rng, dtype=float)
    b = sparse.random(rows, cols, density=density, random_state=rng, dtype=float)
    return sparse.csr_matrix(a + 1j * b)


def test_fock_annihilation_entries():
    a = fock_annihilation(3).toarray()
    expected = np.zeros((3, 3))
    expected[0, 1] = 1.0
    expected[1, 2] = np.sqrt(2)
    np.testing.assert_array_equal(a, expected)


def test_fock_single_level_is_zero():
    assert fock_annihilation(1).nnz == 0
    assert fock_annihilation(1).shape == (1, 1)


def test_number_operator():
    a = fock_annihilation(4)
    np.testing.assert_allclose((dagger(a) @ a).toarray(), np.diag([0, 1, 2, 3]))


def test_fock_rejects_zero_levels():
    with pytest.raises(InvalidDimensionError):
        fock_annihilation(0)


def test_two_level_lowering():
    s = two_level_lowering()
    excited = np.array([0, 1])
    np.testing.assert_array_equal(s @ excited, [1, 0])
    np.testing.assert_array_equal((dagger(s) @ s).toarray(), np.diag([0, 1]))
    assert (s @ s).nnz == 0


def test_dagger_raises_fock_state():
    a = fock_annihilation(5)
    ket = np.zeros(5)
    ket[2] = 1
    np.testing.assert_allclose(dagger(a) @ ket, np.sqrt(3) * np.eye(5)[3])


def test_triplets_sum_duplicates_and_prune_zeros():
    op = from_triplets([0, 0, 1], [1, 1, 0], [1.0, 2.0, 0.0], (2, 2))
    assert op.nnz == 1
    assert op[0, 1] == 3.0


def test_kron_identities():
    np.testing.assert_array_equal(kron(identity(2), identity(3)).toarray(), np.eye(6))
    a = fock_annihilation(3)
    np.testing.assert_array_equal(kron(a, identity(1)).toarray(), a.toarray())


def test_kron_against_hand_expansion():
    # a(2) = [[0,1],[0,0]], sigma = [[0,1],[0,0]]: only |0,0><1,1| survives
    k = kron(fock_annihilation(2), two_level_lowering()).toarray()
    expected = np.zeros((4, 4))
    expected[0, 3] = 1.0
    np.testing.assert_array_equal(k, expected)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))
def test_kron_mixed_product(seed, p, q, r):
    rng = np.random.default_rng(seed)
    A, C = random_sparse(rng, p, q), random_sparse(rng, q, r)
    B, D = random_sparse(rng, r, p), random_sparse(rng, p, q)
    lhs = (kron(A, B) @ kron(C, D)).toarray()
    rhs = np.kron(A.toarray() @ C.toarray(), B.toarray() @ D.toarray())
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    np.testing.assert_allclose(kron(A, B).toarray(), np.kron(A.toarray(), B.toarray()))


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_dagger_involution_and_product(seed, n):
    rng = np.random.default_rng(seed)
    A, B = random_sparse(rng, n, n), random_sparse(rng, n, n)
    np.testing.assert_array_equal(dagger(dagger(A)).toarray(), A.toarray())
    np.testing.assert_allclose(dagger(A @ B).toarray(), (dagger(B) @ dagger(A)).toarray())


def test_dagger_of_hermitian():
    h = normalize(sparse.csr_matrix(np.array([[1, 2 - 1j], [2 + 1j, -3]])))
    np.testing.assert_array_equal(dagger(h).toarray(), h.toarray())


def test_layout_dimension_and_order():
    layout = HilbertLayout(n_max=3, n_emitters=2)
    assert layout.dim == 16
    assert layout.ordering == ("cavity", 1, 2)
    with pytest.raises(AttributeError):
        layout.n_max = 4


def test_embed_cavity_small():
    layout = HilbertLayout(n_max=1, n_emitters=1)
    A = embed(fock_annihilation(2), CAVITY, layout).toarray()
    # basis index = 2 * photons + emitter state
    expected = np.zeros((4, 4))
    expected[0, 2] = 1.0
    expected[1, 3] = 1.0
    np.testing.assert_array_equal(A, expected)


def test_embedded_emitters_commute():
    layout = HilbertLayout(n_max=2, n_emitters=2)
    s1, s2 = emitter_lowering(layout, 1), emitter_lowering(layout, 2)
    assert abs(s1 @ s2 - s2 @ s1).max() == 0
    assert abs(s1 @ dagger(s2) - dagger(s2) @ s1).max() == 0


def test_embed_identity():
    layout = HilbertLayout(n_max=2, n_emitters=2)
    np.testing.assert_array_equal(embed(identity(2), 2, layout).toarray(), np.eye(12))


def test_embed_errors():
    layout = HilbertLayout(n_max=2, n_emitters=2)
    with pytest.raises(InvalidEmbeddingError):
        embed(identity(2), CAVITY, layout)
    with pytest.raises(InvalidEmbeddingError):
        embed(identity(2), 3, layout)


@pytest.mark.parametrize("site", [CAVITY, 1, 2, 3])
def test_embed_preserves_sparsity(site):
    layout = HilbertLayout(n_max=3, n_emitters=3)
    op = fock_annihilation(4) if site == CAVITY else two_level_lowering()
    other = layout.dim // op.shape[0]
    assert embed(op, site, layout).nnz == op.nnz * other


def test_collective_number_expansion():
    layout = HilbertLayout(n_max=1, n_emitters=2)
    J = collective_lowering(layout)
    s = [emitter_lowering(layout, i) for i in (1, 2)]
    expected = sum(dagger(si) @ sj for si in s for sj in s)
    np.testing.assert_allclose((dagger(J) @ J).toarray(), expected.toarray())


def test_excitation_number():
    layout = HilbertLayout(n_max=2, n_emitters=2)
    # states ordered (photons, e1, e2)
    assert list(layout.excitation_number[:4]) == [0, 1, 1, 2]
    assert list(layout.excitation_number[-4:]) == [2, 3, 3, 4]
