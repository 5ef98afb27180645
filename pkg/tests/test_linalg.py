import itertools

import numpy as np
import pytest

from procmat.linalg import (
    CMatrix,
    PartyLayout,
    Permutation,
    apply_lab_permutation,
    eye,
    hs_basis,
    hs_compose,
    hs_decompose,
    kron,
    kron_all,
    min_eigenvalue,
    partial_trace,
    permutation_unitary,
    reorder_factors,
)
from support import random_hermitian

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


def cm(arr, factors):
    return CMatrix(np.asarray(arr), factors)


# ---------------------------------------------------------------------------
# CMatrix and kron
# ---------------------------------------------------------------------------


def test_cmatrix_rejects_bad_factors():
    with pytest.raises(ValueError):
        CMatrix(np.eye(4), (2, 3))


def test_cmatrix_rejects_nonfinite():
    bad = np.eye(2, dtype=complex)
    bad[0, 1] = np.nan
    with pytest.raises(ValueError):
        CMatrix(bad, (2,))


def test_cmatrix_is_immutable():
    m = eye((2, 2))
    with pytest.raises(ValueError):
        m.mat[0, 0] = 5.0


def test_kron_identity():
    out = kron(eye((2,)), eye((2,)))
    np.testing.assert_array_equal(out.mat, np.eye(4))
    assert out.factors == (2, 2)


def test_kron_pauli_z():
    out = kron(cm(SZ, (2,)), cm(SZ, (2,)))
    np.testing.assert_array_equal(out.mat, np.diag([1, -1, -1, 1]))


def test_kron_entry_placement():
    out = kron(cm(SX, (2,)), eye((2,)))
    assert out.mat[0, 2] == 1


# ---------------------------------------------------------------------------
# partial trace
# ---------------------------------------------------------------------------


def test_partial_trace_product_split():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    joint = kron(cm(a, (3,)), cm(b, (2,)))
    left = partial_trace(joint, keep=[0])
    right = partial_trace(joint, keep=[1])
    np.testing.assert_allclose(left.mat, np.trace(b) * a, atol=1e-13)
    np.testing.assert_allclose(right.mat, np.trace(a) * b, atol=1e-13)


def test_partial_trace_identity_case():
    out = partial_trace(eye((2, 2, 2, 2)), keep=[0, 2])
    np.testing.assert_allclose(out.mat, 4 * np.eye(4), atol=1e-14)
    assert out.factors == (2, 2)


def test_partial_trace_bell_projector():
    # |phi+> = |00> + |11| unnormalized; tracing either side gives the identity
    phi = np.zeros(4)
    phi[0] = phi[3] = 1.0
    proj = cm(np.outer(phi, phi), (2, 2))
    np.testing.assert_allclose(partial_trace(proj, keep=[0]).mat, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(partial_trace(proj, keep=[1]).mat, np.eye(2), atol=1e-14)


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(1)
    m = cm(rng.normal(size=(24, 24)) + 1j * rng.normal(size=(24, 24)), (2, 3, 4))
    for keep in ([0], [1], [2], [0, 2], [0, 1, 2]):
        out = partial_trace(m, keep)
        np.testing.assert_allclose(np.trace(out.mat), np.trace(m.mat), atol=1e-12)


def test_partial_trace_index_out_of_range():
    with pytest.raises(IndexError):
        partial_trace(eye((2, 2)), keep=[5])


def test_reorder_factors_swaps_kron_order():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3))
    joint = kron(cm(a, (2,)), cm(b, (3,)))
    swapped = reorder_factors(joint, [1, 0])
    np.testing.assert_allclose(swapped.mat, np.kron(b, a), atol=1e-14)
    assert swapped.factors == (3, 2)


# ---------------------------------------------------------------------------
# Hilbert-Schmidt basis
# ---------------------------------------------------------------------------


def test_hs_basis_qubit_is_pauli():
    ops = hs_basis(2).ops
    np.testing.assert_array_equal(ops[0], np.eye(2))
    np.testing.assert_array_equal(ops[1], SX)
    np.testing.assert_array_equal(ops[2], SY)
    np.testing.assert_array_equal(ops[3], SZ)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_hs_basis_orthogonality(d):
    ops = hs_basis(d).ops
    assert len(ops) == d * d
    gram = np.array([[np.trace(a @ b) for b in ops] for a in ops])
    np.testing.assert_allclose(gram, d * np.eye(d * d), atol=1e-12)


def test_hs_basis_hermitian_traceless():
    ops = hs_basis(3).ops
    for i, op in enumerate(ops):
        np.testing.assert_allclose(op, op.conj().T, atol=1e-14)
        if i > 0:
            assert abs(np.trace(op)) < 1e-14


def test_hs_basis_rejects_small_dims():
    for d in (0, 1):
        with pytest.raises(ValueError):
            hs_basis(d)


def test_hs_decompose_identity():
    w = hs_decompose(cm(np.eye(16) / 4.0, (2, 2, 2, 2)))
    assert w == {(0, 0, 0, 0): 0.25}


def test_hs_decompose_single_term():
    m = cm(np.kron(np.kron(SZ, np.eye(2)), np.kron(SZ, np.eye(2))) * 0.3, (2, 2, 2, 2))
    w = hs_decompose(m, cutoff=1e-12)
    assert set(w) == {(3, 0, 3, 0)}
    assert abs(w[(3, 0, 3, 0)] - 0.3) < 1e-14


@pytest.mark.parametrize(
    "factors", [(2, 2), (3,), (2, 3), (2, 2, 2), (2, 1, 3), (4, 2)]
)
def test_hs_round_trip(factors):
    rng = np.random.default_rng(hash(factors) % 2**32)
    dim = int(np.prod(factors))
    for _ in range(4):
        m = cm(random_hermitian(rng, dim), factors)
        back = hs_compose(hs_decompose(m), factors)
        assert np.abs(back.mat - m.mat).max() <= 1e-10


def test_hs_round_trip_many_random():
    rng = np.random.default_rng(99)
    for _ in range(20):
        m = cm(random_hermitian(rng, 16), (2, 2, 2, 2))
        back = hs_compose(hs_decompose(m), (2, 2, 2, 2))
        assert np.abs(back.mat - m.mat).max() <= 1e-10


def test_hs_decompose_rejects_non_hermitian():
    m = cm(np.array([[0, 1], [0, 0]], dtype=complex), (2,))
    with pytest.raises(ValueError):
        hs_decompose(m)


def test_hs_compose_tensor_and_dict_agree():
    rng = np.random.default_rng(5)
    m = cm(random_hermitian(rng, 8), (2, 4))
    coeffs = hs_decompose(m)
    tensor = np.zeros((4, 16))
    for idx, c in coeffs.items():
        tensor[idx] = c
    np.testing.assert_allclose(
        hs_compose(coeffs, (2, 4)).mat, hs_compose(tensor, (2, 4)).mat, atol=1e-14
    )


# ---------------------------------------------------------------------------
# permutation unitaries
# ---------------------------------------------------------------------------


def qubit_layout(n):
    return PartyLayout(n, 2, 2)


def test_permutation_identity_unitary():
    layout = qubit_layout(2)
    u = permutation_unitary(Permutation((0, 1)), layout)
    np.testing.assert_array_equal(u.mat, np.eye(16))


def test_swap_moves_first_lab_operator():
    layout = qubit_layout(2)
    u = permutation_unitary(Permutation((1, 0)), layout).mat
    term = np.kron(np.kron(SZ, np.eye(2)), np.eye(4))
    moved = u @ term @ u.conj().T
    np.testing.assert_allclose(moved, np.kron(np.eye(4), np.kron(SZ, np.eye(2))), atol=1e-14)


def test_three_cycle_has_order_three():
    layout = qubit_layout(3)
    u = permutation_unitary(Permutation((1, 2, 0)), layout).mat
    np.testing.assert_allclose(u @ u @ u, np.eye(64), atol=1e-14)


def test_permutation_unitary_entries_and_unitarity():
    layout = qubit_layout(3)
    for image in itertools.permutations(range(3)):
        u = permutation_unitary(Permutation(image), layout).mat
        assert set(np.unique(u.real)) <= {0.0, 1.0}
        np.testing.assert_allclose(u @ u.conj().T, np.eye(64), atol=1e-14)


def test_permutation_unitary_is_homomorphism():
    for n in (2, 3):
        layout = qubit_layout(n)
        perms = [Permutation(p) for p in itertools.permutations(range(n))]
        for g, h in itertools.product(perms, perms):
            ug = permutation_unitary(g, layout).mat
            uh = permutation_unitary(h, layout).mat
            ugh = permutation_unitary(g * h, layout).mat
            assert np.abs(ug @ uh - ugh).max() == 0.0


def test_permutation_unitary_homomorphism_n4_sampled():
    layout = PartyLayout(4, 2, 1)
    rng = np.random.default_rng(7)
    perms = list(itertools.permutations(range(4)))
    for _ in range(10):
        g = Permutation(perms[rng.integers(24)])
        h = Permutation(perms[rng.integers(24)])
        ug = permutation_unitary(g, layout).mat
        uh = permutation_unitary(h, layout).mat
        assert np.abs(ug @ uh - permutation_unitary(g * h, layout).mat).max() == 0.0


def test_apply_lab_permutation_matches_conjugation():
    layout = qubit_layout(3)
    rng = np.random.default_rng(11)
    m = cm(rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64)), layout.factors)
    for image in itertools.permutations(range(3)):
        g = Permutation(image)
        u = permutation_unitary(g, layout).mat
        np.testing.assert_allclose(
            apply_lab_permutation(m, g, layout).mat, u @ m.mat @ u.conj().T, atol=1e-12
        )


def test_permutation_signs():
    assert Permutation((0, 1)).sign == 1
    assert Permutation((1, 0)).sign == -1
    assert Permutation((1, 2, 0)).sign == 1
    assert Permutation((0, 2, 1)).sign == -1


def test_permutation_compose_and_inverse():
    g = Permutation((2, 0, 1))
    assert (g * g.inverse()).image == (0, 1, 2)
    h = Permutation((1, 0, 2))
    assert (g * h).image == tuple(g.image[h.image[i]] for i in range(3))


def test_permutation_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation((0, 0, 1))


# ---------------------------------------------------------------------------
# eigenvalues
# ---------------------------------------------------------------------------


def test_min_eigenvalue_identity():
    assert min_eigenvalue(eye((2, 2))) == pytest.approx(1.0, abs=1e-12)


def test_min_eigenvalue_pauli_z():
    assert min_eigenvalue(cm(SZ, (2,))) == pytest.approx(-1.0, abs=1e-12)


def test_min_eigenvalue_rejects_non_hermitian():
    with pytest.raises(ValueError):
        min_eigenvalue(cm(np.array([[0, 1], [0, 0]], dtype=complex), (2,)))
