import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oner.basis import DIM, N_NUCLEAR, state_index
from oner.spinops import (
    angular_momentum_matrices,
    electronic_angular_momentum,
    embed_electronic,
    embed_nuclear,
    excited_projector,
    full_angular_momentum,
    full_nuclear_momentum,
)

HALF_INTEGERS = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5]


def commutator(a, b):
    return a @ b - b @ a


@given(st.sampled_from(HALF_INTEGERS))
@settings(max_examples=len(HALF_INTEGERS), deadline=None)
def test_commutation_relations(j):
    jx, jy, jz = angular_momentum_matrices(j)
    assert np.allclose(commutator(jx, jy), 1j * jz, atol=1e-12)
    assert np.allclose(commutator(jy, jz), 1j * jx, atol=1e-12)
    assert np.allclose(commutator(jz, jx), 1j * jy, atol=1e-12)


@given(st.sampled_from(HALF_INTEGERS))
@settings(max_examples=len(HALF_INTEGERS), deadline=None)
def test_casimir_and_hermiticity(j):
    jx, jy, jz = angular_momentum_matrices(j)
    n = jx.shape[0]
    casimir = jx @ jx + jy @ jy + jz @ jz
    assert np.allclose(casimir, j * (j + 1) * np.eye(n), atol=1e-12)
    for comp in (jx, jy, jz):
        assert np.allclose(comp, comp.conj().T, atol=1e-14)


def test_jz_descending_diagonal():
    _, _, jz = angular_momentum_matrices(1.5)
    assert np.allclose(np.diag(jz), [1.5, 0.5, -0.5, -1.5])
    assert np.allclose(jz, np.diag(np.diag(jz)))


def test_spin_half_is_half_pauli():
    jx, jy, jz = angular_momentum_matrices(0.5)
    assert np.allclose(jx, [[0, 0.5], [0.5, 0]])
    assert np.allclose(jy, [[0, -0.5j], [0.5j, 0]])
    assert np.allclose(jz, [[0.5, 0], [0, -0.5]])


def test_spin_one_matrix_elements():
    jx, jy, jz = angular_momentum_matrices(1.0)
    r = 1 / np.sqrt(2)
    assert np.allclose(jx, [[0, r, 0], [r, 0, r], [0, r, 0]])
    assert np.allclose(jz, np.diag([1.0, 0.0, -1.0]))


def test_invalid_spin_rejected():
    with pytest.raises(ValueError):
        angular_momentum_matrices(0.3)
    with pytest.raises(ValueError):
        angular_momentum_matrices(-1.0)


def test_nuclear_embedding_against_index_construction():
    # independent oracle: place elements by explicit flat-index loops
    _, _, iz = angular_momentum_matrices(4.5)
    embedded = embed_nuclear(iz)
    expected = np.zeros((DIM, DIM), dtype=complex)
    for e in range(4):
        for a in range(N_NUCLEAR):
            for b in range(N_NUCLEAR):
                expected[e * N_NUCLEAR + a, e * N_NUCLEAR + b] = iz[a, b]
    assert np.array_equal(embedded, expected)
    # diagonal: each m_I value appears once per electronic sublevel
    diag = np.diag(embedded).real
    assert np.allclose(diag[:N_NUCLEAR], np.arange(4.5, -5.0, -1.0))
    for e in range(1, 4):
        assert np.allclose(diag[e * N_NUCLEAR : (e + 1) * N_NUCLEAR], diag[:N_NUCLEAR])


def test_electronic_embedding_against_index_construction():
    op = np.arange(16, dtype=complex).reshape(4, 4)
    embedded = embed_electronic(op)
    expected = np.zeros((DIM, DIM), dtype=complex)
    for ea in range(4):
        for eb in range(4):
            for n in range(N_NUCLEAR):
                expected[ea * N_NUCLEAR + n, eb * N_NUCLEAR + n] = op[ea, eb]
    assert np.array_equal(embedded, expected)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_embedding_preserves_spectrum(seed):
    rng = np.random.default_rng(seed)
    op = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    op = op + op.conj().T
    w_small = np.linalg.eigvalsh(op)
    w_big = np.linalg.eigvalsh(embed_electronic(op))
    assert np.allclose(np.repeat(w_small, N_NUCLEAR), w_big, atol=1e-10)


def test_embedding_shape_validation():
    with pytest.raises(ValueError):
        embed_nuclear(np.eye(4))
    with pytest.raises(ValueError):
        embed_electronic(np.eye(10))


def test_excited_projector_rank():
    p = excited_projector()
    assert np.allclose(p @ p, p)
    assert np.isclose(np.trace(p), 30.0)
    assert np.isclose(p[0, 0], 0.0)
    assert np.isclose(p[state_index("3P1", -1, 4.5), state_index("3P1", -1, 4.5)], 1.0)


def test_electronic_momentum_structure():
    jx, jy, jz = electronic_angular_momentum()
    # J vanishes identically on the ground sublevel
    for comp in (jx, jy, jz):
        assert np.allclose(comp[0, :], 0) and np.allclose(comp[:, 0], 0)
    assert np.allclose(np.diag(jz), [0, -1, 0, 1])
    # spin-1 algebra on the excited block
    assert np.allclose(commutator(jx, jy), 1j * jz, atol=1e-12)
    casimir = jx @ jx + jy @ jy + jz @ jz
    assert np.allclose(casimir, np.diag([0.0, 2.0, 2.0, 2.0]), atol=1e-12)


def test_full_space_momentum_commutes_between_factors():
    jx, _, jz = full_angular_momentum()
    ix, _, iz = full_nuclear_momentum()
    for a in (jx, jz):
        for b in (ix, iz):
            assert np.allclose(commutator(a, b), 0, atol=1e-13)
