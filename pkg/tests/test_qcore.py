import math

import numpy as np
import pytest

from entloc import qcore
from entloc.errors import DegenerateBranchError, NotHermitianError, QubitIndexError
from entloc.povm import X_HAT, kraus_matrix
from entloc.states import ghz_state, w_state

from oracles import partial_trace_loops, partial_transpose_loops

BELL = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


def test_basis_state_index_order():
    # qubit 0 is the most significant bit
    assert np.argmax(qcore.basis_state("100")) == 4
    assert np.argmax(qcore.basis_state([0, 0, 1])) == 1


def test_identity_leaves_state_unchanged():
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    for q in range(3):
        np.testing.assert_array_equal(qcore.apply_single_qubit_op(psi, q, np.eye(2)), psi)


def test_projector_on_bell_state():
    out = qcore.apply_single_qubit_op(BELL, 0, np.diag([1.0, 0.0]))
    np.testing.assert_allclose(out, [1 / math.sqrt(2), 0, 0, 0])
    assert qcore.norm_squared(out) == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(qcore.normalize(out), [1, 0, 0, 0])


def test_unsharp_x_outcome_on_ghz_has_probability_half():
    out = qcore.apply_single_qubit_op(ghz_state(3), 2, kraus_matrix(+1, 0.8, X_HAT))
    assert qcore.norm_squared(out) == pytest.approx(0.5, abs=1e-12)


def test_apply_matches_kron_on_batches():
    rng = np.random.default_rng(1)
    op = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    states = rng.standard_normal((5, 16)) + 1j * rng.standard_normal((5, 16))
    for q in range(4):
        full = np.kron(np.kron(np.eye(2**q), op), np.eye(2 ** (3 - q)))
        np.testing.assert_allclose(qcore.apply_single_qubit_op(states, q, op), states @ full.T, atol=1e-12)


def test_qubit_out_of_range():
    with pytest.raises(QubitIndexError):
        qcore.apply_single_qubit_op(ghz_state(3), 3, np.eye(2))
    with pytest.raises(IndexError):
        qcore.reduced_density(ghz_state(3), (0, 5))


def test_norm_squared_and_degenerate_normalize():
    assert qcore.norm_squared(qcore.basis_state("00")) == 1.0
    with pytest.raises(DegenerateBranchError):
        qcore.normalize(np.zeros(4))
    with pytest.raises(DegenerateBranchError):
        qcore.normalize(np.array([1e-7, 0, 0, 0]))


def test_reduced_density_examples():
    np.testing.assert_allclose(qcore.reduced_density(qcore.basis_state("000"), (0, 1)), np.diag([1, 0, 0, 0]))
    np.testing.assert_allclose(qcore.reduced_density(ghz_state(3), (0, 1)), np.diag([0.5, 0, 0, 0.5]), atol=1e-15)
    psi_plus = np.array([0, 1, 1, 0]) / math.sqrt(2)
    expected = np.diag([1 / 3, 0, 0, 0]) + (2 / 3) * np.outer(psi_plus, psi_plus)
    np.testing.assert_allclose(qcore.reduced_density(w_state(), (0, 1)), expected, atol=1e-15)


def test_reduced_density_matches_loop_oracle():
    rng = np.random.default_rng(2)
    psi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    psi /= np.linalg.norm(psi)
    for keep in [(0, 1), (1, 0), (2, 3), (3, 1), (0, 2)]:
        np.testing.assert_allclose(qcore.reduced_density(psi, keep), partial_trace_loops(psi, keep), atol=1e-13)


def test_reduced_density_rejects_repeated_qubit():
    with pytest.raises(QubitIndexError):
        qcore.reduced_density(ghz_state(3), (1, 1))


def test_partial_transpose_examples():
    prod = np.diag([1.0, 0, 0, 0]).astype(complex)
    np.testing.assert_array_equal(qcore.partial_transpose(prod), prod)
    ev = np.linalg.eigvalsh(qcore.partial_transpose(np.outer(BELL, BELL.conj())))
    np.testing.assert_allclose(ev, [-0.5, 0.5, 0.5, 0.5], atol=1e-14)
    ev = np.linalg.eigvalsh(qcore.partial_transpose(qcore.reduced_density(w_state(), (0, 1))))
    expected = sorted([1 / 3, 1 / 3, (1 + math.sqrt(5)) / 6, (1 - math.sqrt(5)) / 6])
    np.testing.assert_allclose(ev, expected, atol=1e-14)


def test_partial_transpose_matches_loop_oracle():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    np.testing.assert_array_equal(qcore.partial_transpose(a), partial_transpose_loops(a))


def test_hermitian_eigenvalues_examples():
    np.testing.assert_allclose(qcore.hermitian_eigenvalues(np.eye(4) / 4), [0.25] * 4)
    np.testing.assert_allclose(qcore.hermitian_eigenvalues(np.diag([0.0, 0, 1, -1])), [-1, 0, 0, 1], atol=1e-15)
    pt = qcore.partial_transpose(np.outer(BELL, BELL.conj()))
    np.testing.assert_allclose(qcore.hermitian_eigenvalues(pt), [-0.5, 0.5, 0.5, 0.5], atol=1e-12)


def test_jacobi_residuals_on_random_matrices():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = a + a.conj().T
        vals, vecs = qcore.jacobi_eigh(h)
        assert np.all(np.diff(vals) >= 0)
        for k in range(4):
            assert np.linalg.norm(h @ vecs[:, k] - vals[k] * vecs[:, k]) <= 1e-8
        np.testing.assert_allclose(vals, np.linalg.eigvalsh(h), atol=1e-10)


def test_jacobi_handles_degenerate_and_diagonal_input():
    vals, vecs = qcore.jacobi_eigh(np.eye(4))
    np.testing.assert_allclose(vals, 1.0)
    np.testing.assert_allclose(vecs, np.eye(4))


def test_non_hermitian_input_is_rejected():
    with pytest.raises(NotHermitianError):
        qcore.hermitian_eigenvalues(np.array([[0, 1], [0, 0]], dtype=complex))


def test_schmidt_spectrum_examples():
    prod = qcore.basis_state("010")
    for side in ([0], [1], [0, 2]):
        s = qcore.schmidt_spectrum(prod, side)
        assert s[0] == pytest.approx(1.0) and np.allclose(s[1:], 0)
    np.testing.assert_allclose(qcore.schmidt_spectrum(ghz_state(3), [0]), [0.5, 0.5])
    np.testing.assert_allclose(qcore.schmidt_spectrum(w_state(), [0]), [2 / 3, 1 / 3])


def test_schmidt_spectrum_rejects_bad_bipartition():
    with pytest.raises(QubitIndexError):
        qcore.schmidt_spectrum(ghz_state(3), [])
    with pytest.raises(QubitIndexError):
        qcore.schmidt_spectrum(ghz_state(3), [0, 1, 2])


def test_num_qubits_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        qcore.num_qubits(np.zeros(6))
