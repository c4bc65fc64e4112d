import math

import numpy as np
import pytest

from kerrcat.hilbert import (
    CatBasis,
    KerrCatSpectrum,
    ModeSpace,
    TruncationError,
    annihilation_operator,
    coherent_state,
    diagonalize_kerr_cat,
    first_order_couplings,
    is_hermitian,
    kerr_hamiltonian,
    logical_states,
    operator_from_json,
    operator_to_json,
    parity_operator,
    reduced_couplings,
    shifted_fock_state,
)


def test_annihilation_entries():
    a = annihilation_operator(ModeSpace(1.0, 3))
    assert a[0, 1] == 1
    assert a[1, 2] == pytest.approx(math.sqrt(2))
    assert np.all(a[:, 0] == 0)


def test_small_dimension_rejected():
    with pytest.raises(ValueError):
        ModeSpace(1.0, 1)
    with pytest.raises(ValueError):
        ModeSpace(0.0, 10)


def test_kerr_hamiltonian_annihilates_coherent_states(space8):
    H = kerr_hamiltonian(space8, 1.0)
    assert is_hermitian(H)
    for beta in (space8.alpha, -space8.alpha):
        assert np.linalg.norm(H @ coherent_state(space8, beta)) <= 1e-6 * 64


def test_zero_kerr_is_zero_operator(space8):
    assert np.count_nonzero(kerr_hamiltonian(space8, 0.0)) == 0


def test_ground_pair_degenerate_and_gap(spectrum8):
    assert abs(spectrum8.splittings[0]) < 1e-6
    d1 = spectrum8.gaps[1]
    assert abs(d1 + 32) / 32 < 0.15
    assert abs(spectrum8.gaps[2] / (2 * d1) - 1) < 0.2


def test_parity_purity_and_orthonormality(space8, spectrum8):
    P = parity_operator(space8)
    vecs = np.hstack([spectrum8.vectors_plus, spectrum8.vectors_minus])
    assert np.allclose(vecs.conj().T @ vecs, np.eye(vecs.shape[1]), atol=1e-10)
    for n in range(3):
        assert np.real(spectrum8.vectors_plus[:, n].conj() @ P @ spectrum8.vectors_plus[:, n]) > 1 - 1e-8
        assert np.real(spectrum8.vectors_minus[:, n].conj() @ P @ spectrum8.vectors_minus[:, n]) < -1 + 1e-8


def test_fock_doubling_convergence(space8, spectrum8):
    big = diagonalize_kerr_cat(ModeSpace(space8.alpha, 2 * space8.fock_dim), 1.0)
    for n in range(3):
        assert abs(big.energies_plus[n] - spectrum8.energies_plus[n]) < 1e-8 * 8
        assert abs(big.energies_minus[n] - spectrum8.energies_minus[n]) < 1e-8 * 8


def test_truncation_error_when_too_many_pairs(space8):
    with pytest.raises(TruncationError):
        diagonalize_kerr_cat(space8, 1.0, n_pairs=40)


def test_splittings_shrink_with_alpha():
    sp = [diagonalize_kerr_cat(ModeSpace.from_alpha_sq(a2), 1.0).splittings for a2 in (4.0, 6.0, 8.0)]
    for n in range(3):
        vals = [abs(s[n]) for s in sp]
        assert vals[0] > vals[1] > vals[2]


def test_logical_states(space8, spectrum8):
    ls = logical_states(space8, spectrum8)
    assert abs(ls.ket0.conj() @ ls.ket1) < 1e-12
    assert abs(ls.ket0.conj() @ coherent_state(space8, space8.alpha)) ** 2 >= 1 - 2 * math.exp(-16)
    P = parity_operator(space8)
    assert np.real(ls.ketplus.conj() @ P @ ls.ketplus) == pytest.approx(1.0, abs=1e-8)


def test_shifted_fock_states(space8, spectrum8):
    s0 = shifted_fock_state(space8, 0, 1)
    assert abs(s0.conj() @ spectrum8.vectors_plus[:, 0]) ** 2 >= 1 - 1e-8
    states = [shifted_fock_state(space8, n, 1) for n in range(2)]
    assert abs(states[0].conj() @ states[1]) < 1e-3
    P = parity_operator(space8)
    for n in range(3):
        for p in (1, -1):
            s = shifted_fock_state(space8, n, p)
            assert np.real(s.conj() @ P @ s) == pytest.approx(p, abs=1e-8)
    with pytest.raises(TruncationError):
        shifted_fock_state(space8, space8.fock_dim, 1)


def test_reduced_couplings_values(space8, spectrum8):
    rc = reduced_couplings(space8, spectrum8)
    assert rc.lambda1 == pytest.approx(0.40, abs=0.01)
    assert rc.lambda2 == pytest.approx(1.08, abs=0.02)
    assert rc.eta_me == pytest.approx(0.256, abs=0.005)


def test_first_order_closed_forms():
    fo = first_order_couplings(math.sqrt(8))
    assert fo.lambda1 == pytest.approx(2 * math.sqrt(8) / 17)
    assert fo.lambda1 == pytest.approx(0.333, abs=1e-3)
    far = first_order_couplings(1e4)
    assert max(far.lambda1, far.lambda2, far.eta_me) < 1e-3


def test_a_in_eigenbasis_is_banded(basis4):
    a = basis4.a
    # ordering [psi0+, psi0-, psi1+, psi1-, ...]; pair index = i // 2
    for i in range(6):
        for j in range(6):
            if abs(i // 2 - j // 2) > 2:
                assert abs(a[i, j]) < 0.05


def test_cat_basis_logical_isometry(basis4):
    iso = basis4.logical
    assert np.allclose(iso.conj().T @ iso, np.eye(2), atol=1e-12)
    assert np.allclose(basis4.p_plus + basis4.p_minus, np.eye(basis4.dim), atol=1e-12)


def test_json_roundtrips(spectrum8):
    op = np.array([[1 + 2j, 0], [3, -1j]])
    assert np.array_equal(operator_from_json(operator_to_json(op)), op)
    back = KerrCatSpectrum.from_json(spectrum8.to_json())
    assert np.allclose(back.energies_plus, spectrum8.energies_plus)
