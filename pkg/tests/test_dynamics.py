import math

import numpy as np
import pytest
from scipy.linalg import expm

from kerrcat.control import GateModel, Jump, Scheme, Term, dissipative_gate, idle_gate, z_rotation_gate
from kerrcat.dynamics import (
    NoiseSpec,
    PositivityError,
    PropagationError,
    bloch_observer,
    default_steps,
    dump_observables,
    fidelity,
    leakage,
    project_to_code,
    propagate_lindblad,
    propagate_unitary,
)


def _plain_model(basis, drift, loss=(), jumps=(), T=1.0):
    return GateModel(
        kind="identity", scheme=Scheme.HARD, duration=T, bases=(basis,), drift=drift, terms=(),
        target=np.eye(2), jumps=tuple(jumps), loss=tuple(loss),
    )


def test_noise_rates_validated():
    with pytest.raises(ValueError):
        NoiseSpec(-1.0)


def test_kerr_eigenstate_survives():
    m = idle_gate(1.0)
    plus = m.bases[0].logical @ np.array([1, 1]) / math.sqrt(2)
    out = propagate_unitary(m, plus)
    assert abs(np.vdot(plus, out)) ** 2 == pytest.approx(1.0, abs=1e-8)


def test_static_hamiltonian_matches_expm(basis4, rng):
    A = rng.normal(size=(basis4.dim, basis4.dim)) + 1j * rng.normal(size=(basis4.dim, basis4.dim))
    H = A + A.conj().T
    m = _plain_model(basis4, H, T=0.7)
    psi = rng.normal(size=basis4.dim) + 0j
    psi /= np.linalg.norm(psi)
    out = propagate_unitary(m, psi, steps=50)
    assert np.linalg.norm(out - expm(-1j * 0.7 * H) @ psi) < 1e-9


def test_photon_loss_decay(basis4):
    d = basis4.dim
    a = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    loss = Jump((Term(a),), 1.0, "loss")
    m = _plain_model(basis4, np.zeros((d, d), complex), loss=(loss,), T=2.0)
    rho0 = np.zeros((d, d), complex)
    rho0[1, 1] = 1.0
    k1 = 0.3
    rho = propagate_lindblad(m, rho0, NoiseSpec(k1), steps=400)
    assert rho[1, 1].real == pytest.approx(math.exp(-k1 * 2.0), rel=1e-8)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)


def test_two_photon_dissipation_leaves_code_space_fixed(basis4):
    m = dissipative_gate("z", 2.0, theta=0.0)
    iso = m.bases[0].logical
    q = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    rho0 = iso @ q @ iso.conj().T
    rho = propagate_lindblad(m, rho0, NoiseSpec(), steps=400)
    assert 0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho - rho0))) < 1e-8


def test_lindblad_hygiene_on_noisy_gate():
    m = z_rotation_gate(math.pi / 2, 0.5, "dbc", n_pairs=4)
    iso = m.logical
    psi = iso @ np.array([1, 1]) / math.sqrt(2)
    rho = propagate_lindblad(m, np.outer(psi, psi.conj()), NoiseSpec(1e-3))
    assert abs(np.trace(rho) - 1) < 1e-8
    assert np.linalg.norm(rho - rho.conj().T) < 1e-10
    assert np.min(np.linalg.eigvalsh(rho)) > -1e-7


def test_positivity_violation_is_reported(basis4):
    d = basis4.dim
    m = _plain_model(basis4, np.zeros((d, d), complex))
    bad = np.diag([1.1, -0.1] + [0.0] * (d - 2)).astype(complex)
    with pytest.raises(PositivityError):
        propagate_lindblad(m, bad, NoiseSpec(), steps=16)


def test_project_to_code(basis4):
    iso = basis4.logical
    q = np.array([[0.6, 0.3], [0.3, 0.4]])
    rho = iso @ q @ iso.conj().T
    out = project_to_code(rho, [basis4])
    assert 0.5 * np.sum(np.abs(np.linalg.eigvalsh(out - rho))) < 1e-10
    exc = np.zeros((basis4.dim, basis4.dim), complex)
    exc[2, 2] = 1.0  # psi_1^+
    out = project_to_code(exc, [basis4])
    P = basis4.parity
    assert np.real(np.trace(P @ out)) == pytest.approx(1.0, abs=1e-8)
    assert leakage(out, [basis4]) < 1e-8
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-9)
    assert np.real(out[0, 0]) == pytest.approx(1.0, abs=1e-8)


def test_project_to_code_batched(basis4):
    rhos = np.zeros((3, basis4.dim, basis4.dim), complex)
    for i in range(3):
        rhos[i, 2 * i, 2 * i] = 1.0
    out = project_to_code(rhos, [basis4])
    assert out.shape == rhos.shape
    assert np.allclose(np.trace(out, axis1=1, axis2=2), 1.0, atol=1e-9)


def test_project_to_code_fails_when_budget_too_small(basis4):
    exc = np.zeros((basis4.dim, basis4.dim), complex)
    exc[-1, -1] = 1.0
    with pytest.raises(PropagationError):
        project_to_code(exc, [basis4], duration=1e-6, max_doublings=0)


def test_fidelity_cases():
    a = np.array([1, 0], complex)
    b = np.array([0, 1], complex)
    assert fidelity(a, a) == pytest.approx(1.0)
    assert fidelity(a, b) < 1e-12
    assert fidelity(np.eye(2) / 2, a) == pytest.approx(0.5)
    assert fidelity(np.eye(2) / 2, np.outer(a, a)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fidelity(a, np.ones(3))


def test_default_steps_floor_and_observer(tmp_path):
    m = idle_gate(0.01)
    assert default_steps(m) >= 16
    recs: list = []
    iso = m.bases[0].logical
    psi = iso @ np.array([1, 0])
    propagate_lindblad(m, np.outer(psi, psi.conj()), NoiseSpec(1e-3), steps=20, observer=bloch_observer(m, recs))
    assert len(recs) >= 2 and recs[-1][5] == pytest.approx(1.0, abs=1e-3)
    path = dump_observables(tmp_path / "obs.csv", recs)
    assert path.read_text().splitlines()[0] == "t,trace,leakage,x,y,z"
