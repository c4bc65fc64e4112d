import math

import numpy as np
import pytest
from scipy.integrate import quad

from kerrcat.control import (
    Z_DBC_C0,
    ZZ_DBC_C0,
    CxSchedule,
    Scheme,
    adiabatic_frame_map,
    build_model,
    cx_dbc_constants,
    cx_gate,
    dissipative_gate,
    logical_z_rotation,
    model_from_json,
    z_rotation_gate,
    z_rotation_pulse,
    zz_gaps,
    zz_rotation_gate,
)
from kerrcat.dynamics import logical_block, project_to_code, propagate_unitary, to_lab_frame
from kerrcat.hilbert import CatBasis, parity_operator, reduced_couplings
from kerrcat.pulses import finite_time_fourier


def _hermitian_everywhere(model, rng, n=50):
    for t in rng.uniform(0, model.duration, n):
        H = model.hamiltonian(t)
        assert np.linalg.norm(H - H.conj().T) <= 1e-12 * max(np.linalg.norm(H), 1.0)


def test_zero_angle_means_zero_drive(basis4):
    for scheme in ("hard", "gaussian", "dbc"):
        p = z_rotation_pulse(0.0, 0.2, scheme, basis4)
        assert np.max(np.abs(p(np.linspace(0, 0.2, 21)))) == 0


def test_theta_range_checked():
    with pytest.raises(ValueError):
        z_rotation_gate(7.0, 0.2, "dbc")


def test_dbc_constants():
    assert Z_DBC_C0 == 0.07
    assert ZZ_DBC_C0 == 0.126


def test_z_pulse_area_normalization(basis4):
    p = z_rotation_pulse(math.pi / 2, 0.2, "gaussian", basis4)
    assert finite_time_fourier(p, 0.0).real == pytest.approx(math.pi / (8 * basis4.alpha), rel=1e-10)


def test_zz_gap_set(basis4):
    d1, d2 = basis4.spectrum.gaps[1], basis4.spectrum.gaps[2]
    da, db, dc = zz_gaps(basis4)
    assert (da, db, dc) == pytest.approx((d1, 2 * d1, d1 + d2))


def test_hermiticity_of_assembled_hamiltonians(rng):
    for model in (z_rotation_gate(math.pi / 2, 0.2, "dbc"), zz_rotation_gate(math.pi / 2, 0.2, "dbc", n_pairs=4),
                  cx_gate(1.0, "dbc"), cx_gate(1.0, "hard")):
        _hermitian_everywhere(model, rng)


def test_zz_generator_preserves_joint_parity(rng):
    m = zz_rotation_gate(math.pi / 2, 0.2, "dbc", n_pairs=4)
    P1 = m.bases[0].parity
    P = np.kron(P1, P1)
    for t in rng.uniform(0, 0.2, 10):
        H = m.hamiltonian(t)
        assert np.linalg.norm(H @ P - P @ H) < 1e-10 * np.linalg.norm(H)


def test_zz_zero_angle_is_identity_on_code():
    m = zz_rotation_gate(0.0, 0.2, "dbc", n_pairs=4)
    iso = m.logical
    for q in np.eye(4):
        out = propagate_unitary(m, iso @ q, steps=200)
        # drift-only evolution keeps the ground pair (energy 0) fixed
        assert abs(np.vdot(iso @ q, out)) ** 2 > 1 - 1e-10


def test_cx_dbc_has_four_corrections():
    m = cx_gate(1.0, "dbc")
    labels = {t.label.split()[0] for t in m.terms}
    assert {"DBC0", "DBC1", "DBC2", "DBC3"} <= labels
    assert m.metadata["n_corrections"] == 4


def test_cx_dbc_constants_closed_forms(basis4):
    c = cx_dbc_constants(basis4)
    a, lam = basis4.alpha, reduced_couplings(basis4.space, basis4.spectrum).lambda1
    assert c["c1"] == pytest.approx(0.25 * a * (a - lam / 2) * lam)
    assert c["c2"] == pytest.approx(a * lam / 8)
    assert c["c3"] == pytest.approx(a * lam / 8)


def test_delta_theta_matches_independent_quadrature(basis4):
    m = cx_gate(1.0, "dbc")
    sched = CxSchedule.for_scheme(Scheme.DBC, 1.0)
    c = cx_dbc_constants(basis4)
    a, lam, d1 = basis4.alpha, c["lambda1"], c["delta1"]

    def integrand(t):
        phi = float(sched.phi(t))
        d11 = 2 * d1 - 0.5 * a * a * (1 - 3 * lam**2) * (1 - math.cos(2 * phi))
        return float(sched.phidot(t)) * (1 - math.cos(2 * phi)) / d11

    val = 0.25 * a * a * lam * (3 * a - lam) * quad(integrand, 0, 1.0, epsabs=1e-13, epsrel=1e-12)[0]
    assert m.metadata["delta_theta"] == pytest.approx(val, rel=1e-9)


@pytest.mark.parametrize("kind", ["linear", "gaussian"])
def test_schedule_endpoints_and_monotone(kind):
    s = CxSchedule.linear(1.0) if kind == "linear" else CxSchedule.gaussian(1.0)
    assert float(s.phi(0.0)) == pytest.approx(0.0, abs=1e-14)
    assert float(s.phi(1.0)) == pytest.approx(math.pi, rel=1e-12)
    t = np.linspace(0, 1, 101)
    assert np.all(np.diff(s.phi(t)) >= -1e-14)
    if kind == "gaussian":
        assert abs(float(s.phidot(0.0))) < 1e-12 and abs(float(s.phidot(1.0))) < 1e-12


def test_adiabatic_frame_map(basis4):
    sched = CxSchedule.gaussian(1.0)
    space = basis4.space
    U0 = adiabatic_frame_map(sched, basis4, space, 0.0)
    assert np.allclose(U0, np.eye(U0.shape[0]), atol=1e-12)
    for t in (0.3, 0.7, 1.0):
        U = adiabatic_frame_map(sched, basis4, space, t)
        assert np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])) < 1e-10
    UT = adiabatic_frame_map(sched, basis4, space, 1.0)
    ls0, ls1 = basis4.to_fock(basis4.logical[:, 0]), basis4.to_fock(basis4.logical[:, 1])
    c1 = basis4.logical[:, 1]
    c0 = basis4.logical[:, 0]
    # control |1> flips target |0> -> |1>; control |0> leaves it alone
    out = UT @ np.kron(c1, ls0)
    assert abs(np.vdot(np.kron(c1, ls1), out)) ** 2 > 1 - 1e-6
    out = UT @ np.kron(c0, ls0)
    assert abs(np.vdot(np.kron(c0, ls0), out)) ** 2 > 1 - 1e-12


def test_cx_logical_target_is_cx():
    m = cx_gate(1.0, "hard")
    cx = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    assert np.allclose(np.abs(m.target), cx, atol=1e-6)


def _cx_fidelity(m, q, comp):
    iso = m.logical
    psi = propagate_unitary(m, iso @ q, steps=500)
    rho = project_to_code(to_lab_frame(m, np.outer(psi, psi.conj())), m.bases)
    out = logical_block(rho, iso)
    if comp is not None:
        out = comp @ out @ comp.conj().T
    v = m.target @ q
    return float(np.real(np.vdot(v, out @ v)))


@pytest.mark.slow
def test_cx_dbc_compensation_improves_fidelity():
    m = cx_gate(1.0, "dbc")
    q = np.kron(np.ones(2), np.ones(2)) / 2
    assert _cx_fidelity(m, q, m.compensation) > _cx_fidelity(m, q, None)
    assert _cx_fidelity(m, q, m.compensation) > 1 - 1e-5


def test_compensation_is_logical_z_on_control():
    m = cx_gate(1.0, "dbc")
    dth = m.metadata["delta_theta"]
    expect = np.kron(np.diag([np.exp(-1j * dth), np.exp(1j * dth)]), np.eye(2))
    assert np.allclose(m.compensation, expect)
    assert np.allclose(logical_z_rotation(2 * dth), np.diag([np.exp(-1j * dth), np.exp(1j * dth)]))


def test_dissipative_models():
    z = dissipative_gate("z", 2.0)
    assert z.time_unit == "1/kappa2" and len(z.jumps) == 1
    cx = dissipative_gate("cx", 2.0)
    assert len(cx.jumps) == 2
    with pytest.raises(ValueError):
        dissipative_gate("zz", 1.0)


def test_json_replay():
    m = cx_gate(0.8, "dbc")
    m2 = model_from_json(m.to_json())
    assert m2.duration == 0.8 and m2.scheme is Scheme.DBC
    assert np.allclose(m2.hamiltonian(0.3), m.hamiltonian(0.3))
    with pytest.raises(ValueError):
        build_model({"builder": "nope"})
