import math

import numpy as np
import pytest

from kerrcat.pulses import (
    DerivativeCombination,
    GaussianPulse,
    SumPulse,
    export_csv,
    finite_time_fourier,
    gaussian_pulse,
    hard_pulse,
    hard_pulse_excitation,
    hole_coefficients,
    hole_corrected_pulse,
    leakage_order_estimate,
)

T = 1.0


@pytest.mark.parametrize("m", [1, 2, 3])
def test_gaussian_endpoints_area_symmetry(m):
    p = gaussian_pulse(m, T, 0.3)
    assert p(0.0) == 0 and p(T) == 0
    assert finite_time_fourier(p, 0.0).real == pytest.approx(0.3, rel=1e-12)
    s = np.linspace(0, T / 2, 17)
    assert np.allclose(p(T / 2 + s), p(T / 2 - s), atol=1e-15)
    ts = np.linspace(0, T, 401)
    for k in range(1, m):
        peak = np.max(np.abs(p.derivative(ts, k)))
        assert abs(p.derivative(0.0, k)) <= 1e-10 * peak
        assert abs(p.derivative(T, k)) <= 1e-10 * peak


def test_unsupported_order_rejected():
    with pytest.raises(ValueError):
        gaussian_pulse(4, T, 1.0)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_analytic_derivatives_match_finite_differences(m):
    p = gaussian_pulse(m, T, 1.0)
    ts = np.linspace(0.05, 0.95, 100)
    h = 1e-5
    for k in range(1, 4):
        fd = (p.derivative(ts + h, k - 1) - p.derivative(ts - h, k - 1)) / (2 * h)
        ex = p.derivative(ts, k)
        scale = np.max(np.abs(ex))
        assert np.max(np.abs(fd - ex)) <= 1e-6 * scale


def test_constant_pulse_fourier_closed_form():
    p = hard_pulse(T, 0.7)
    for d in (3.0, -17.0, 40.0):
        exact = 0.7 * (1 - np.exp(-1j * d * T)) / (1j * d)
        assert finite_time_fourier(p, d) == pytest.approx(exact, abs=1e-12)
        assert abs(finite_time_fourier(p, d)) ** 2 == pytest.approx(hard_pulse_excitation(0.7, d, T), rel=1e-9)


def test_gaussian_beats_hard_at_large_detuning():
    g = gaussian_pulse(2, T, 1.0)
    h = hard_pulse(T, 1.0)
    assert abs(finite_time_fourier(g, 40.0)) ** 2 * 10 <= abs(finite_time_fourier(h, 40.0)) ** 2


def test_single_hole_suppression():
    base = gaussian_pulse(2, T, 1.0)
    w = 29.84
    corr = hole_corrected_pulse(base, [w])
    assert abs(finite_time_fourier(corr, w)) < 1e-10 * abs(finite_time_fourier(base, w))


def test_two_hole_suppression():
    base = gaussian_pulse(2, T, 1.0)
    holes = [32.0, 64.0]
    corr = hole_corrected_pulse(base, holes)
    for w in holes:
        assert abs(finite_time_fourier(corr, w)) < 1e-8 * abs(finite_time_fourier(base, w))


def test_hole_coefficients_match_explicit_series():
    d1, d2 = -29.8, -54.3
    c = hole_coefficients([-d1, -d2])
    assert c[1] == pytest.approx(-1j * (1 / d1 + 1 / d2))
    assert c[2] == pytest.approx(-1 / (d1 * d2))


def test_hard_pulse_cannot_take_holes():
    with pytest.raises(ValueError):
        hole_corrected_pulse(hard_pulse(T, 1.0), [30.0])


@pytest.mark.parametrize("m", [1, 2, 3])
def test_derivative_transfer_identity(m):
    p = gaussian_pulse(m, T, 1.0)
    for d in (12.0, 30.0):
        ref = abs(finite_time_fourier(p, d))
        for n in range(1, m + 1):
            dn = DerivativeCombination(p, tuple(1.0 if k == n else 0.0 for k in range(n + 1)))
            got = abs(finite_time_fourier(dn, d)) / d**n
            assert got == pytest.approx(ref, rel=1e-8)


def test_leakage_orders():
    h = hard_pulse(T, 1.0)
    e10 = leakage_order_estimate(h, 10.0, order=1)
    e40 = leakage_order_estimate(h, 40.0, order=1)
    # envelope 4/(delta T)^2 times area^2
    assert e10 <= 4 / 10**2 + 1e-12 and e40 <= 4 / 40**2 + 1e-12
    g = gaussian_pulse(2, T, 1.0)
    for d in (20.0, 30.0, 40.0):
        assert leakage_order_estimate(g, d, order=2) < leakage_order_estimate(g, d, order=1)
    assert leakage_order_estimate(g, 1e-9, order=1) == pytest.approx(1.0, rel=1e-9)


def test_sum_and_export(tmp_path):
    g = gaussian_pulse(2, T, 1.0)
    s = SumPulse((g, g))
    assert s(0.5) == pytest.approx(2 * g(0.5))
    path = export_csv(g, tmp_path / "p.csv", samples=11)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,re,im" and len(lines) == 12


def test_gaussian_pulse_custom_sigma():
    p = gaussian_pulse(2, T, 1.0, sigma=0.3)
    assert isinstance(p, GaussianPulse)
    assert finite_time_fourier(p, 0.0).real == pytest.approx(1.0, rel=1e-12)
