"""Pulse envelopes with analytic derivatives and finite-time Fourier analysis.

Convention: ``finite_time_fourier(p, w, T) = int_0^T p(t) exp(-i w t) dt``. A drive on a
transition whose upper level sits at energy ``gap`` below/above the source rotates as
``exp(+i gap t)`` in the interaction picture, so its leaked amplitude is the Fourier
component at ``w = -gap``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermeval
from scipy.special import comb, erf

__all__ = [
    "PulseShape",
    "HardPulse",
    "GaussianPulse",
    "DerivativeCombination",
    "PolynomialPulse",
    "SumPulse",
    "QuadratureError",
    "gaussian_pulse",
    "hard_pulse",
    "finite_time_fourier",
    "hole_corrected_pulse",
    "hole_coefficients",
    "leakage_order_estimate",
    "hard_pulse_excitation",
    "export_csv",
    "integrate",
]

MAX_ORDER = 8


class QuadratureError(RuntimeError):
    pass


class PulseShape:
    """Envelope on [0, T]; ``derivative(t, k)`` is exact for k <= ``max_order``."""

    duration: float
    smoothness: int
    max_order: int = MAX_ORDER

    def __call__(self, t):
        return self.derivative(t, 0)

    def derivative(self, t, order: int):
        raise NotImplementedError

    @property
    def area(self) -> complex:
        return finite_time_fourier(self, 0.0, self.duration)

    def peak(self, samples: int = 257) -> float:
        t = np.linspace(0.0, self.duration, samples)
        return float(np.max(np.abs(self(t))))

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(0.0, self.duration, n)
        return t, np.asarray(self(t), complex)


@dataclass(frozen=True)
class HardPulse(PulseShape):
    duration: float
    amplitude: complex
    smoothness: int = 0

    def derivative(self, t, order: int):
        t = np.asarray(t, float)
        if order == 0:
            return np.full_like(t, self.amplitude, dtype=complex) if t.ndim else complex(self.amplitude)
        return np.zeros_like(t, dtype=complex) if t.ndim else 0j

    def integral(self, t):
        return self.amplitude * np.clip(t, 0.0, self.duration)


@dataclass(frozen=True)
class GaussianPulse(PulseShape):
    """A_m {exp[-(t-T/2)^2/(2 sigma^2)] - exp[-(T/2)^2/(2 sigma^2)]}^m."""

    duration: float
    m: int
    sigma: float
    amplitude: float

    @property
    def smoothness(self) -> int:
        return self.m

    @property
    def offset(self) -> float:
        return math.exp(-((self.duration / 2) ** 2) / (2 * self.sigma**2))

    def _terms(self):
        # (g - c)^m = sum_j C(m, j) (-c)^(m-j) g^j, with g^j = exp(-j s^2 / (2 sigma^2))
        c = self.offset
        return [(j, comb(self.m, j, exact=True) * (-c) ** (self.m - j)) for j in range(self.m + 1)]

    def derivative(self, t, order: int):
        s = np.asarray(t, float) - self.duration / 2
        if order == 0:
            # direct form keeps the endpoint zeros exact
            g = np.exp(-0.5 * (s / self.sigma) ** 2)
            out = self.amplitude * (g - self.offset) ** self.m
            out = np.where(np.abs(s) >= self.duration / 2, 0.0, out)
            return out.astype(complex) if out.ndim else complex(out)
        out = np.zeros_like(s, dtype=float)
        hcoef = np.zeros(order + 1)
        hcoef[order] = 1.0
        for j, w in self._terms():
            if j == 0:
                if order == 0:
                    out = out + w
                continue
            r = math.sqrt(j) / self.sigma
            out = out + w * (-r) ** order * hermeval(r * s, hcoef) * np.exp(-0.5 * (r * s) ** 2)
        out = self.amplitude * out
        return out.astype(complex) if out.ndim else complex(out)

    def integral(self, t):
        """int_0^t of the envelope, closed form."""
        s = np.asarray(t, float) - self.duration / 2
        half = self.duration / 2
        total = np.zeros_like(s)
        for j, w in self._terms():
            if j == 0:
                total = total + w * (s + half)
                continue
            scale = self.sigma * math.sqrt(math.pi / (2 * j))
            k = math.sqrt(j / 2) / self.sigma
            total = total + w * scale * (erf(k * s) + erf(k * half))
        return self.amplitude * total


def _unit_area_gaussian(m: int, T: float, sigma: float) -> float:
    return float(GaussianPulse(T, m, sigma, 1.0).integral(T))


def gaussian_pulse(m: int, T: float, area: float, sigma: float | None = None) -> GaussianPulse:
    if m not in (1, 2, 3):
        raise ValueError(f"m must be 1, 2 or 3, got {m}")
    if not T > 0:
        raise ValueError("T must be positive")
    sigma = T if sigma is None else sigma
    return GaussianPulse(T, m, sigma, area / _unit_area_gaussian(m, T, sigma))


def hard_pulse(T: float, area: float) -> HardPulse:
    if not T > 0:
        raise ValueError("T must be positive")
    return HardPulse(T, area / T)


@dataclass(frozen=True)
class DerivativeCombination(PulseShape):
    """sum_k coeffs[k] * d^k base / dt^k."""

    base: PulseShape
    coeffs: tuple[complex, ...]

    @property
    def duration(self) -> float:
        return self.base.duration

    @property
    def smoothness(self) -> int:
        return max(self.base.smoothness - (len(self.coeffs) - 1), 0)

    @property
    def max_order(self) -> int:
        return self.base.max_order - (len(self.coeffs) - 1)

    def derivative(self, t, order: int):
        if order > self.max_order:
            raise ValueError(f"derivative order {order} beyond {self.max_order}")
        return sum(c * self.base.derivative(t, order + k) for k, c in enumerate(self.coeffs) if c != 0)


@dataclass(frozen=True)
class PolynomialPulse(PulseShape):
    """c * base(t)^power (base assumed real), with derivatives from the chain rule."""

    base: PulseShape
    power: int
    scale: complex = 1.0

    @property
    def duration(self) -> float:
        return self.base.duration

    @property
    def smoothness(self) -> int:
        return self.base.smoothness

    def derivative(self, t, order: int):
        f = [np.real(self.base.derivative(t, k)) for k in range(order + 1)]
        p = self.power
        if order == 0:
            val = f[0] ** p
        elif order == 1:
            val = p * f[0] ** (p - 1) * f[1]
        elif order == 2:
            val = p * (p - 1) * f[0] ** max(p - 2, 0) * f[1] ** 2 + p * f[0] ** (p - 1) * f[2]
        elif order == 3:
            val = (
                p * (p - 1) * (p - 2) * f[0] ** max(p - 3, 0) * f[1] ** 3
                + 3 * p * (p - 1) * f[0] ** max(p - 2, 0) * f[1] * f[2]
                + p * f[0] ** (p - 1) * f[3]
            )
        else:
            raise ValueError("PolynomialPulse supports derivatives up to order 3")
        return self.scale * val


@dataclass(frozen=True)
class SumPulse(PulseShape):
    parts: tuple[PulseShape, ...]

    @property
    def duration(self) -> float:
        return self.parts[0].duration

    @property
    def smoothness(self) -> int:
        return min(p.smoothness for p in self.parts)

    def derivative(self, t, order: int):
        return sum(p.derivative(t, order) for p in self.parts)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def composite_gauss_legendre(f, a: float, b: float, panels: int) -> complex:
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    vals = np.asarray(f(t), complex).reshape(panels, -1)
    return complex(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * vals))


def integrate(f, T: float, scale: float, rtol: float = 1e-12, max_panels: int = 1 << 14) -> complex:
    """Composite Gauss-Legendre with panel doubling until successive values agree."""
    tol = rtol * max(scale, 1e-300)
    panels = 4
    prev = composite_gauss_legendre(f, 0.0, T, panels)
    while panels < max_panels:
        panels *= 2
        cur = composite_gauss_legendre(f, 0.0, T, panels)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise QuadratureError(f"quadrature did not converge to {tol:g} with {panels} panels")


def finite_time_fourier(pulse: PulseShape, delta: float, T: float | None = None) -> complex:
    """int_0^T pulse(t) exp(-i delta t) dt."""
    T = pulse.duration if T is None else T
    scale = pulse.peak() * T
    return integrate(lambda t: pulse(t) * np.exp(-1j * delta * t), T, scale)


def hole_coefficients(holes: Sequence[float]) -> tuple[complex, ...]:
    """Derivative weights c_k so that sum_k c_k d^k/dt^k has zeros at every hole frequency.

    The weight of the k-th derivative is (i)^k e_k(1/w_1, ..., 1/w_N), e_k the
    elementary symmetric polynomial.
    """
    inv = [1.0 / w for w in holes]
    coeffs = []
    for k in range(len(holes) + 1):
        e_k = sum(math.prod(c) for c in combinations(inv, k)) if k else 1.0
        coeffs.append((1j) ** k * e_k)
    return tuple(coeffs)


def hole_corrected_pulse(base: PulseShape, holes: Sequence[float]) -> DerivativeCombination:
    """Add derivatives of ``base`` so its Fourier transform vanishes at each hole frequency.

    Integration by parts gives F(d^k p / dt^k, w) = (i w)^k F(p, w) when the first k-1
    derivatives vanish at both ends, so the corrected transform is
    F(p, w) prod_n (1 - w / w_n).
    """
    holes = list(holes)
    if any(w == 0 for w in holes):
        raise ValueError("hole frequencies must be nonzero")
    if base.smoothness < len(holes):
        raise ValueError(
            f"{len(holes)} holes need a base pulse with smoothness >= {len(holes)}, "
            f"got {base.smoothness}"
        )
    return DerivativeCombination(base, hole_coefficients(holes))


def leakage_order_estimate(pulse: PulseShape, delta: float, T: float | None = None, order: int = 1) -> float:
    """|F(pulse^n / delta^(n-1), delta, T)|^2 for n = 1, 2."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    T = pulse.duration if T is None else T
    if order == 1:
        return abs(finite_time_fourier(pulse, delta, T)) ** 2
    sq = PolynomialPulse(pulse, 2, 1.0 / delta)
    return abs(finite_time_fourier(sq, delta, T)) ** 2


def hard_pulse_excitation(amplitude: float, delta: float, T: float) -> float:
    """Closed form |F|^2 of a square pulse: 4 |amplitude|^2 sin^2(delta T / 2) / delta^2."""
    if delta == 0:
        return abs(amplitude * T) ** 2
    return 4 * abs(amplitude) ** 2 * math.sin(delta * T / 2) ** 2 / delta**2


def export_csv(pulse: PulseShape, path: str | Path, samples: int = 201) -> Path:
    path = Path(path)
    t, vals = pulse.sample(samples)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re", "im"])
        for ti, v in zip(t, vals):
            w.writerow([repr(float(ti)), repr(float(v.real)), repr(float(v.imag))])
    return path
