"""Schrodinger and Lindblad propagation of gate models, plus the code-space projection map.

Unitary runs use a fourth-order commutator Magnus step (two Gauss points, one matrix
exponential per step), so kets stay normalized to machine precision. Lindblad runs use
classical RK4 on the density matrix with a non-Hermitian effective Hamiltonian; a batch
of density matrices (shape ``(B, D, D)``) propagates in one pass.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .control import GateModel
from .hilbert import CatBasis

__all__ = [
    "NoiseSpec",
    "PropagationError",
    "PositivityError",
    "default_steps",
    "propagate_unitary",
    "propagate_lindblad",
    "project_to_code",
    "code_channel",
    "logical_block",
    "to_lab_frame",
    "fidelity",
    "leakage",
    "dump_observables",
]

POSITIVITY_TOL = -1e-7
TRACE_TOL = 1e-8


class PropagationError(RuntimeError):
    pass


class PositivityError(PropagationError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    """Single-photon loss per mode (kappa1) and extra two-photon dissipation (kappa2)."""

    kappa1: float = 0.0
    kappa2: float = 0.0

    def __post_init__(self):
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("rates must be nonnegative")


def default_steps(model: GateModel, noise: NoiseSpec | None = None, step_scale: float = 0.1) -> int:
    """Steps so that dt * ||generator|| <= step_scale (at least 16)."""
    kappa1 = noise.kappa1 if noise else 0.0
    bound = model.norm_bound(kappa1)
    return max(16, int(math.ceil(model.duration * bound / step_scale)))


def _extra_jumps(model: GateModel, noise: NoiseSpec | None, t: float) -> list[np.ndarray]:
    ops = model.jump_operators(t, noise.kappa1 if noise else 0.0)
    if noise and noise.kappa2 > 0:
        for basis, embed in _mode_embeddings(model):
            a = basis.project(basis.a_fock @ basis.a_fock) - basis.alpha**2 * np.eye(basis.dim)
            ops.append(math.sqrt(noise.kappa2) * embed(a))
    return ops


def _mode_embeddings(model: GateModel):
    dims = [b.dim for b in model.bases]
    out = []
    for i, basis in enumerate(model.bases):
        left = int(np.prod(dims[:i]))
        right = int(np.prod(dims[i + 1 :]))

        def embed(op, left=left, right=right):
            return np.kron(np.kron(np.eye(left), op), np.eye(right))

        out.append((basis, embed))
    return out


def propagate_unitary(model: GateModel, psi0: np.ndarray, steps: int | None = None) -> np.ndarray:
    """Time-ordered evolution of a ket (D,) or a stack of kets as columns (D, B)."""
    steps = steps or default_steps(model)
    psi = np.array(psi0, dtype=complex)
    T = model.duration
    if T == 0:
        return psi
    dt = T / steps
    c = math.sqrt(3) / 6
    norm0 = np.linalg.norm(psi, axis=0)
    for k in range(steps):
        t0 = k * dt
        h1 = model.hamiltonian(t0 + (0.5 - c) * dt)
        h2 = model.hamiltonian(t0 + (0.5 + c) * dt)
        gen = 0.5 * dt * (h1 + h2) + (math.sqrt(3) / 12) * dt**2 * 1j * (h2 @ h1 - h1 @ h2)
        psi = expm(-1j * gen) @ psi
    drift = np.max(np.abs(np.linalg.norm(psi, axis=0) ** 2 - norm0**2))
    if drift > 1e-8:
        raise PropagationError(f"norm drift {drift:.2e} exceeds 1e-8")
    return psi


def _lindblad_rhs(heff: np.ndarray, jumps: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    hr = heff @ rho
    out = -1j * (hr - np.swapaxes(hr, -1, -2).conj())
    for L in jumps:
        out += L @ rho @ L.conj().T
    return out


def _generator(model: GateModel, noise: NoiseSpec | None, t: float):
    h = model.hamiltonian(t)
    jumps = _extra_jumps(model, noise, t)
    heff = h.astype(complex)
    for L in jumps:
        heff = heff - 0.5j * (L.conj().T @ L)
    return heff, jumps


def propagate_lindblad(
    model: GateModel,
    rho0: np.ndarray,
    noise: NoiseSpec | None = None,
    steps: int | None = None,
    observer=None,
) -> np.ndarray:
    """RK4 on the master equation. ``rho0`` is (D, D) or a batch (B, D, D).

    ``observer(t, rho)`` is called after every step when given.
    """
    steps = steps or default_steps(model, noise)
    rho = np.array(rho0, dtype=complex)
    T = model.duration
    if T == 0:
        return rho
    dt = T / steps
    trace0 = np.trace(rho, axis1=-2, axis2=-1)
    gen_next = _generator(model, noise, 0.0)
    for k in range(steps):
        t0 = k * dt
        g0 = gen_next
        gm = _generator(model, noise, t0 + 0.5 * dt)
        gen_next = _generator(model, noise, t0 + dt)
        k1 = _lindblad_rhs(*g0, rho)
        k2 = _lindblad_rhs(*gm, rho + 0.5 * dt * k1)
        k3 = _lindblad_rhs(*gm, rho + 0.5 * dt * k2)
        k4 = _lindblad_rhs(*gen_next, rho + dt * k3)
        rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + np.swapaxes(rho, -1, -2).conj())
        if observer is not None:
            observer(t0 + dt, rho)
    _check_state(rho, trace0)
    return rho


def _check_state(rho: np.ndarray, trace0) -> None:
    tr = np.trace(rho, axis1=-2, axis2=-1)
    drift = np.max(np.abs(tr - trace0))
    if drift > TRACE_TOL:
        raise PropagationError(f"trace drift {drift:.2e} exceeds {TRACE_TOL:g}")
    lo = np.min(np.linalg.eigvalsh(rho))
    if lo < POSITIVITY_TOL:
        raise PositivityError(f"density matrix eigenvalue {lo:.2e} below {POSITIVITY_TOL:g}")


# ---------------------------------------------------------------------------
# code-space projection


def _single_mode_liouvillian(basis: CatBasis) -> np.ndarray:
    """Column-stacking superoperator of D[a^2 - alpha^2] in the truncated basis."""
    d = basis.dim
    L = basis.project(basis.a_fock @ basis.a_fock) - basis.alpha**2 * np.eye(d)
    LdL = L.conj().T @ L
    eye = np.eye(d)
    # vec(A X B) = (B^T kron A) vec(X)
    return np.kron(L.conj(), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye)


_CHANNEL_CACHE: dict = {}


def code_channel(basis: CatBasis, kappa2_strong: float = 50.0, duration: float | None = None) -> np.ndarray:
    """Superoperator exp(kappa2 t D[a^2 - alpha^2]) acting on column-stacked d x d matrices."""
    if duration is None:
        duration = 10.0 / (kappa2_strong * basis.alpha**2)
    key = (id(basis), kappa2_strong, duration)
    if key not in _CHANNEL_CACHE:
        _CHANNEL_CACHE[key] = (basis, expm(kappa2_strong * duration * _single_mode_liouvillian(basis)))
    return _CHANNEL_CACHE[key][1]


def _apply_channels(rho: np.ndarray, channels: Sequence[np.ndarray], dims: Sequence[int]) -> np.ndarray:
    n = len(dims)
    batch = rho.shape[:-2]
    out = rho.reshape(batch + tuple(dims) + tuple(dims))
    nb = len(batch)
    for i, (S, d) in enumerate(zip(channels, dims)):
        row_ax, col_ax = nb + i, nb + n + i
        moved = np.moveaxis(out, (col_ax, row_ax), (-2, -1))  # column-stacked: index = col*d + row
        shp = moved.shape
        flat = moved.reshape(shp[:-2] + (d * d,))
        flat = flat @ S.T
        out = np.moveaxis(flat.reshape(shp), (-2, -1), (col_ax, row_ax))
    D = int(np.prod(dims))
    return out.reshape(batch + (D, D))


def leakage(rho: np.ndarray, bases: Sequence[CatBasis]) -> float:
    """Largest per-mode population outside the ground pair."""
    dims = [b.dim for b in bases]
    diag = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    diag = diag.reshape(diag.shape[:-1] + tuple(dims))
    nb = diag.ndim - len(dims)
    worst = 0.0
    for i in range(len(dims)):
        outside = np.take(diag, range(2, dims[i]), axis=nb + i)
        worst = max(worst, float(np.max(outside.reshape(outside.shape[:nb] + (-1,)).sum(-1))))
    return worst


def project_to_code(
    rho: np.ndarray,
    bases: Sequence[CatBasis],
    kappa2_strong: float = 50.0,
    duration: float | None = None,
    tol: float = 1e-8,
    max_doublings: int = 6,
) -> np.ndarray:
    """Drain leakage with strong two-photon dissipation on every mode."""
    bases = list(bases)
    dims = [b.dim for b in bases]
    base_t = duration if duration is not None else 10.0 / (kappa2_strong * bases[0].alpha**2)
    for k in range(max_doublings + 1):
        t = base_t * 2**k
        channels = [code_channel(b, kappa2_strong, t) for b in bases]
        out = _apply_channels(np.asarray(rho, complex), channels, dims)
        if leakage(out, bases) < tol:
            return 0.5 * (out + np.swapaxes(out, -1, -2).conj())
    raise PropagationError(f"leakage above {tol:g} after {max_doublings} doublings")


def logical_block(rho: np.ndarray, iso: np.ndarray) -> np.ndarray:
    """Compress a code-space density matrix to the logical qubit(s)."""
    return iso.conj().T @ rho @ iso


def to_lab_frame(model: GateModel, rho: np.ndarray) -> np.ndarray:
    if model.final_frame is None:
        return rho
    U = model.final_frame
    return U @ rho @ U.conj().T


# ---------------------------------------------------------------------------


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Fidelity between kets and/or density matrices (Uhlmann for two mixed states)."""
    a = np.asarray(a, complex)
    b = np.asarray(b, complex)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    if a.ndim == 1 and b.ndim == 1:
        return float(abs(np.vdot(a, b)) ** 2)
    if a.ndim == 1:
        a, b = b, a
    if b.ndim == 1:
        return float(np.real(np.vdot(b, a @ b)))
    w, v = np.linalg.eigh(a)
    sqrt_a = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    m = sqrt_a @ b @ sqrt_a
    ev = np.clip(np.linalg.eigvalsh(0.5 * (m + m.conj().T)), 0, None)
    return float(min(1.0, np.sum(np.sqrt(ev)) ** 2))


def dump_observables(path: str | Path, records: Sequence[tuple]) -> Path:
    """Write (t, trace, leakage, x, y, z) rows collected by an observer."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "trace", "leakage", "x", "y", "z"])
        for row in records:
            w.writerow([repr(float(v)) for v in row])
    return path


def bloch_observer(model: GateModel, records: list):
    """Observer recording trace, leakage and single-mode logical Bloch components."""
    iso = model.logical
    paulis = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0])]

    def observe(t, rho):
        r = rho if rho.ndim == 2 else rho[0]
        q = logical_block(r, iso)
        comps = [0.0, 0.0, 0.0]
        if q.shape[0] == 2:
            comps = [float(np.real(np.trace(q @ p))) for p in paulis]
        records.append((t, float(np.real(np.trace(r))), leakage(r, model.bases), *comps))

    return observe
