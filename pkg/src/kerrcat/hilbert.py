"""Truncated mode spaces, Kerr-cat eigenbases and logical states.

Everything is built from dense numpy arrays in the Fock basis. The truncated
Kerr-cat eigenbasis used by the simulations is obtained by exact
diagonalization at full Fock dimension and then projecting operators onto the
first ``d`` parity pairs (see :class:`CatBasis`).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

__all__ = [
    "BasisKind",
    "ModeSpace",
    "KerrCatSpectrum",
    "ReducedCouplings",
    "LogicalStates",
    "CatBasis",
    "TruncationError",
    "default_fock_dim",
    "annihilation_operator",
    "number_operator",
    "parity_operator",
    "displacement_operator",
    "coherent_state",
    "kerr_hamiltonian",
    "diagonalize_kerr_cat",
    "logical_states",
    "shifted_fock_state",
    "reduced_couplings",
    "first_order_couplings",
    "perturbative_level",
    "is_hermitian",
    "operator_to_json",
    "operator_from_json",
]


class TruncationError(ValueError):
    """Raised when a Fock truncation is too small for the requested object."""


class BasisKind(enum.Enum):
    FOCK = "fock"
    SHIFTED_FOCK = "shifted_fock"
    KERR_EIGEN = "kerr_eigen"


def default_fock_dim(alpha: float) -> int:
    # alpha^2 + 12 alpha keeps the third pair converged to ~1e-10 under doubling
    return int(math.ceil(alpha**2 + 12.0 * abs(alpha)))


@dataclass(frozen=True)
class ModeSpace:
    """A single bosonic mode truncated to ``fock_dim`` levels around a cat of size ``alpha``."""

    alpha: float
    fock_dim: int = 0
    basis_kind: BasisKind = BasisKind.FOCK

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.fock_dim == 0:
            object.__setattr__(self, "fock_dim", default_fock_dim(self.alpha))
        if self.fock_dim < 2:
            raise ValueError(f"fock_dim must be >= 2, got {self.fock_dim}")

    @classmethod
    def from_alpha_sq(cls, alpha_sq: float, fock_dim: int = 0) -> "ModeSpace":
        return cls(alpha=math.sqrt(alpha_sq), fock_dim=fock_dim)

    @property
    def alpha_sq(self) -> float:
        return self.alpha**2


def annihilation_operator(space: ModeSpace) -> np.ndarray:
    n = space.fock_dim
    if n < 2:
        raise ValueError("annihilation operator needs dimension >= 2")
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def number_operator(space: ModeSpace) -> np.ndarray:
    return np.diag(np.arange(space.fock_dim, dtype=float)).astype(complex)


def parity_operator(space: ModeSpace) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(space.fock_dim)).astype(complex)


def displacement_operator(space: ModeSpace, beta: complex) -> np.ndarray:
    a = annihilation_operator(space)
    return sla.expm(beta * a.conj().T - np.conj(beta) * a)


def coherent_state(space: ModeSpace, beta: complex) -> np.ndarray:
    """Truncated, renormalized coherent state from the analytic Fock amplitudes."""
    n = np.arange(space.fock_dim)
    log_amp = n * np.log(np.abs(beta) + 1e-300) - 0.5 * np.array([math.lgamma(k + 1) for k in n])
    psi = np.exp(log_amp) * np.exp(1j * np.angle(beta) * n)
    if beta == 0:
        psi = np.zeros(space.fock_dim, complex)
        psi[0] = 1.0
    return psi / np.linalg.norm(psi)


def kerr_hamiltonian(space: ModeSpace, K: float) -> np.ndarray:
    """-K (a^dag^2 - alpha^2)(a^2 - alpha^2) in the Fock basis."""
    a = annihilation_operator(space)
    b = a @ a - space.alpha_sq * np.eye(space.fock_dim)
    return -K * (b.conj().T @ b)


def is_hermitian(op: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(np.linalg.norm(op), 1e-300)
    return np.linalg.norm(op - op.conj().T) <= rtol * scale


def shifted_fock_state(space: ModeSpace, n: int, parity: int) -> np.ndarray:
    """Normalized N[D(alpha) +/- (-1)^n D(-alpha)]|n> for parity = +1 or -1."""
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    if n < 0 or n >= space.fock_dim / 2:
        raise TruncationError(f"level {n} too high for fock_dim={space.fock_dim}")
    e = np.zeros(space.fock_dim, complex)
    e[n] = 1.0
    psi = displacement_operator(space, space.alpha) @ e
    psi = psi + parity * (-1) ** n * (displacement_operator(space, -space.alpha) @ e)
    return psi / np.linalg.norm(psi)


@dataclass(frozen=True)
class KerrCatSpectrum:
    """Parity-resolved eigenpairs of the Kerr parametric oscillator.

    ``vectors_plus[:, n]`` / ``vectors_minus[:, n]`` are the even/odd members of the
    n-th pair in the Fock basis. Phases: the even member has its largest shifted-Fock
    overlap real positive, the odd member is fixed relative to it so that
    ``<psi_n^+|a + a^dag|psi_n^->`` is positive (the sum of the two is then localized
    in the right well).
    """

    alpha: float
    K: float
    fock_dim: int
    energies_plus: np.ndarray
    energies_minus: np.ndarray
    vectors_plus: np.ndarray = field(repr=False)
    vectors_minus: np.ndarray = field(repr=False)

    @property
    def n_pairs(self) -> int:
        return len(self.energies_plus)

    @property
    def gaps(self) -> np.ndarray:
        mean = 0.5 * (self.energies_plus + self.energies_minus)
        return mean - mean[0]

    @property
    def splittings(self) -> np.ndarray:
        return self.energies_plus - self.energies_minus

    def to_json(self, include_vectors: bool = False) -> str:
        doc = {
            "kind": "KerrCatSpectrum",
            "alpha": self.alpha,
            "alpha_sq": self.alpha**2,
            "K": self.K,
            "fock_dim": self.fock_dim,
            "energies_plus": self.energies_plus.tolist(),
            "energies_minus": self.energies_minus.tolist(),
            "gaps": self.gaps.tolist(),
            "splittings": self.splittings.tolist(),
        }
        if include_vectors:
            doc["vectors_plus"] = operator_to_json(self.vectors_plus)
            doc["vectors_minus"] = operator_to_json(self.vectors_minus)
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "KerrCatSpectrum":
        doc = json.loads(text)
        if "vectors_plus" not in doc:
            space = ModeSpace(alpha=doc["alpha"], fock_dim=doc["fock_dim"])
            return diagonalize_kerr_cat(space, doc["K"], n_pairs=len(doc["energies_plus"]))
        return cls(
            alpha=doc["alpha"],
            K=doc["K"],
            fock_dim=doc["fock_dim"],
            energies_plus=np.array(doc["energies_plus"]),
            energies_minus=np.array(doc["energies_minus"]),
            vectors_plus=operator_from_json(doc["vectors_plus"]),
            vectors_minus=operator_from_json(doc["vectors_minus"]),
        )


def _overlaps_with_shifted(space: ModeSpace, vec: np.ndarray, parity: int, levels: int) -> np.ndarray:
    levels = min(levels, (space.fock_dim - 1) // 2)
    return np.array([shifted_fock_state(space, m, parity).conj() @ vec for m in range(levels)])


def diagonalize_kerr_cat(
    space: ModeSpace,
    K: float = 1.0,
    n_pairs: int | None = None,
    tail_tol: float = 1e-8,
) -> KerrCatSpectrum:
    """Exact dense diagonalization of H_KPO split into parity pairs.

    ``n_pairs`` defaults to the number of pairs whose population in the top six Fock
    levels stays below ``tail_tol``. Asking for more converged pairs than the
    truncation supports raises :class:`TruncationError`.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    N = space.fock_dim
    H = kerr_hamiltonian(space, 1.0).real
    energies, vecs = np.linalg.eigh(H)
    order = np.argsort(-energies)
    energies, vecs = energies[order], vecs[:, order]
    parity = np.einsum("ik,i,ik->k", vecs, (-1.0) ** np.arange(N), vecs)
    if not np.all(np.abs(np.abs(parity) - 1) < 1e-8):
        raise np.linalg.LinAlgError("eigenvectors without definite parity (degenerate solve)")
    even = parity > 0
    ev, vv = energies[even], vecs[:, even]
    od, vo = energies[~even], vecs[:, ~even]
    tail = slice(max(N - 6, 0), N)
    converged = 0
    for n in range(min(len(ev), len(od))):
        if np.sum(vv[tail, n] ** 2) > tail_tol or np.sum(vo[tail, n] ** 2) > tail_tol:
            break
        converged += 1
    if n_pairs is None:
        n_pairs = converged
    if n_pairs < 1 or n_pairs > converged:
        raise TruncationError(
            f"requested {n_pairs} pairs but only {converged} are converged at fock_dim={N}"
        )
    vp = vv[:, :n_pairs].astype(complex)
    vm = vo[:, :n_pairs].astype(complex)
    x = annihilation_operator(space) + annihilation_operator(space).conj().T
    for n in range(n_pairs):
        ov = _overlaps_with_shifted(space, vp[:, n], +1, n + 3)
        k = int(np.argmax(np.abs(ov)))
        vp[:, n] *= np.exp(-1j * np.angle(ov[k]))
        cross = vp[:, n].conj() @ x @ vm[:, n]
        vm[:, n] *= np.exp(-1j * np.angle(cross))
    return KerrCatSpectrum(
        alpha=space.alpha,
        K=K,
        fock_dim=N,
        energies_plus=K * ev[:n_pairs],
        energies_minus=K * od[:n_pairs],
        vectors_plus=vp,
        vectors_minus=vm,
    )


@dataclass(frozen=True)
class LogicalStates:
    ket0: np.ndarray
    ket1: np.ndarray
    ketplus: np.ndarray
    ketminus: np.ndarray


def logical_states(space: ModeSpace, spectrum: KerrCatSpectrum) -> LogicalStates:
    """|0>_L, |1>_L from the ground pair; |+->_L are the even/odd cats themselves."""
    if spectrum.n_pairs < 1:
        raise ValueError("spectrum has no pairs")
    plus = spectrum.vectors_plus[:, 0]
    minus = spectrum.vectors_minus[:, 0]
    return LogicalStates(
        ket0=(plus + minus) / math.sqrt(2),
        ket1=(plus - minus) / math.sqrt(2),
        ketplus=plus.copy(),
        ketminus=minus.copy(),
    )


@dataclass(frozen=True)
class ReducedCouplings:
    """Matrix elements of ``a`` in the Kerr-cat eigenbasis.

    ``lambda1``/``lambda2`` are the diagonal shifts ``alpha - <psi_n^-|a|psi_n^+>`` and
    ``eta_me`` is the pair-0 to pair-2 element ``<psi_0^+|a|psi_2^->``; all are taken with
    the even-parity member as source.
    """

    lambda1: float
    lambda2: float
    eta_me: float
    sigma01: float = float("nan")
    sigma12: float = float("nan")


def first_order_couplings(alpha: float) -> ReducedCouplings:
    """Closed forms to first order in 1/alpha."""
    a2 = alpha**2
    return ReducedCouplings(
        lambda1=2 * alpha / (2 * a2 + 1),
        lambda2=3 * alpha / (a2 + 1),
        eta_me=math.sqrt(2) * alpha / (2 * a2 + 1),
        sigma01=1.0,
        sigma12=math.sqrt(2),
    )


def reduced_couplings(space: ModeSpace, spectrum: KerrCatSpectrum) -> ReducedCouplings:
    if spectrum.n_pairs < 3:
        raise ValueError("reduced couplings need at least 3 pairs")
    a = annihilation_operator(space)
    vp, vm = spectrum.vectors_plus, spectrum.vectors_minus
    el = lambda bra, ket: complex(bra.conj() @ a @ ket)  # noqa: E731
    return ReducedCouplings(
        lambda1=space.alpha - el(vm[:, 1], vp[:, 1]).real,
        lambda2=space.alpha - el(vm[:, 2], vp[:, 2]).real,
        eta_me=el(vp[:, 0], vm[:, 2]).real,
        sigma01=el(vm[:, 0], vp[:, 1]).real,
        sigma12=el(vm[:, 1], vp[:, 2]).real,
    )


def perturbative_level(alpha: float, n: int) -> dict[int, float]:
    """First-order (in 1/alpha) expansion of the n-th excited level on shifted-Fock levels."""
    if n == 0:
        return {0: 1.0}
    a2 = alpha**2
    return {
        n - 1: alpha * (n - 1) * math.sqrt(n) / (2 * a2 + n - 1),
        n: 1.0,
        n + 1: -alpha * n * math.sqrt(n + 1) / (2 * a2 + n),
    }


class CatBasis:
    """Truncated Kerr-cat eigenbasis with ``n_pairs`` parity pairs.

    Basis vectors are ordered ``psi_0^+, psi_0^-, psi_1^+, psi_1^-, ...``. Mode
    operators are formed in the Fock basis and then projected, so e.g.
    ``project(a @ a)`` is not ``project(a) @ project(a)``.
    """

    def __init__(self, space: ModeSpace, spectrum: KerrCatSpectrum, n_pairs: int):
        if n_pairs > spectrum.n_pairs:
            raise TruncationError(f"spectrum has {spectrum.n_pairs} pairs, need {n_pairs}")
        self.space = space
        self.spectrum = spectrum
        self.n_pairs = n_pairs
        cols = []
        for n in range(n_pairs):
            cols += [spectrum.vectors_plus[:, n], spectrum.vectors_minus[:, n]]
        self.vectors = np.stack(cols, axis=1)
        self.dim = 2 * n_pairs

    @classmethod
    def build(cls, alpha_sq: float = 8.0, n_pairs: int = 4, K: float = 1.0, fock_dim: int = 0):
        space = ModeSpace.from_alpha_sq(alpha_sq, fock_dim)
        return cls(space, diagonalize_kerr_cat(space, K), n_pairs)

    @property
    def alpha(self) -> float:
        return self.space.alpha

    def project(self, op: np.ndarray) -> np.ndarray:
        return self.vectors.conj().T @ op @ self.vectors

    def to_fock(self, vec: np.ndarray) -> np.ndarray:
        return self.vectors @ vec

    @cached_property
    def a_fock(self) -> np.ndarray:
        return annihilation_operator(self.space)

    @cached_property
    def a(self) -> np.ndarray:
        return self.project(self.a_fock)

    @cached_property
    def energies(self) -> np.ndarray:
        sp = self.spectrum
        return np.ravel(np.column_stack([sp.energies_plus, sp.energies_minus])[: self.n_pairs])

    @cached_property
    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    @cached_property
    def parity(self) -> np.ndarray:
        return np.diag(np.tile([1.0, -1.0], self.n_pairs)).astype(complex)

    @cached_property
    def well_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """(right, left) well states (psi_n^+ +/- psi_n^-)/sqrt2 as columns."""
        eye = np.eye(self.dim)
        right = (eye[:, 0::2] + eye[:, 1::2]) / math.sqrt(2)
        left = (eye[:, 0::2] - eye[:, 1::2]) / math.sqrt(2)
        return right.astype(complex), left.astype(complex)

    @cached_property
    def p_plus(self) -> np.ndarray:
        right, _ = self.well_vectors
        return right @ right.conj().T

    @cached_property
    def p_minus(self) -> np.ndarray:
        _, left = self.well_vectors
        return left @ left.conj().T

    @cached_property
    def logical(self) -> np.ndarray:
        """dim x 2 isometry whose columns are |0>_L, |1>_L."""
        iso = np.zeros((self.dim, 2), complex)
        iso[0, :] = 1 / math.sqrt(2)
        iso[1, 0] = 1 / math.sqrt(2)
        iso[1, 1] = -1 / math.sqrt(2)
        return iso

    @cached_property
    def code_projector(self) -> np.ndarray:
        p = np.zeros((self.dim, self.dim), complex)
        p[0, 0] = p[1, 1] = 1.0
        return p

    def embed(self, qubit_state: np.ndarray) -> np.ndarray:
        """Map a logical qubit ket (2,) or density matrix (2, 2) into the mode basis."""
        qubit_state = np.asarray(qubit_state, complex)
        if qubit_state.ndim == 1:
            return self.logical @ qubit_state
        return self.logical @ qubit_state @ self.logical.conj().T

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "CatBasis",
                "alpha_sq": self.space.alpha_sq,
                "fock_dim": self.space.fock_dim,
                "K": self.spectrum.K,
                "n_pairs": self.n_pairs,
                "energies": self.energies.tolist(),
            }
        )


def operator_to_json(op: np.ndarray) -> dict:
    """Row-major [re, im] pairs plus shape."""
    op = np.asarray(op, complex)
    flat = op.reshape(-1)
    return {"shape": list(op.shape), "data": [[float(z.real), float(z.imag)] for z in flat]}


def operator_from_json(doc: dict) -> np.ndarray:
    data = np.array(doc["data"], float)
    return (data[:, 0] + 1j * data[:, 1]).reshape(doc["shape"])
