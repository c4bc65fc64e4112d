"""Gate models for Z, ZZ and CX on Kerr cats plus the dissipative baselines.

A :class:`GateModel` is a time-dependent Hamiltonian written as a static drift plus
a list of :class:`Term` objects, optional engineered jumps and the photon-loss
operators of every mode (unit rate, scaled by kappa_1 at propagation time).

The CX gate is assembled in the adiabatic frame
``U(t) = P_c^- (x) exp[-i phi (n_t - alpha^2)] + P_c^+``. Every lab-frame piece
``C (x) T`` is mapped by :class:`AdiabaticFrame`: the well-diagonal blocks of C pick up
the rotation phase of T, the well-off-diagonal blocks keep the target rotation
explicitly (formed in the target Fock space and projected).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .hilbert import CatBasis, ModeSpace, diagonalize_kerr_cat, reduced_couplings
from .pulses import (
    PolynomialPulse,
    PulseShape,
    SumPulse,
    integrate,
    gaussian_pulse,
    hard_pulse,
    hole_corrected_pulse,
)

__all__ = [
    "Scheme",
    "Term",
    "Jump",
    "GateModel",
    "CxSchedule",
    "AdiabaticFrame",
    "Z_DBC_C0",
    "ZZ_DBC_C0",
    "DEFAULT_PAIRS",
    "z_rotation_gate",
    "zz_rotation_gate",
    "cx_gate",
    "dissipative_gate",
    "idle_gate",
    "adiabatic_frame_map",
    "z_rotation_pulse",
    "zz_rotation_pulse",
    "zz_gaps",
    "cx_dbc_constants",
    "cx_delta_theta",
    "logical_z_rotation",
    "model_from_json",
    "build_model",
]

Z_DBC_C0 = 0.07
ZZ_DBC_C0 = 0.126
DEFAULT_PAIRS = {"z": 5, "zz": 6, "cx": 4}


class Scheme(str, enum.Enum):
    HARD = "hard"
    GAUSSIAN = "gaussian"
    DBC = "dbc"
    DISSIPATIVE = "dissipative"


Coefficient = Callable[[float], complex]


@dataclass(frozen=True)
class Term:
    """``coeff(t) * op(t)``, plus its Hermitian conjugate when ``pair`` is set."""

    op: np.ndarray | Callable[[float], np.ndarray]
    coeff: Coefficient | None = None
    pair: bool = False
    label: str = ""

    def value(self, t: float) -> np.ndarray:
        op = self.op(t) if callable(self.op) else self.op
        c = 1.0 if self.coeff is None else self.coeff(t)
        out = c * op
        if self.pair:
            out = out + out.conj().T
        return out


@dataclass(frozen=True)
class Jump:
    """Jump operator sqrt(rate) * sum of terms (no conjugate pairing)."""

    terms: tuple[Term, ...]
    rate: float = 1.0
    label: str = ""

    def value(self, t: float) -> np.ndarray:
        return math.sqrt(self.rate) * sum(term.value(t) for term in self.terms)


def logical_z_rotation(theta: float) -> np.ndarray:
    """exp(-i theta Z / 2) in the (|0>_L, |1>_L) basis."""
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


@dataclass(frozen=True, eq=False)
class GateModel:
    kind: str
    scheme: Scheme
    duration: float
    bases: tuple[CatBasis, ...]
    drift: np.ndarray
    terms: tuple[Term, ...]
    target: np.ndarray
    jumps: tuple[Jump, ...] = ()
    loss: tuple[Jump, ...] = ()
    final_frame: np.ndarray | None = None
    compensation: np.ndarray | None = None
    recipe: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    time_unit: str = "1/K"

    @property
    def dim(self) -> int:
        return int(np.prod([b.dim for b in self.bases]))

    @property
    def n_modes(self) -> int:
        return len(self.bases)

    def hamiltonian(self, t: float) -> np.ndarray:
        h = self.drift.copy()
        for term in self.terms:
            h += term.value(t)
        return h

    def jump_operators(self, t: float, kappa1: float = 0.0) -> list[np.ndarray]:
        ops = [j.value(t) for j in self.jumps]
        if kappa1 > 0:
            ops += [math.sqrt(kappa1) * j.value(t) for j in self.loss]
        return ops

    @property
    def logical(self) -> np.ndarray:
        """dim x 2^n isometry onto the logical computational basis."""
        iso = self.bases[0].logical
        for b in self.bases[1:]:
            iso = np.kron(iso, b.logical)
        return iso

    def norm_bound(self, kappa1: float = 0.0, samples: int = 9) -> float:
        """Rough spectral-radius bound of the Lindbladian generator over [0, T]."""
        best = 0.0
        for t in np.linspace(0, self.duration, samples):
            h = np.linalg.norm(self.hamiltonian(t), 2)
            d = sum(np.linalg.norm(L, 2) ** 2 for L in self.jump_operators(t, kappa1))
            best = max(best, h + d)
        return best

    def to_json(self) -> str:
        doc = {
            "kind": "GateModel",
            "gate": self.kind,
            "scheme": self.scheme.value,
            "duration": self.duration,
            "time_unit": self.time_unit,
            "recipe": self.recipe,
            "terms": [t.label for t in self.terms],
            "jumps": [j.label for j in self.jumps],
            "metadata": {k: v for k, v in self.metadata.items() if _jsonable(v)},
        }
        return json.dumps(doc, sort_keys=True)


def _jsonable(v) -> bool:
    try:
        json.dumps(v)
        return True
    except TypeError:
        return False


def model_from_json(text: str) -> GateModel:
    """Rebuild a model from its recipe (exact replay)."""
    return build_model(json.loads(text)["recipe"])


def build_model(recipe: dict) -> GateModel:
    """Build a model from a recipe dict such as ``{"builder": "cx", "T": 1.0, ...}``."""
    recipe = dict(recipe)
    builder = recipe.pop("builder")
    if builder not in _BUILDERS:
        raise ValueError(f"unknown gate builder {builder!r}")
    return _BUILDERS[builder](**recipe)


# ---------------------------------------------------------------------------
# single-mode helpers


def _basis(alpha_sq: float, n_pairs: int, K: float = 1.0, fock_dim: int = 0) -> CatBasis:
    return _cached_basis(float(alpha_sq), int(n_pairs), float(K), int(fock_dim))


_BASIS_CACHE: dict = {}


def _cached_basis(alpha_sq, n_pairs, K, fock_dim):
    key = (alpha_sq, n_pairs, K, fock_dim)
    if key not in _BASIS_CACHE:
        space = ModeSpace.from_alpha_sq(alpha_sq, fock_dim)
        spectrum = diagonalize_kerr_cat(space, K)
        _BASIS_CACHE[key] = CatBasis(space, spectrum, n_pairs)
    return _BASIS_CACHE[key]


def _gap(basis: CatBasis, n: int) -> float:
    return float(basis.spectrum.gaps[n])


def _check_theta(theta: float):
    if not (-2 * math.pi < theta <= 2 * math.pi):
        raise ValueError(f"theta must lie in (-2pi, 2pi], got {theta}")


def _scheme(s) -> Scheme:
    try:
        return Scheme(s)
    except ValueError:
        raise ValueError(f"unsupported scheme {s!r}") from None


def z_rotation_pulse(theta: float, T: float, scheme: Scheme, basis: CatBasis) -> PulseShape:
    """Drive envelope Omega(t) multiplying a^dag; area theta / (4 alpha)."""
    scheme = _scheme(scheme)
    area = theta / (4 * basis.alpha)
    if scheme in (Scheme.HARD, Scheme.DISSIPATIVE):
        return hard_pulse(T, area)
    base = gaussian_pulse(2, T, area)
    if scheme is Scheme.GAUSSIAN:
        return base
    d1, d2 = _gap(basis, 1), _gap(basis, 2)
    corrected = hole_corrected_pulse(base, [-d1, -d2])
    return SumPulse((corrected, PolynomialPulse(base, 3, Z_DBC_C0 / d1**2)))


def zz_gaps(basis: CatBasis) -> tuple[float, float, float]:
    d1, d2 = _gap(basis, 1), _gap(basis, 2)
    return d1, 2 * d1, d1 + d2


def zz_rotation_pulse(theta: float, T: float, scheme: Scheme, basis: CatBasis) -> PulseShape:
    """Two-mode squeezing envelope multiplying a_c^dag a_t^dag; area theta / (4 alpha^2)."""
    scheme = _scheme(scheme)
    area = theta / (4 * basis.alpha**2)
    if scheme is Scheme.HARD:
        return hard_pulse(T, area)
    base = gaussian_pulse(3, T, area)
    if scheme is Scheme.GAUSSIAN:
        return base
    da, db, dc = zz_gaps(basis)
    corrected = hole_corrected_pulse(base, [-da, -db, -dc])
    return SumPulse((corrected, PolynomialPulse(base, 3, ZZ_DBC_C0 / da**2)))


def _single_loss(basis: CatBasis) -> Jump:
    return Jump((Term(basis.a, label="a"),), 1.0, "loss")


def z_rotation_gate(
    theta: float,
    T: float,
    scheme: Scheme | str = Scheme.DBC,
    K: float = 1.0,
    alpha_sq: float = 8.0,
    n_pairs: int = DEFAULT_PAIRS["z"],
    fock_dim: int = 0,
) -> GateModel:
    """H = H_KPO + Omega(t) a^dag + h.c. in the truncated Kerr-cat eigenbasis."""
    scheme = _scheme(scheme)
    if scheme is Scheme.DISSIPATIVE:
        raise ValueError("use dissipative_gate for the dissipative scheme")
    _check_theta(theta)
    basis = _basis(alpha_sq, n_pairs, K, fock_dim)
    pulse = z_rotation_pulse(theta, T, scheme, basis)
    adag = basis.a.conj().T
    terms = (Term(adag, lambda t: complex(pulse(t)), pair=True, label="drive a^dag"),)
    recipe = dict(builder="z", theta=theta, T=T, scheme=scheme.value, K=K,
                  alpha_sq=alpha_sq, n_pairs=n_pairs, fock_dim=fock_dim)
    return GateModel(
        kind="z",
        scheme=scheme,
        duration=T,
        bases=(basis,),
        drift=basis.hamiltonian.copy(),
        terms=terms,
        target=logical_z_rotation(theta),
        loss=(_single_loss(basis),),
        recipe=recipe,
        metadata={"theta": theta, "gaps": [_gap(basis, 1), _gap(basis, 2)], "pulse": pulse},
    )


def idle_gate(T: float, K: float = 1.0, alpha_sq: float = 8.0, n_pairs: int = 4, modes: int = 1) -> GateModel:
    basis = _basis(alpha_sq, n_pairs, K)
    drift = basis.hamiltonian
    eye = np.eye(basis.dim)
    loss = [_single_loss(basis)]
    if modes == 2:
        drift = np.kron(drift, eye) + np.kron(eye, drift)
        loss = [Jump((Term(np.kron(basis.a, eye)),), 1.0, "loss c"),
                Jump((Term(np.kron(eye, basis.a)),), 1.0, "loss t")]
    return GateModel(
        kind="identity",
        scheme=Scheme.HARD,
        duration=T,
        bases=(basis,) * modes,
        drift=drift.astype(complex),
        terms=(),
        target=np.eye(2**modes, dtype=complex),
        loss=tuple(loss),
        recipe=dict(builder="identity", T=T, K=K, alpha_sq=alpha_sq, n_pairs=n_pairs, modes=modes),
    )


def zz_rotation_gate(
    theta: float,
    T: float,
    scheme: Scheme | str = Scheme.DBC,
    K: float = 1.0,
    alpha_sq: float = 8.0,
    n_pairs: int = DEFAULT_PAIRS["zz"],
    fock_dim: int = 0,
) -> GateModel:
    """H = H_KPO (x) I + I (x) H_KPO + Omega(t) a_c^dag a_t^dag + h.c."""
    scheme = _scheme(scheme)
    if scheme is Scheme.DISSIPATIVE:
        raise ValueError("no dissipative ZZ baseline")
    _check_theta(theta)
    basis = _basis(alpha_sq, n_pairs, K, fock_dim)
    pulse = zz_rotation_pulse(theta, T, scheme, basis)
    eye = np.eye(basis.dim)
    adag = basis.a.conj().T
    drift = np.kron(basis.hamiltonian, eye) + np.kron(eye, basis.hamiltonian)
    terms = (Term(np.kron(adag, adag), lambda t: complex(pulse(t)), pair=True, label="squeeze"),)
    target = np.diag(np.exp(-0.5j * theta * np.array([1, -1, -1, 1])))
    recipe = dict(builder="zz", theta=theta, T=T, scheme=scheme.value, K=K,
                  alpha_sq=alpha_sq, n_pairs=n_pairs, fock_dim=fock_dim)
    return GateModel(
        kind="zz",
        scheme=scheme,
        duration=T,
        bases=(basis, basis),
        drift=drift,
        terms=terms,
        target=target,
        loss=(Jump((Term(np.kron(basis.a, eye)),), 1.0, "loss c"),
              Jump((Term(np.kron(eye, basis.a)),), 1.0, "loss t")),
        recipe=recipe,
        metadata={"theta": theta, "gaps": list(zz_gaps(basis)), "pulse": pulse},
    )


# ---------------------------------------------------------------------------
# CX


@dataclass(frozen=True)
class CxSchedule:
    """Target rotation angle phi(t) with phi(0) = 0, phi(T) = pi."""

    duration: float
    kind: str
    profile: PulseShape | None = None

    @classmethod
    def linear(cls, T: float) -> "CxSchedule":
        return cls(T, "linear")

    @classmethod
    def gaussian(cls, T: float, m: int = 1) -> "CxSchedule":
        """phidot = Omega_{G,m} with area pi; m = 1 already makes phidot vanish at both ends."""
        return cls(T, f"gaussian{m}", gaussian_pulse(m, T, math.pi))

    @classmethod
    def for_scheme(cls, scheme: Scheme, T: float, m: int = 1) -> "CxSchedule":
        if scheme in (Scheme.HARD, Scheme.DISSIPATIVE):
            return cls.linear(T)
        return cls.gaussian(T, m)

    def phi(self, t):
        if self.profile is None:
            return math.pi * np.clip(t, 0.0, self.duration) / self.duration
        return self.profile.integral(np.clip(t, 0.0, self.duration))

    def phidot(self, t):
        if self.profile is None:
            return math.pi / self.duration + 0.0 * np.asarray(t, float)
        return np.real(self.profile.derivative(t, 0))

    def phiddot(self, t):
        if self.profile is None:
            return 0.0 * np.asarray(t, float)
        return np.real(self.profile.derivative(t, 1))


class AdiabaticFrame:
    """Maps lab-frame two-mode pieces ``C (x) T`` into the adiabatic frame.

    ``T`` is a target Fock monomial of rotation charge ``k`` (a^l -> k = l, a^dag^l ->
    k = -l), so ``R T R^dag = exp(i k phi) T`` with ``R = exp[-i phi (n - alpha^2)]``.
    """

    def __init__(self, control: CatBasis, target: CatBasis, schedule: CxSchedule, offblock: bool = True):
        self.control = control
        self.target = target
        self.schedule = schedule
        self.offblock = offblock
        self.alpha_sq = target.alpha**2
        self.fock_n = np.arange(target.space.fock_dim, dtype=float)
        self.eye_t = np.eye(target.dim)
        self.eye_c = np.eye(control.dim)

    def rotation_diag(self, t) -> np.ndarray:
        return np.exp(-1j * float(self.schedule.phi(t)) * (self.fock_n - self.alpha_sq))

    def target_rotated(self, T_fock: np.ndarray, t: float, left: bool) -> np.ndarray:
        """proj(R T) if ``left`` else proj(T R^dag)."""
        r = self.rotation_diag(t)
        V = self.target.vectors
        if left:
            return V.conj().T @ (r[:, None] * T_fock) @ V
        return V.conj().T @ (T_fock * r.conj()[None, :]) @ V

    def pieces(
        self,
        C: np.ndarray | None,
        T_fock: np.ndarray | None,
        charge: int,
        coeff: Coefficient | None = None,
        pair: bool = False,
        label: str = "",
    ) -> list[Term]:
        """Frame-transformed terms of ``coeff(t) C (x) T`` (C already in the control basis)."""
        pp, pm = self.control.p_plus, self.control.p_minus
        C = self.eye_c if C is None else C
        Tp = self.eye_t if T_fock is None else self.target.project(T_fock)
        c_pp, c_mm = pp @ C @ pp, pm @ C @ pm
        c_mp, c_pm = pm @ C @ pp, pp @ C @ pm
        out = []
        base = coeff if coeff is not None else (lambda t: 1.0)
        if np.any(np.abs(c_pp) > 1e-15):
            out.append(Term(np.kron(c_pp, Tp), coeff, pair, label + " [++]"))
        if np.any(np.abs(c_mm) > 1e-15):
            if charge == 0:
                c_minus = coeff
            else:
                phi = self.schedule.phi
                c_minus = lambda t, k=charge: base(t) * np.exp(1j * k * float(phi(t)))  # noqa: E731
            out.append(Term(np.kron(c_mm, Tp), c_minus, pair, label + " [--]"))
        small = max(np.abs(c_mp).max(), np.abs(c_pm).max())
        if self.offblock and small > 1e-13:
            Tf = np.eye(self.target.space.fock_dim, dtype=complex) if T_fock is None else T_fock

            def offdiag(t, c_mp=c_mp, c_pm=c_pm, Tf=Tf):
                return np.kron(c_mp, self.target_rotated(Tf, t, True)) + np.kron(
                    c_pm, self.target_rotated(Tf, t, False)
                )

            out.append(Term(offdiag, coeff, pair, label + " [+-]"))
        return out

    def frame_generator(self) -> Term:
        """i dU/dt U^dag = phidot P_c^- (x) (n_t - alpha^2)."""
        n_shift = self.target.project(np.diag(self.fock_n - self.alpha_sq).astype(complex))
        op = np.kron(self.control.p_minus, n_shift)
        return Term(op, lambda t: float(self.schedule.phidot(t)), False, "frame i Udot U^dag")

    def final_map(self) -> np.ndarray:
        """U(T) restricted to the truncated two-mode basis."""
        r = self.rotation_diag(self.schedule.duration)
        V = self.target.vectors
        rot = V.conj().T @ (r[:, None] * V)
        return np.kron(self.control.p_plus, self.eye_t) + np.kron(self.control.p_minus, rot)


def adiabatic_frame_map(
    schedule: CxSchedule, control: CatBasis, target_space: ModeSpace, t: float
) -> np.ndarray:
    """U(t) = P_c^- (x) exp[-i phi(t)(n_t - alpha^2)] + P_c^+ on (control basis) x (target Fock)."""
    n = np.arange(target_space.fock_dim, dtype=float)
    rot = np.diag(np.exp(-1j * float(schedule.phi(t)) * (n - target_space.alpha_sq)))
    return np.kron(control.p_minus, rot) + np.kron(control.p_plus, np.eye(target_space.fock_dim))


def cx_dbc_constants(basis: CatBasis, K: float = 1.0) -> dict:
    alpha = basis.alpha
    lam1 = reduced_couplings(basis.space, basis.spectrum).lambda1
    return {
        "lambda1": lam1,
        "delta1": _gap(basis, 1),
        "c1": 0.25 * K * alpha * (alpha - 0.5 * lam1) * lam1,
        "c2": 0.125 * K * alpha * lam1,
        "c3": 0.125 * K * alpha * lam1,
    }


def _delta11(schedule: CxSchedule, consts: dict, K: float, alpha_sq: float):
    d1, lam1 = consts["delta1"], consts["lambda1"]
    shift = 0.5 * K * alpha_sq * (1 - 3 * lam1**2)

    def delta11(t):
        return 2 * d1 - shift * (1 - np.cos(2 * schedule.phi(t)))

    def delta11_dot(t):
        return -2 * shift * np.sin(2 * schedule.phi(t)) * schedule.phidot(t)

    return delta11, delta11_dot


def cx_delta_theta(schedule: CxSchedule, basis: CatBasis, K: float = 1.0) -> float:
    """1/4 K alpha^2 lambda_1 (3 alpha - lambda_1) int phidot (1 - cos 2 phi) / Delta_11 dt."""
    consts = cx_dbc_constants(basis, K)
    alpha, lam1 = basis.alpha, consts["lambda1"]
    d11, _ = _delta11(schedule, consts, K, alpha**2)
    f = lambda t: schedule.phidot(t) * (1 - np.cos(2 * schedule.phi(t))) / d11(t)  # noqa: E731
    integral = integrate(f, schedule.duration, scale=math.pi).real
    return 0.25 * K * alpha**2 * lam1 * (3 * alpha - lam1) * integral


def _cx_common(basis: CatBasis, schedule: CxSchedule, offblock: bool):
    frame = AdiabaticFrame(basis, basis, schedule, offblock)
    af = basis.a_fock
    N = af.shape[0]
    eye_f = np.eye(N, dtype=complex)
    n_f = af.conj().T @ af
    a_c = basis.a
    return frame, af, eye_f, n_f, a_c


def _cx_feedforward(frame: AdiabaticFrame, basis: CatBasis, schedule: CxSchedule, n_f, eye_f) -> list[Term]:
    """H_cp = -1/2 phidot [I - (a_c + a_c^dag)/(2 alpha)] (x) (n_t - alpha^2)."""
    alpha = basis.alpha
    C = np.eye(basis.dim) - (basis.a + basis.a.conj().T) / (2 * alpha)
    T = n_f - alpha**2 * eye_f
    return frame.pieces(C, T, 0, lambda t: -0.5 * float(schedule.phidot(t)), False, "H_cp")


def _cx_target_pieces(frame, basis, schedule, af, eye_f, scale: float, label: str, kerr: bool):
    """Pieces of scale * B^dag B (kerr) with B = a_t^2 - M(phi), M acting on the control.

    M(phi) = (alpha/2)[(1 + e^{2i phi}) alpha + (1 - e^{2i phi}) a_c].
    """
    alpha = basis.alpha
    phi = schedule.phi
    a2 = af @ af
    a2d = a2.conj().T
    a_c = basis.a
    n_c = basis.project(af.conj().T @ af)
    terms = []
    # a_t^dag^2 a_t^2
    terms += frame.pieces(None, a2d @ a2, 0, lambda t: scale, False, label + " a_t^dag2 a_t^2")
    # -(M (x) a_t^dag^2 + h.c.)
    m0 = lambda t: -scale * 0.5 * alpha**2 * (1 + np.exp(2j * float(phi(t))))  # noqa: E731
    m1 = lambda t: -scale * 0.5 * alpha * (1 - np.exp(2j * float(phi(t))))  # noqa: E731
    terms += frame.pieces(None, a2d, -2, m0, True, label + " M0 a_t^dag2")
    terms += frame.pieces(a_c, a2d, -2, m1, True, label + " M1 a_c a_t^dag2")
    # M^dag M (x) I
    cI = lambda t: scale * 0.5 * alpha**4 * (1 + np.cos(2 * float(phi(t))))  # noqa: E731
    ca = lambda t: scale * alpha**3 * (-0.5j) * np.sin(2 * float(phi(t)))  # noqa: E731
    cn = lambda t: scale * 0.5 * alpha**2 * (1 - np.cos(2 * float(phi(t))))  # noqa: E731
    terms += frame.pieces(None, None, 0, cI, False, label + " |M|^2 I")
    terms += frame.pieces(a_c, None, 0, ca, True, label + " |M|^2 a_c")
    terms += frame.pieces(n_c, None, 0, cn, False, label + " |M|^2 n_c")
    return terms


def _collect(terms: list[Term], dim: int) -> tuple[np.ndarray, tuple[Term, ...]]:
    """Fold constant static terms into the drift."""
    drift = np.zeros((dim, dim), complex)
    rest = []
    for term in terms:
        if term.coeff is None and not callable(term.op):
            drift += term.value(0.0)
        else:
            rest.append(term)
    return drift, tuple(rest)


def cx_gate(
    T: float,
    scheme: Scheme | str = Scheme.DBC,
    K: float = 1.0,
    alpha_sq: float = 8.0,
    n_pairs: int = DEFAULT_PAIRS["cx"],
    fock_dim: int = 0,
    offblock: bool = True,
    dbc_signs: Sequence[float] = (1.0, 1.0, 1.0, 1.0),
    schedule_order: int = 1,
) -> GateModel:
    """Kerr CX in the adiabatic frame; DBC adds the four derivative corrections.

    ``dbc_signs`` scales each correction (diagnostics only). Under DBC the model carries
    a perfect logical Z_c rotation in ``compensation`` that undoes the rotation induced by
    the single-photon and target-squeezing corrections.
    """
    scheme = _scheme(scheme)
    if scheme is Scheme.DISSIPATIVE:
        raise ValueError("use dissipative_gate for the dissipative scheme")
    basis = _basis(alpha_sq, n_pairs, K, fock_dim)
    schedule = CxSchedule.for_scheme(scheme, T, schedule_order)
    frame, af, eye_f, n_f, a_c = _cx_common(basis, schedule, offblock)
    alpha = basis.alpha
    dim = basis.dim**2
    compensation = None

    terms: list[Term] = []
    terms += frame.pieces(basis.hamiltonian, None, 0, None, False, "H_KPO c")
    terms += _cx_target_pieces(frame, basis, schedule, af, eye_f, -K, "H_KPO t", True)
    terms += _cx_feedforward(frame, basis, schedule, n_f, eye_f)
    terms.append(frame.frame_generator())

    metadata: dict = {"schedule": schedule.kind, "n_corrections": 0, "delta_theta": 0.0}
    if scheme is Scheme.DBC:
        consts = cx_dbc_constants(basis, K)
        d11, d11dot = _delta11(schedule, consts, K, alpha_sq)
        s0, s1, s2, s3 = dbc_signs
        pd, pdd = schedule.phidot, schedule.phiddot
        phi = schedule.phi

        def u0(t):
            return float(pdd(t) / d11(t) - pd(t) * d11dot(t) / d11(t) ** 2)

        a_c_dag = a_c.conj().T
        a2_c = basis.project(af @ af)
        n_shift = n_f - alpha**2 * eye_f
        # H_DBC,0 = i u0 (a_c - a_c^dag)/(4 alpha) (x) (n_t - alpha^2)
        terms += frame.pieces(1j * (a_c - a_c_dag) / (4 * alpha), n_shift, 0,
                              lambda t: s0 * u0(t), False, "DBC0")
        # H_DBC,1 = -c1 phidot (1 - cos 2phi)/Delta_11 (a_c + a_c^dag); with a = Z (x) (a' + alpha)
        # in this basis the sign that cancels the Z_c sigma^x_{01} transition is negative
        c1 = -consts["c1"]
        terms += frame.pieces(a_c + a_c_dag, None, 0,
                              lambda t: s1 * c1 * float(pd(t) * (1 - np.cos(2 * phi(t))) / d11(t)),
                              False, "DBC1")
        # H_DBC,2 = i c2 phidot sin 2phi / Delta_11 (a_c^2 - a_c^dag^2)
        c2 = consts["c2"]
        terms += frame.pieces(1j * (a2_c - a2_c.conj().T), None, 0,
                              lambda t: s2 * c2 * float(pd(t) * np.sin(2 * phi(t)) / d11(t)),
                              False, "DBC2")
        # H_DBC,3 = c3 phidot / Delta_11 [(e^{2i phi} - 1) a_t^dag^2 + h.c.]
        c3 = consts["c3"]
        terms += frame.pieces(None, af.conj().T @ af.conj().T, -2,
                              lambda t: s3 * c3 * float(pd(t) / d11(t)) * (np.exp(2j * float(phi(t))) - 1),
                              True, "DBC3")
        metadata.update(consts)
        metadata["n_corrections"] = 4
        metadata["delta_theta"] = cx_delta_theta(schedule, basis, K)
        # apply exp(-i delta_theta Z_c) after the gate
        compensation = np.kron(logical_z_rotation(2 * metadata["delta_theta"]), np.eye(2))

    drift, rest = _collect(terms, dim)
    loss = (
        Jump(tuple(frame.pieces(a_c, None, 0, None, False, "a_c")), 1.0, "loss c"),
        Jump(tuple(frame.pieces(None, af, 1, None, False, "a_t")), 1.0, "loss t"),
    )
    recipe = dict(builder="cx", T=T, scheme=scheme.value, K=K, alpha_sq=alpha_sq,
                  n_pairs=n_pairs, fock_dim=fock_dim, offblock=offblock, dbc_signs=list(dbc_signs),
                  schedule_order=schedule_order)
    return GateModel(
        kind="cx",
        scheme=scheme,
        duration=T,
        bases=(basis, basis),
        drift=drift,
        terms=rest,
        target=_cx_logical(frame, basis),
        loss=loss,
        final_frame=frame.final_map(),
        compensation=compensation,
        recipe=recipe,
        metadata=metadata,
    )


def _cx_logical(frame: AdiabaticFrame, basis: CatBasis) -> np.ndarray:
    iso = np.kron(basis.logical, basis.logical)
    return iso.conj().T @ frame.final_map() @ iso


def dissipative_gate(
    kind: str,
    T: float,
    kappa2: float = 1.0,
    alpha_sq: float = 8.0,
    theta: float = math.pi / 2,
    n_pairs: int | None = None,
    fock_dim: int = 0,
    offblock: bool = True,
) -> GateModel:
    """Two-photon-dissipation baselines for Z(theta) and CX (time in units of 1/kappa2)."""
    if kind not in ("z", "cx"):
        raise ValueError(f"unsupported dissipative gate {kind!r}")
    n_pairs = n_pairs or DEFAULT_PAIRS[kind]
    basis = _basis(alpha_sq, n_pairs, 1.0, fock_dim)
    alpha = basis.alpha
    af = basis.a_fock
    a2 = basis.project(af @ af)
    recipe = dict(builder="dissipative", kind=kind, T=T, kappa2=kappa2, alpha_sq=alpha_sq,
                  theta=theta, n_pairs=n_pairs, fock_dim=fock_dim, offblock=offblock)
    if kind == "z":
        _check_theta(theta)
        pulse = hard_pulse(T, theta / (4 * alpha))
        stab = Jump((Term(a2 - alpha_sq * np.eye(basis.dim)),), kappa2, "two-photon")
        return GateModel(
            kind="z",
            scheme=Scheme.DISSIPATIVE,
            duration=T,
            bases=(basis,),
            drift=np.zeros((basis.dim, basis.dim), complex),
            terms=(Term(basis.a.conj().T, lambda t: complex(pulse(t)), True, "drive a^dag"),),
            target=logical_z_rotation(theta),
            jumps=(stab,),
            loss=(_single_loss(basis),),
            recipe=recipe,
            metadata={"theta": theta, "kappa2": kappa2, "pulse": pulse},
            time_unit="1/kappa2",
        )

    schedule = CxSchedule.linear(T)
    frame, af, eye_f, n_f, a_c = _cx_common(basis, schedule, offblock)
    dim = basis.dim**2
    terms: list[Term] = []
    terms += _cx_feedforward(frame, basis, schedule, n_f, eye_f)
    terms.append(frame.frame_generator())
    drift, rest = _collect(terms, dim)
    phi = schedule.phi
    # target jump: a_t^2 - M(phi) (x) I with M = (alpha/2)[(1 + e^{2i phi}) alpha + (1 - e^{2i phi}) a_c]
    tj = frame.pieces(None, af @ af, 2, None, False, "a_t^2")
    tj += frame.pieces(None, None, 0, lambda t: -0.5 * alpha_sq * (1 + np.exp(2j * float(phi(t)))), False, "M0")
    tj += frame.pieces(a_c, None, 0, lambda t: -0.5 * alpha * (1 - np.exp(2j * float(phi(t)))), False, "M1")
    cj = frame.pieces(a2 - alpha_sq * np.eye(basis.dim), None, 0, None, False, "a_c^2 - alpha^2")
    loss = (
        Jump(tuple(frame.pieces(a_c, None, 0, None, False, "a_c")), 1.0, "loss c"),
        Jump(tuple(frame.pieces(None, af, 1, None, False, "a_t")), 1.0, "loss t"),
    )
    return GateModel(
        kind="cx",
        scheme=Scheme.DISSIPATIVE,
        duration=T,
        bases=(basis, basis),
        drift=drift,
        terms=rest,
        target=_cx_logical(frame, basis),
        jumps=(Jump(tuple(cj), kappa2, "two-photon c"), Jump(tuple(tj), kappa2, "two-photon t")),
        loss=loss,
        final_frame=frame.final_map(),
        recipe=recipe,
        metadata={"schedule": "linear", "kappa2": kappa2, "delta_theta": 0.0},
        time_unit="1/kappa2",
    )


_BUILDERS = {
    "z": z_rotation_gate,
    "zz": zz_rotation_gate,
    "cx": cx_gate,
    "dissipative": dissipative_gate,
    "identity": idle_gate,
}
