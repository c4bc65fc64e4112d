"""Gate error extraction, process tomography and gate-time sweeps.

Errors are read off the logical state after the gate, the frame map back to the lab
frame, a perfect logical compensation (if the model carries one) and the code-space
projection: ``p_z = 1 - F`` from |+>/|++> and ``p_x = 1 - F`` from |0>/|00>.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .control import GateModel, build_model
from .dynamics import (
    NoiseSpec,
    default_steps,
    logical_block,
    project_to_code,
    propagate_lindblad,
    propagate_unitary,
    to_lab_frame,
)

__all__ = [
    "P_X_FLOOR",
    "GateErrorReport",
    "ChiMatrix",
    "SweepPoint",
    "SweepResult",
    "ConvergenceError",
    "gate_outputs",
    "extract_error_probs",
    "process_tomography",
    "pauli_labels",
    "sweep_gate_time",
    "error_model_eval",
    "reports_to_csv",
]

P_X_FLOOR = 1e-14
HALVING_RTOL = 0.02

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], complex),
    "Y": np.array([[0, -1j], [1j, 0]], complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}
_KET = {
    "0": np.array([1, 0], complex),
    "1": np.array([0, 1], complex),
    "+": np.array([1, 1], complex) / math.sqrt(2),
    "+i": np.array([1, 1j], complex) / math.sqrt(2),
}


class ConvergenceError(RuntimeError):
    pass


def _product_ket(labels: Sequence[str]) -> np.ndarray:
    out = np.ones(1, complex)
    for lab in labels:
        out = np.kron(out, _KET[lab])
    return out


def gate_outputs(
    model: GateModel,
    kets: Sequence[np.ndarray],
    noise: NoiseSpec | None = None,
    steps: int | None = None,
) -> np.ndarray:
    """Logical density matrices (B, 2^n, 2^n) produced from logical input kets."""
    iso = model.logical
    psi = np.stack([iso @ k for k in kets], axis=1)
    noisy = noise is not None and (noise.kappa1 > 0 or noise.kappa2 > 0)
    if model.jumps or noisy:
        rho = np.einsum("ib,jb->bij", psi, psi.conj())
        rho = propagate_lindblad(model, rho, noise, steps)
    else:
        out = propagate_unitary(model, psi, steps)
        rho = np.einsum("ib,jb->bij", out, out.conj())
    rho = project_to_code(to_lab_frame(model, rho), model.bases)
    q = logical_block(rho, iso)
    if model.compensation is not None:
        C = model.compensation
        q = C @ q @ C.conj().T
    return q


def _infidelities(model: GateModel, noise: NoiseSpec | None, steps: int | None) -> tuple[float, float]:
    n = model.n_modes
    plus, zero = _product_ket(["+"] * n), _product_ket(["0"] * n)
    q = gate_outputs(model, [plus, zero], noise, steps)
    vals = []
    for rho, ket in zip(q, (plus, zero)):
        ideal = model.target @ ket
        vals.append(float(np.clip(1 - np.real(np.vdot(ideal, rho @ ideal)), 0.0, 1.0)))
    return vals[0], vals[1]


@dataclass(frozen=True)
class GateErrorReport:
    gate: str
    scheme: str
    T: float
    kappa1: float
    alpha_sq: float
    p_z: float
    p_x: float
    p_z_na: float | None = None
    p_x_na: float | None = None
    theta: float | None = None
    steps: int = 0
    dt: float = 0.0
    halving_change: float = 0.0
    delta_theta: float = 0.0
    time_unit: str = "1/K"
    seed: int | None = None

    @property
    def bias(self) -> float:
        if self.p_x < P_X_FLOOR:
            return math.inf
        return self.p_z / self.p_x

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bias"] = self.bias
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


CSV_FIELDS = [
    "gate", "scheme", "T", "time_unit", "kappa1", "alpha_sq", "theta", "p_z", "p_x",
    "p_z_na", "p_x_na", "bias", "steps", "dt", "halving_change", "delta_theta", "seed",
]


def reports_to_csv(reports: Sequence[GateErrorReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        d = r.to_dict()
        w.writerow([_fmt(d[k]) for k in CSV_FIELDS])
    return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _refine(model: GateModel, noise: NoiseSpec | None, steps: int | None, refine: bool, max_halvings: int):
    steps = steps or default_steps(model, noise)
    cur = _infidelities(model, noise, steps)
    if not refine:
        return cur, steps, 0.0
    change = math.inf
    for _ in range(max_halvings):
        steps *= 2
        nxt = _infidelities(model, noise, steps)
        change = max(_rel_change(a, b) for a, b in zip(cur, nxt))
        cur = nxt
        if change < HALVING_RTOL:
            return cur, steps, change
    raise ConvergenceError(f"step halving still changes errors by {change:.1%}")


def _rel_change(a: float, b: float) -> float:
    floor = 1e-13
    if max(abs(a), abs(b)) < floor:
        return 0.0
    return abs(a - b) / max(abs(b), floor)


def extract_error_probs(
    model: GateModel,
    noise: NoiseSpec | None = None,
    steps: int | None = None,
    refine: bool = True,
    include_na: bool = True,
    max_halvings: int = 4,
) -> GateErrorReport:
    """Z and X error probabilities of one gate, refined until halving dt changes them < 2%."""
    noise = noise or NoiseSpec()
    (p_z, p_x), used, change = _refine(model, noise, steps, refine, max_halvings)
    p_z_na = p_x_na = None
    if noise.kappa1 == 0 and noise.kappa2 == 0:
        p_z_na, p_x_na = p_z, p_x
    elif include_na:
        (p_z_na, p_x_na), _, _ = _refine(model, None, steps, refine, max_halvings)
    alpha_sq = model.bases[0].alpha ** 2
    return GateErrorReport(
        gate=model.kind,
        scheme=model.scheme.value,
        T=model.duration,
        kappa1=noise.kappa1,
        alpha_sq=alpha_sq,
        p_z=p_z,
        p_x=p_x,
        p_z_na=p_z_na,
        p_x_na=p_x_na,
        theta=model.metadata.get("theta"),
        steps=used,
        dt=model.duration / used if used else 0.0,
        halving_change=change,
        delta_theta=float(model.metadata.get("delta_theta", 0.0)),
        time_unit=model.time_unit,
    )


# ---------------------------------------------------------------------------
# process tomography


def pauli_labels(n: int) -> list[str]:
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n)]


def _pauli(label: str) -> np.ndarray:
    out = np.ones((1, 1), complex)
    for ch in label:
        out = np.kron(out, _PAULI[ch])
    return out


@dataclass(frozen=True)
class ChiMatrix:
    """Error channel E(rho~) = sum_mn chi_mn P_m rho~ P_n^dag relative to the ideal image rho~."""

    chi: np.ndarray
    labels: tuple[str, ...]
    condition_number: float
    metadata: dict = field(default_factory=dict)

    def weight(self, label: str) -> float:
        i = self.labels.index(label)
        return float(np.real(self.chi[i, i]))

    @property
    def diagonal(self) -> dict[str, float]:
        return {lab: float(np.real(self.chi[i, i])) for i, lab in enumerate(self.labels)}

    def top(self, k: int = 5, skip_identity: bool = False) -> list[tuple[str, float]]:
        items = sorted(self.diagonal.items(), key=lambda kv: -kv[1])
        if skip_identity:
            items = [kv for kv in items if set(kv[0]) != {"I"}]
        return items[:k]

    @property
    def p_z(self) -> float:
        """Total weight of nontrivial Z-only Paulis."""
        return sum(v for lab, v in self.diagonal.items() if set(lab) <= {"I", "Z"} and set(lab) != {"I"})

    @property
    def p_other(self) -> float:
        """Diagonal weight of every Pauli containing X or Y."""
        return sum(v for lab, v in self.diagonal.items() if set(lab) & {"X", "Y"})

    @property
    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.chi)))

    def to_json(self) -> str:
        return json.dumps(
            {
                "labels": list(self.labels),
                "chi_re": np.real(self.chi).tolist(),
                "chi_im": np.imag(self.chi).tolist(),
                "condition_number": self.condition_number,
                "diagonal": self.diagonal,
                "metadata": self.metadata,
            },
            sort_keys=True,
        )


def _chi_from_outputs(inputs: Sequence[np.ndarray], outputs: np.ndarray, ridge: float = 1e-12):
    """Least-squares chi from ideal-image inputs rho~_k and observed outputs."""
    n = int(round(math.log2(inputs[0].shape[0])))
    labels = pauli_labels(n)
    paulis = [_pauli(lab) for lab in labels]
    M = len(labels)
    rows = []
    for rho in inputs:
        cols = [(Pm @ rho @ Pn.conj().T).reshape(-1) for Pm in paulis for Pn in paulis]
        rows.append(np.stack(cols, axis=1))
    A = np.concatenate(rows, axis=0)
    b = np.concatenate([o.reshape(-1) for o in outputs])
    AhA = A.conj().T @ A
    sv = np.linalg.svd(A, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    x = np.linalg.solve(AhA + ridge * np.eye(AhA.shape[0]), A.conj().T @ b)
    chi = x.reshape(M, M)
    chi = 0.5 * (chi + chi.conj().T)
    return chi, tuple(labels), cond


def process_tomography(
    model: GateModel,
    noise: NoiseSpec | None = None,
    steps: int | None = None,
    ridge: float = 1e-12,
) -> ChiMatrix:
    """Chi matrix from the 4^n product inputs of {|0>, |1>, |+>, |+i>}."""
    n = model.n_modes
    combos = list(itertools.product(["0", "1", "+", "+i"], repeat=n))
    kets = [_product_ket(c) for c in combos]
    outputs = gate_outputs(model, kets, noise, steps)
    U = model.target
    ideal = [U @ np.outer(k, k.conj()) @ U.conj().T for k in kets]
    chi, labels, cond = _chi_from_outputs(ideal, outputs, ridge)
    return ChiMatrix(chi, labels, cond, {"gate": model.kind, "scheme": model.scheme.value,
                                         "T": model.duration, "kappa1": noise.kappa1 if noise else 0.0})


# ---------------------------------------------------------------------------
# sweeps


def error_model_eval(
    p_z_na: float, p_x_na: float, kappa1: float, alpha: float, T: float, beta: float
) -> tuple[float, float]:
    """P_z = P_z^NA + beta kappa1 alpha^2 T and P_x = P_x^NA."""
    for v in (p_z_na, p_x_na, kappa1, alpha, T, beta):
        if v < 0:
            raise ValueError("inputs must be nonnegative")
    return p_z_na + beta * kappa1 * alpha**2 * T, p_x_na


@dataclass(frozen=True)
class SweepPoint:
    T: float
    kappa1: float
    p_z: float
    p_x: float


@dataclass(frozen=True)
class SweepResult:
    scheme: str
    points: tuple[SweepPoint, ...]
    t_star: dict
    p_star: dict
    unimodal: dict
    exponent: float
    exponent_intercept: float
    method: str
    noiseless: tuple = ()  # (T, p_z_na, p_x_na) per grid point when simulated

    def table_rows(self) -> list[dict]:
        return [
            {"scheme": self.scheme, "kappa1": k, "T_star": self.t_star[k], "P_star": self.p_star[k],
             "unimodal": self.unimodal[k]}
            for k in sorted(self.t_star)
        ]


def _run_point(args) -> tuple[float, float, float, float]:
    recipe, kappa1, steps, refine = args
    model = build_model(recipe)
    noise = NoiseSpec(kappa1)
    rep = extract_error_probs(model, noise, steps=steps, refine=refine, include_na=False)
    return model.duration, kappa1, rep.p_z, rep.p_x


def _map(fn, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _minimum(Ts: np.ndarray, pz: np.ndarray) -> tuple[float, float, bool]:
    """Minimum of p_z(T) refined by a parabola in (log T, log p) around the best grid point."""
    i = int(np.argmin(pz))
    d = np.diff(pz)
    unimodal = bool(np.all(d[:i] <= 0) and np.all(d[i:] >= 0))
    if 0 < i < len(Ts) - 1 and np.all(pz[i - 1 : i + 2] > 0):
        x = np.log(Ts[i - 1 : i + 2])
        y = np.log(pz[i - 1 : i + 2])
        c2, c1, c0 = np.polyfit(x, y, 2)
        if c2 > 0:
            xm = float(np.clip(-c1 / (2 * c2), x[0], x[-1]))
            return math.exp(xm), math.exp(c0 + c1 * xm + c2 * xm * xm), unimodal
    return float(Ts[i]), float(pz[i]), unimodal


def sweep_gate_time(
    recipe: dict,
    kappa1s: Sequence[float],
    T_grid: Sequence[float],
    method: str = "linearized",
    kappa_ref: float | None = None,
    steps: int | None = None,
    workers: int = 1,
    refine: bool = False,
) -> SweepResult:
    """Minimal p_z over gate time for each kappa1 and the log-log slope of P*_z vs kappa1.

    ``method="full"`` simulates every (kappa1, T) pair. ``"linearized"`` simulates each T
    noiselessly and at one reference loss rate and uses p_z(kappa1) = p_na + kappa1 * slope,
    exact to first order in kappa1.
    """
    if len(T_grid) < 5:
        raise ValueError("need at least 5 gate times")
    if not kappa1s:
        raise ValueError("need at least one kappa1")
    Ts = np.array(sorted(T_grid), float)
    recipes = [dict(recipe, T=float(T)) for T in Ts]
    points: list[SweepPoint] = []
    noiseless: list[tuple[float, float, float]] = []
    if method == "full":
        jobs = [(r, float(k), steps, refine) for k in kappa1s for r in recipes]
        for T, k, pz, px in _map(_run_point, jobs, workers):
            points.append(SweepPoint(T, k, pz, px))
    elif method == "linearized":
        kref = kappa_ref if kappa_ref is not None else float(np.median(kappa1s))
        na = _map(_run_point, [(r, 0.0, steps, refine) for r in recipes], workers)
        noisy = _map(_run_point, [(r, kref, steps, refine) for r in recipes], workers)
        for (T, _, pz0, px0), (_, _, pz1, px1) in zip(na, noisy):
            noiseless.append((T, pz0, px0))
            sz, sx = (pz1 - pz0) / kref, (px1 - px0) / kref
            for k in kappa1s:
                points.append(SweepPoint(T, float(k), pz0 + k * sz, px0 + k * sx))
    else:
        raise ValueError(f"unknown sweep method {method!r}")

    t_star, p_star, unimodal = {}, {}, {}
    for k in kappa1s:
        pts = sorted((p for p in points if p.kappa1 == k), key=lambda p: p.T)
        ts, pz = np.array([p.T for p in pts]), np.array([p.p_z for p in pts])
        t_star[float(k)], p_star[float(k)], unimodal[float(k)] = _minimum(ts, pz)
    ks = np.array(sorted(p_star))
    if len(ks) >= 2:
        slope, icpt = np.polyfit(np.log(ks), np.log([p_star[k] for k in ks]), 1)
    else:
        slope, icpt = math.nan, math.nan
    return SweepResult(
        scheme=str(recipe.get("scheme", recipe.get("builder"))),
        points=tuple(points),
        t_star=t_star,
        p_star=p_star,
        unimodal=unimodal,
        exponent=float(slope),
        exponent_intercept=float(icpt),
        method=method,
        noiseless=tuple(noiseless),
    )
