"""Logical error rates, empirical scaling fits and optimization of the logical CX error.

Times are in units of 1/K for the Kerr schemes and 1/kappa2 for the dissipative scheme;
``kappa1`` is correspondingly kappa1/K or kappa1/kappa2.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .circuit import CircuitErrorModel, build_and_sample
from .decoder import build_decoding_graph, decode_batch

__all__ = [
    "SCHEMES",
    "EXPONENT_SCALE",
    "FitResult",
    "FitError",
    "LogicalErrorResult",
    "OptimumResult",
    "SurrogateBundle",
    "wilson_interval",
    "t_star",
    "p_z_na_closed_form",
    "circuit_model",
    "logical_error_rate",
    "fit_scaling",
    "calibrate_surrogates",
    "load_default_surrogates",
    "optimize_logical",
    "ETA_GRID",
]

SCHEMES = ("dissipative", "hard", "dbc")
# P_L^Z = A (B x)^{c (d + 1)} with x = kappa1/kappa2, kappa1/K and p0 respectively
EXPONENT_SCALE = {"dissipative": 0.25, "hard": 1.0 / 3.0, "dbc": 0.5}
ETA_GRID = (0.5, 0.75, 1.0, 1.5, 2.0)
MIN_FAILURES = 20
CALIBRATION_KAPPA1S = {"dissipative": (1e-4, 3e-4, 1e-3), "hard": (1e-3, 3e-3, 1e-2)}


class FitError(ValueError):
    pass


def wilson_interval(failures: int, shots: int, z: float = 1.959964) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    p = failures / shots
    den = 1 + z * z / shots
    centre = (p + z * z / (2 * shots)) / den
    half = z * math.sqrt(p * (1 - p) / shots + z * z / (4 * shots * shots)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


def t_star(scheme: str, kappa1: float, alpha_sq: float = 8.0) -> float:
    """Gate time minimizing the physical CX error for the scheme's closed-form error model.

    Dissipative: pi / (8 alpha^2 sqrt(2 kappa1)); hard: (pi^2 / (512 alpha^6 kappa1))^(1/3).
    The DBC scheme has no closed form and returns nan.
    """
    if kappa1 <= 0:
        raise ValueError("kappa1 must be positive")
    if scheme == "dissipative":
        return math.pi / (8 * alpha_sq * math.sqrt(2 * kappa1))
    if scheme == "hard":
        return (math.pi**2 / (512 * alpha_sq**3 * kappa1)) ** (1 / 3)
    if scheme == "dbc":
        return math.nan
    raise ValueError(f"unknown scheme {scheme!r}")


def p_z_na_closed_form(scheme: str, T: float, alpha_sq: float = 8.0) -> float:
    """Non-adiabatic control-qubit Z error of the CX gate.

    Dissipative pi^2 / (64 alpha^2 T), hard pi^2 / (512 alpha^4 T^2); DBC is taken as zero
    over the gate times used here.
    """
    if scheme == "dissipative":
        return math.pi**2 / (64 * alpha_sq * T)
    if scheme == "hard":
        return math.pi**2 / (512 * alpha_sq**2 * T * T)
    if scheme == "dbc":
        return 0.0
    raise ValueError(f"unknown scheme {scheme!r}")


def _loglog_interp(table: Sequence[Sequence[float]], T: float) -> float:
    """Log-log interpolation in a (T, value) table, clamped to the end values outside it."""
    arr = np.array(sorted(table), float)
    vals = np.maximum(arr[:, 1], 1e-300)
    return float(np.exp(np.interp(math.log(T), np.log(arr[:, 0]), np.log(vals))))


@dataclass
class FitResult:
    """P_L^Z = A (B x)^{scale (d + 1)} fitted in log space."""

    A: float
    B: float
    form: str
    scale: float
    residual: float
    n_points: int

    def predict(self, x, d):
        return self.A * (self.B * np.asarray(x, float)) ** (self.scale * (np.asarray(d, float) + 1))

    def to_dict(self) -> dict:
        return asdict(self)


def fit_scaling(points: Sequence[tuple[float, int, float]], form: str | float) -> FitResult:
    """Least-squares fit of log P = log A + e(d) (log B + log x), e(d) = scale (d + 1).

    ``points`` are (x, d, P_L^Z) with P > 0. ``form`` is a scheme name or the scale itself.
    The residual is the RMS deviation in natural log.
    """
    scale = EXPONENT_SCALE[form] if isinstance(form, str) else float(form)
    tag = form if isinstance(form, str) else f"(d+1)*{scale:g}"
    pts = [(float(x), int(d), float(p)) for x, d, p in points]
    if len(pts) < 3:
        raise FitError("need at least 3 points")
    if any(p <= 0 or x <= 0 for x, _, p in pts):
        raise FitError("fit needs positive x and P")
    e = np.array([scale * (d + 1) for _, d, _ in pts])
    lx = np.log([x for x, _, _ in pts])
    y = np.log([p for _, _, p in pts]) - e * lx
    design = np.column_stack([np.ones_like(e), e])
    if np.linalg.matrix_rank(design) < 2:
        raise FitError("rank-deficient fit: need at least two distinct distances")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return FitResult(
        A=float(math.exp(coef[0])),
        B=float(math.exp(coef[1])),
        form=tag,
        scale=scale,
        residual=float(math.sqrt(np.mean(resid**2))),
        n_points=len(pts),
    )


@dataclass
class SurrogateBundle:
    """Calibrated inputs of the logical-error surrogates.

    ``p_x`` and ``p_z_na`` hold (T, value) tables from gate simulations. ``fits`` holds per
    scheme either {"eta": [...], "A": [...], "B": [...]} or a single {"A", "B"} for DBC.
    """

    alpha_sq: float
    p_x: dict
    p_z_na: dict
    fits: dict
    meta: dict = field(default_factory=dict)

    def px(self, scheme: str, T: float) -> float:
        return _loglog_interp(self.p_x[scheme], T)

    def pz_na(self, scheme: str, T: float) -> float:
        if scheme in self.p_z_na:
            return _loglog_interp(self.p_z_na[scheme], T)
        return p_z_na_closed_form(scheme, T, self.alpha_sq)

    def coefficients(self, scheme: str, eta: float | None = None) -> tuple[float, float]:
        fit = self.fits[scheme]
        if "eta" not in fit:
            return fit["A"], fit["B"]
        le = np.log(fit["eta"])
        x = math.log(eta)
        A = math.exp(np.interp(x, le, np.log(fit["A"])))
        B = math.exp(np.interp(x, le, np.log(fit["B"])))
        return A, B

    def eta_range(self, scheme: str) -> tuple[float, float]:
        eta = self.fits[scheme].get("eta", [math.nan])
        return min(eta), max(eta)

    def p_l_z(self, scheme: str, kappa1: float, T: float, d: int) -> float:
        scale = EXPONENT_SCALE[scheme]
        if scheme == "dbc":
            A, B = self.coefficients(scheme)
            x = kappa1 * self.alpha_sq * T
        else:
            A, B = self.coefficients(scheme, T / t_star(scheme, kappa1, self.alpha_sq))
            x = kappa1
        return A * (B * x) ** (scale * (d + 1))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SurrogateBundle":
        return cls(**json.loads(text))


def load_default_surrogates() -> SurrogateBundle:
    """Bundle calibrated with this package's gate simulations and Monte Carlo."""
    text = resources.files(__package__).joinpath("surrogates.json").read_text()
    return SurrogateBundle.from_json(text)


def circuit_model(
    scheme: str,
    kappa1: float,
    T_cx: float,
    alpha_sq: float = 8.0,
    bundle: SurrogateBundle | None = None,
    p_z_na: float | None = None,
    p_x: float | None = None,
) -> CircuitErrorModel:
    """Circuit error model of one scheme from surrogate (or supplied) gate error rates."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if p_z_na is None:
        p_z_na = bundle.pz_na(scheme, T_cx) if bundle else p_z_na_closed_form(scheme, T_cx, alpha_sq)
    if p_x is None:
        p_x = bundle.px(scheme, T_cx) if bundle else 0.0
    return CircuitErrorModel.from_rates(kappa1, T_cx, p_z_na, p_x, alpha_sq, source=f"surrogate:{scheme}")


@dataclass
class LogicalErrorResult:
    kappa1: float
    T_cx: float
    d: int
    scheme: str
    shots: int
    failures: int
    p_l_z: float
    ci_low: float
    ci_high: float
    p_l_x: float
    p_l: float
    seed: int
    ci_ok: bool
    p_x_aggregation: str = "union bound d(d+1) p_x"

    def to_dict(self) -> dict:
        return asdict(self)


def logical_error_rate(
    kappa1: float,
    T_cx: float,
    d: int,
    scheme: str,
    shots: int,
    seed: int = 0,
    alpha_sq: float = 8.0,
    model: CircuitErrorModel | None = None,
    bundle: SurrogateBundle | None = None,
    target_rel_ci: float = 0.5,
) -> LogicalErrorResult:
    """Monte Carlo P_L^Z with MWPM plus the union-bound P_L^X = d (d + 1) p_x.

    ``ci_ok`` is False when the Wilson half-width exceeds ``target_rel_ci`` times the estimate.
    """
    model = model or circuit_model(scheme, kappa1, T_cx, alpha_sq, bundle)
    batch = build_and_sample(d, model, shots, seed)
    graph = build_decoding_graph(d, model)
    fails = int(np.count_nonzero(decode_batch(batch.detectors, graph) != batch.observables))
    lo, hi = wilson_interval(fails, shots)
    p_z = fails / shots
    p_x = min(1.0, d * (d + 1) * model.cx_x)
    ci_ok = fails > 0 and (hi - lo) / 2 <= target_rel_ci * p_z
    return LogicalErrorResult(kappa1, T_cx, d, scheme, shots, fails, p_z, lo, hi, p_x,
                              min(1.0, p_z + p_x), seed, ci_ok)


def _mc_points(scheme, kappa1s, ds, T_of, shots, seed, alpha_sq, x_of):
    pts, raw = [], []
    for i, k in enumerate(kappa1s):
        T = T_of(k)
        model = CircuitErrorModel.from_rates(k, T, p_z_na_closed_form(scheme, T, alpha_sq), 0.0, alpha_sq)
        for d in ds:
            r = logical_error_rate(k, T, d, scheme, shots, seed + 1000 * i + d, alpha_sq, model)
            raw.append(r.to_dict())
            if r.failures >= MIN_FAILURES:
                pts.append((x_of(k, T), d, r.p_l_z))
    return pts, raw


def calibrate_surrogates(
    p_x: dict,
    p_z_na: dict | None = None,
    alpha_sq: float = 8.0,
    etas: Sequence[float] = ETA_GRID,
    kappa1s: dict | None = None,
    dbc_p0s: Sequence[float] = (1e-3, 2e-3, 4e-3),
    ds: Sequence[int] = (3, 5, 7, 9),
    shots: int = 100_000,
    seed: int = 0,
) -> SurrogateBundle:
    """Fit A(eta), B(eta) for the dissipative and hard schemes and A, B for DBC by Monte Carlo.

    Points with fewer than ``MIN_FAILURES`` logical failures are dropped from the fits.
    DBC points set p_z^NA = 0 so the circuit depends on p0 only. ``kappa1s`` maps scheme to
    its loss-rate grid; the hard scheme needs larger rates to see failures at d >= 5.
    """
    kappa1s = {**CALIBRATION_KAPPA1S, **(kappa1s or {})}
    fits: dict = {}
    raw: dict = {}
    for scheme in ("dissipative", "hard"):
        A, B, res = [], [], []
        for j, eta in enumerate(etas):
            pts, rr = _mc_points(
                scheme, kappa1s[scheme], ds,
                lambda k, s=scheme, e=eta: e * t_star(s, k, alpha_sq),
                shots, seed + 100_000 * j, alpha_sq, lambda k, T: k,
            )
            f = fit_scaling(pts, scheme)
            A.append(f.A)
            B.append(f.B)
            res.append(f.residual)
            raw[f"{scheme}:{eta}"] = rr
        fits[scheme] = {"eta": list(map(float, etas)), "A": A, "B": B, "residual": res}
    # DBC: choose T = 1 and vary kappa1 so that p0 runs over dbc_p0s
    ks = [p / alpha_sq for p in dbc_p0s]
    pts, rr = [], []
    for i, k in enumerate(ks):
        model = CircuitErrorModel.from_rates(k, 1.0, 0.0, 0.0, alpha_sq)
        for d in ds:
            r = logical_error_rate(k, 1.0, d, "dbc", shots, seed + 7_000_000 + 1000 * i + d, alpha_sq, model)
            rr.append(r.to_dict())
            if r.failures >= MIN_FAILURES:
                pts.append((model.p0, d, r.p_l_z))
    f = fit_scaling(pts, "dbc")
    fits["dbc"] = {"A": f.A, "B": f.B, "residual": f.residual}
    raw["dbc"] = rr
    meta = {"shots": shots, "seed": seed, "ds": list(ds), "kappa1s": {k: list(v) for k, v in kappa1s.items()},
            "dbc_p0s": list(dbc_p0s), "min_failures": MIN_FAILURES, "mc": raw}
    return SurrogateBundle(alpha_sq, p_x, p_z_na or {}, fits, meta)


@dataclass
class OptimumResult:
    scheme: str
    kappa1: float
    p_l: float
    d: int
    T_cx: float
    p_l_z: float
    p_l_x: float
    on_boundary: bool
    validation: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def optimize_logical(
    kappa1: float,
    scheme: str,
    bundle: SurrogateBundle | None = None,
    ds: Sequence[int] = tuple(range(3, 42, 2)),
    n_T: int = 61,
    dbc_T_range: tuple[float, float] | None = None,
    dbc_na_fraction: float = 0.1,
    mc_shots: int = 0,
    seed: int = 0,
) -> OptimumResult:
    """Minimize P_L = P_L^Z + d (d + 1) p_x over gate time and odd distance on surrogates.

    Dissipative and hard gate times span the calibrated eta range around T*. DBC gate times
    span ``dbc_T_range`` (default: the tabulated p_x range) where the simulated p_z^NA stays
    below ``dbc_na_fraction`` of p0. With
    ``mc_shots`` > 0 the optimum and its neighbouring distances are checked by Monte Carlo.
    """
    bundle = bundle or load_default_surrogates()
    a2 = bundle.alpha_sq
    if scheme == "dbc":
        if dbc_T_range is None:
            ts = [row[0] for row in bundle.p_x["dbc"]]
            dbc_T_range = (max(0.3, min(ts)), max(ts))
        lo, hi = dbc_T_range
        ok = [T for T in np.geomspace(lo, hi, n_T)
              if bundle.pz_na("dbc", T) <= dbc_na_fraction * kappa1 * a2 * T]
        Ts = np.array(ok) if ok else np.array([hi])
        grid_edges = (lo, hi)
    else:
        e_lo, e_hi = bundle.eta_range(scheme)
        ts = t_star(scheme, kappa1, a2)
        Ts = ts * np.geomspace(e_lo, e_hi, n_T)
        grid_edges = (Ts[0], Ts[-1])
    best = None
    for T in Ts:
        px = bundle.px(scheme, float(T))
        for d in ds:
            pz = bundle.p_l_z(scheme, kappa1, float(T), d)
            plx = d * (d + 1) * px
            tot = pz + plx
            if best is None or tot < best[0]:
                best = (tot, d, float(T), pz, plx)
    tot, d, T, pz, plx = best
    on_boundary = (
        math.isclose(T, grid_edges[0], rel_tol=1e-9)
        or math.isclose(T, grid_edges[1], rel_tol=1e-9)
        or d in (ds[0], ds[-1])
    )
    res = OptimumResult(scheme, kappa1, min(1.0, tot), d, T, pz, plx, on_boundary)
    if mc_shots > 0:
        checks = []
        for dd in (d - 2, d, d + 2):
            if dd < 1:
                continue
            r = logical_error_rate(kappa1, T, dd, scheme, mc_shots, seed + dd, a2, bundle=bundle)
            checks.append({"d": dd, "surrogate": bundle.p_l_z(scheme, kappa1, T, dd), **r.to_dict()})
        res.validation = {"shots": mc_shots, "checks": checks}
    return res
