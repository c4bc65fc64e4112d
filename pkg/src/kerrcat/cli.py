"""Batch front-end: ``kerrcat run CONFIG`` executes one experiment, ``kerrcat report DIR`` summarizes.

Configs are JSON files with sections ``experiment``, ``physics``, ``numerics`` and ``output``.
Unknown keys are rejected before any computation. Exit codes: 0 success, 2 invalid config
or unmanifested artifacts, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

OUTPUT_ENV = "KERRCAT_OUTPUT_DIR"
MANIFEST = "manifest.json"
EXPERIMENTS = ("spectrum", "gate-sweep", "time-sweep", "tomography", "qec", "optimize")
GATES = ("z", "zz", "cx")
SCHEME_NAMES = ("hard", "gaussian", "dbc", "dissipative")
QEC_SCHEMES = ("dissipative", "hard", "dbc")

PHYSICS_KEYS = {
    "alpha_sq": 8.0,
    "K": 1.0,
    "kappa2": 1.0,
    "kappa1": None,
    "theta": math.pi / 2,
    "schemes": None,
    "gate": "cx",
}
NUMERICS_KEYS = {
    "fock_dim": 0,
    "n_pairs": None,
    "steps": None,
    "refine": False,
    "T_grid": None,
    "sweep_method": "linearized",
    "kappa_ref": None,
    "shots": 100_000,
    "seed": 0,
    "distances": [3, 5, 7],
    "T_cx": None,
    "mc_shots": 0,
}
OUTPUT_KEYS = {"dir": None}
TOP_KEYS = {"experiment", "physics", "numerics", "output"}
NEEDS_KAPPA1 = {"time-sweep", "tomography", "qec", "optimize", "gate-sweep"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str
    physics: dict
    numerics: dict
    output: dict
    raw: dict = field(repr=False)

    @property
    def seed(self) -> int:
        return int(self.numerics["seed"])

    def digest(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _section(doc: dict, name: str, defaults: dict) -> dict:
    sec = doc.get(name, {}) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(sec) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    return {**defaults, **sec}


def parse_config(doc: dict) -> RunConfig:
    """Validate a config document; raises ConfigError on any problem."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    exp = doc.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
    phys = _section(doc, "physics", PHYSICS_KEYS)
    num = _section(doc, "numerics", NUMERICS_KEYS)
    out = _section(doc, "output", OUTPUT_KEYS)

    if phys["alpha_sq"] <= 0:
        raise ConfigError("alpha_sq must be positive")
    if exp in NEEDS_KAPPA1:
        k = phys["kappa1"]
        if not isinstance(k, list) or not k:
            raise ConfigError("kappa1 must be a non-empty list")
        if any((not isinstance(v, (int, float))) or v < 0 for v in k):
            raise ConfigError("kappa1 values must be nonnegative numbers")
    if exp != "spectrum":
        schemes = phys["schemes"]
        if not isinstance(schemes, list) or not schemes:
            raise ConfigError("schemes must be a non-empty list")
        allowed = QEC_SCHEMES if exp in ("qec", "optimize") else SCHEME_NAMES
        bad = [s for s in schemes if s not in allowed]
        if bad:
            raise ConfigError(f"unknown schemes {bad}; allowed {allowed}")
    if exp in ("gate-sweep", "time-sweep", "tomography") and phys["gate"] not in GATES:
        raise ConfigError(f"gate must be one of {GATES}")
    if exp in ("gate-sweep", "time-sweep"):
        grid = num["T_grid"]
        if not isinstance(grid, list) or not grid or any(t <= 0 for t in grid):
            raise ConfigError("T_grid must be a non-empty list of positive times")
        if exp == "time-sweep" and len(grid) < 5:
            raise ConfigError("time-sweep needs at least 5 gate times")
        if num["sweep_method"] not in ("linearized", "full"):
            raise ConfigError("sweep_method must be 'linearized' or 'full'")
    if exp in ("tomography", "qec") and not isinstance(num["T_cx"], (int, float)):
        raise ConfigError("numerics.T_cx must be a number")
    if exp == "qec":
        ds = num["distances"]
        if not ds or any((not isinstance(d, int)) or d < 1 or d % 2 == 0 for d in ds):
            raise ConfigError("distances must be odd positive integers")
    if int(num["shots"]) < 1:
        raise ConfigError("shots must be >= 1")
    return RunConfig(exp, phys, num, out, doc)


def load_config(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(doc)


# ---------------------------------------------------------------------------
# experiments


def _recipe(cfg: RunConfig, scheme: str, T: float) -> dict:
    p, n = cfg.physics, cfg.numerics
    extra = {"fock_dim": int(n["fock_dim"])}
    if n["n_pairs"]:
        extra["n_pairs"] = int(n["n_pairs"])
    if scheme == "dissipative":
        return {"builder": "dissipative", "kind": p["gate"], "T": T, "kappa2": p["kappa2"],
                "alpha_sq": p["alpha_sq"], "theta": p["theta"], **extra}
    base = {"T": T, "scheme": scheme, "K": p["K"], "alpha_sq": p["alpha_sq"], **extra}
    if p["gate"] == "cx":
        return {"builder": "cx", **base}
    return {"builder": p["gate"], "theta": p["theta"], **base}


def _csv_text(fields: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in fields})
    return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _time_unit(scheme: str) -> str:
    return "1/kappa2" if scheme == "dissipative" else "1/K"


def run_spectrum(cfg: RunConfig, workers: int) -> dict:
    from .hilbert import ModeSpace, diagonalize_kerr_cat, reduced_couplings

    space = ModeSpace.from_alpha_sq(cfg.physics["alpha_sq"], int(cfg.numerics["fock_dim"]))
    spec = diagonalize_kerr_cat(space, cfg.physics["K"])
    rc = reduced_couplings(space, spec)
    doc = {
        "alpha_sq": cfg.physics["alpha_sq"],
        "K": cfg.physics["K"],
        "fock_dim": space.fock_dim,
        "n_pairs": spec.n_pairs,
        "delta0": float(spec.splittings[0]),
        "Delta1": float(spec.gaps[1]),
        "gaps": [float(g) for g in spec.gaps],
        "splittings": [float(s) for s in spec.splittings],
        "lambda1": rc.lambda1,
        "lambda2": rc.lambda2,
        "eta_me": rc.eta_me,
    }
    return {"spectrum.json": json.dumps(doc, indent=1, sort_keys=True) + "\n"}


def run_gate_sweep(cfg: RunConfig, workers: int) -> dict:
    from .control import build_model
    from .dynamics import NoiseSpec
    from .gatechar import extract_error_probs

    rows = []
    n = cfg.numerics
    for scheme in cfg.physics["schemes"]:
        for k in cfg.physics["kappa1"]:
            for T in n["T_grid"]:
                model = build_model(_recipe(cfg, scheme, float(T)))
                rep = extract_error_probs(model, NoiseSpec(float(k)), steps=n["steps"], refine=bool(n["refine"]),
                                          include_na=False)
                d = rep.to_dict()
                d.update(scheme=scheme, time_unit=_time_unit(scheme), seed=cfg.seed)
                rows.append(d)
    fields = ["gate", "scheme", "T", "time_unit", "kappa1", "alpha_sq", "p_z", "p_x", "theta", "steps", "dt",
              "halving_change", "delta_theta", "seed"]
    return {"gate_sweep.csv": _csv_text(fields, rows)}


def run_time_sweep(cfg: RunConfig, workers: int) -> dict:
    from .gatechar import sweep_gate_time

    rows, fits = [], {}
    n = cfg.numerics
    for scheme in cfg.physics["schemes"]:
        res = sweep_gate_time(
            _recipe(cfg, scheme, 1.0), cfg.physics["kappa1"], n["T_grid"], method=n["sweep_method"],
            kappa_ref=n["kappa_ref"], steps=n["steps"], workers=workers, refine=bool(n["refine"]),
        )
        for r in res.table_rows():
            rows.append({**r, "scheme": scheme, "time_unit": _time_unit(scheme)})
        fits[scheme] = {"exponent": res.exponent, "intercept": res.exponent_intercept, "method": res.method,
                        "noiseless": [list(x) for x in res.noiseless],
                        "points": [[p.T, p.kappa1, p.p_z, p.p_x] for p in res.points]}
    fields = ["scheme", "kappa1", "T_star", "P_star", "unimodal", "time_unit"]
    return {"time_sweep.csv": _csv_text(fields, rows),
            "time_sweep_fits.json": json.dumps(fits, indent=1, sort_keys=True) + "\n"}


def run_tomography(cfg: RunConfig, workers: int) -> dict:
    from .control import build_model
    from .dynamics import NoiseSpec
    from .gatechar import extract_error_probs, process_tomography

    out, rows = {}, []
    n = cfg.numerics
    for scheme in cfg.physics["schemes"]:
        for k in cfg.physics["kappa1"]:
            model = build_model(_recipe(cfg, scheme, float(n["T_cx"])))
            noise = NoiseSpec(float(k))
            chi = process_tomography(model, noise, steps=n["steps"])
            rep = extract_error_probs(model, noise, steps=n["steps"], refine=False, include_na=False)
            rows.append({"scheme": scheme, "kappa1": float(k), "T": float(n["T_cx"]), "p_z_tomo": chi.p_z,
                         "p_other_tomo": chi.p_other, "p_z": rep.p_z, "p_x": rep.p_x,
                         "min_eigenvalue": chi.min_eigenvalue, "condition_number": chi.condition_number})
            out[f"chi_{scheme}_{k:g}.json"] = chi.to_json() + "\n"
    fields = ["scheme", "kappa1", "T", "p_z_tomo", "p_other_tomo", "p_z", "p_x", "min_eigenvalue",
              "condition_number"]
    out["tomography.csv"] = _csv_text(fields, rows)
    return out


def run_qec(cfg: RunConfig, workers: int) -> dict:
    from .qec.analysis import load_default_surrogates, logical_error_rate

    bundle = load_default_surrogates()
    rows = []
    n = cfg.numerics
    i = 0
    for scheme in cfg.physics["schemes"]:
        for k in cfg.physics["kappa1"]:
            for d in n["distances"]:
                r = logical_error_rate(float(k), float(n["T_cx"]), int(d), scheme, int(n["shots"]),
                                       seed=cfg.seed + i, alpha_sq=cfg.physics["alpha_sq"], bundle=bundle)
                rows.append(r.to_dict())
                i += 1
    fields = ["scheme", "kappa1", "T_cx", "d", "shots", "failures", "p_l_z", "ci_low", "ci_high", "p_l_x", "p_l",
              "seed", "ci_ok", "p_x_aggregation"]
    return {"qec.csv": _csv_text(fields, rows)}


def run_optimize(cfg: RunConfig, workers: int) -> dict:
    from .qec.analysis import load_default_surrogates, optimize_logical

    bundle = load_default_surrogates()
    rows = []
    for scheme in cfg.physics["schemes"]:
        for k in cfg.physics["kappa1"]:
            if k <= 0:
                raise ConfigError("optimize needs positive kappa1 values")
            r = optimize_logical(float(k), scheme, bundle, mc_shots=int(cfg.numerics["mc_shots"]), seed=cfg.seed)
            d = r.to_dict()
            d["time_unit"] = _time_unit(scheme)
            d["validation"] = json.dumps(d["validation"], sort_keys=True) if d["validation"] else ""
            rows.append(d)
    fields = ["scheme", "kappa1", "p_l", "d", "T_cx", "time_unit", "p_l_z", "p_l_x", "on_boundary", "validation"]
    return {"optimize.csv": _csv_text(fields, rows),
            "surrogates.json": bundle.to_json() + "\n"}


RUNNERS = {
    "spectrum": run_spectrum,
    "gate-sweep": run_gate_sweep,
    "time-sweep": run_time_sweep,
    "tomography": run_tomography,
    "qec": run_qec,
    "optimize": run_optimize,
}


def _numerical_errors() -> tuple:
    from .dynamics import PropagationError
    from .gatechar import ConvergenceError
    from .hilbert import TruncationError
    from .qec.analysis import FitError

    return (PropagationError, ConvergenceError, TruncationError, FitError, np.linalg.LinAlgError,
            FloatingPointError)


def run(cfg: RunConfig, outdir: str | Path, workers: int = 1) -> int:
    """Execute one experiment and write its artifacts plus a manifest into ``outdir``."""
    outdir = Path(outdir)
    start = time.perf_counter()
    try:
        files = RUNNERS[cfg.experiment](cfg, workers)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except _numerical_errors() as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    outdir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (outdir / name).write_text(text, encoding="utf-8")
    manifest = {
        "experiment": cfg.experiment,
        "config": cfg.raw,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - start, 3),
        "artifacts": sorted(files),
        "workers": workers,
    }
    (outdir / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# report


def _read_csv(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _table(headers: list[str], rows: list[list]) -> str:
    cells = [[str(h) for h in headers]] + [[_short(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _short(v) -> str:
    try:
        x = float(v)
    except (TypeError, ValueError):
        return str(v)
    if x == int(x) and abs(x) < 1e6:
        return str(int(x))
    return f"{x:.4g}"


def report(outdir: str | Path, stream=None) -> int:
    """Print a summary table of the artifacts in ``outdir``."""
    stream = stream or sys.stdout
    outdir = Path(outdir)
    files = [p for p in outdir.iterdir()] if outdir.is_dir() else []
    if not files:
        print("no results", file=stream)
        return 0
    mpath = outdir / MANIFEST
    if not mpath.exists():
        print(f"refusing to report: no {MANIFEST} in {outdir}", file=sys.stderr)
        return 2
    try:
        manifest = json.loads(mpath.read_text())
        exp = manifest["experiment"]
    except (json.JSONDecodeError, KeyError) as exc:
        print(f"corrupt manifest: {exc}", file=sys.stderr)
        return 2
    print(f"{exp}  (version {manifest.get('version')}, seed {manifest.get('seed')}, "
          f"config {manifest.get('config_sha256', '')[:12]})", file=stream)
    if exp == "spectrum":
        doc = json.loads((outdir / "spectrum.json").read_text())
        keys = ["Delta1", "delta0", "lambda1", "lambda2", "eta_me"]
        print(_table(keys, [[doc[k] for k in keys]]), file=stream)
    elif exp == "gate-sweep":
        rows = _read_csv(outdir / "gate_sweep.csv")
        best = {}
        for r in rows:
            key = (r["scheme"], r["kappa1"])
            if key not in best or float(r["p_z"]) < float(best[key]["p_z"]):
                best[key] = r
        print(_table(["scheme", "kappa1", "T(min p_z)", "p_z", "p_x"],
                     [[s, k, r["T"], r["p_z"], r["p_x"]] for (s, k), r in sorted(best.items())]), file=stream)
    elif exp == "time-sweep":
        rows = _read_csv(outdir / "time_sweep.csv")
        print(_table(["scheme", "kappa1", "T*", "P*_z"],
                     [[r["scheme"], r["kappa1"], r["T_star"], r["P_star"]] for r in rows]), file=stream)
        fits = json.loads((outdir / "time_sweep_fits.json").read_text())
        print(_table(["scheme", "exponent"], [[s, f["exponent"]] for s, f in sorted(fits.items())]), file=stream)
    elif exp == "tomography":
        for name in sorted(n for n in manifest["artifacts"] if n.startswith("chi_")):
            doc = json.loads((outdir / name).read_text())
            diag = sorted(doc["diagonal"].items(), key=lambda kv: -kv[1])[:5]
            print(name, file=stream)
            print(_table(["pauli", "chi"], [[k, v] for k, v in diag]), file=stream)
    elif exp == "qec":
        rows = _read_csv(outdir / "qec.csv")
        print(_table(["scheme", "kappa1", "d", "P_L^Z", "ci_low", "ci_high", "P_L^X", "P_L"],
                     [[r["scheme"], r["kappa1"], r["d"], r["p_l_z"], r["ci_low"], r["ci_high"], r["p_l_x"],
                       r["p_l"]] for r in rows]), file=stream)
    elif exp == "optimize":
        rows = _read_csv(outdir / "optimize.csv")
        print(_table(["scheme", "kappa1", "P_L**", "d**", "T_cx**", "boundary"],
                     [[r["scheme"], r["kappa1"], r["p_l"], r["d"], r["T_cx"], r["on_boundary"]] for r in rows]),
              file=stream)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="kerrcat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiment described by a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--threads", type=int, default=None, help="worker processes for independent points")
    p_run.add_argument("--output", default=None, help=f"output directory (default: config, then ${OUTPUT_ENV})")
    p_rep = sub.add_parser("report", help="summarize the artifacts of a run")
    p_rep.add_argument("directory")
    args = parser.parse_args(argv)

    if args.command == "report":
        return report(args.directory)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    outdir = args.output or cfg.output["dir"] or os.environ.get(OUTPUT_ENV) or "kerrcat-results"
    workers = args.threads if args.threads is not None else 1
    if workers < 1:
        print("invalid config: --threads must be >= 1", file=sys.stderr)
        return 2
    return run(cfg, outdir, workers)


if __name__ == "__main__":
    sys.exit(main())
