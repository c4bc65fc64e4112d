import csv
import io
import json
import math

import numpy as np
import pytest

from kerrcat.control import idle_gate, z_rotation_gate
from kerrcat.dynamics import NoiseSpec
from kerrcat.gatechar import (
    GateErrorReport,
    error_model_eval,
    extract_error_probs,
    process_tomography,
    reports_to_csv,
    sweep_gate_time,
)


def test_short_identity_has_no_errors():
    rep = extract_error_probs(idle_gate(1e-3))
    assert rep.p_z < 1e-10 and rep.p_x < 1e-10
    assert rep.bias == math.inf


def test_z_rotation_loss_asymptote():
    k1, T, alpha_sq = 1e-3, 4.0, 8.0
    rep = extract_error_probs(z_rotation_gate(math.pi / 2, T, "dbc"), NoiseSpec(k1))
    x = k1 * alpha_sq * T
    # dephasing at rate 2 kappa1 alpha^2 flips with probability (1 - exp(-2x)) / 2
    assert rep.p_z - rep.p_z_na == pytest.approx((1 - math.exp(-2 * x)) / 2, rel=0.03)
    assert rep.halving_change < 0.02


def test_identity_channel_chi():
    chi = process_tomography(idle_gate(1e-3))
    assert chi.weight("I") == pytest.approx(1.0, abs=1e-10)
    off = chi.chi.copy()
    off[0, 0] = 0
    assert np.max(np.abs(off)) < 1e-10
    assert np.trace(chi.chi).real == pytest.approx(1.0, abs=1e-6)
    assert chi.min_eigenvalue > -1e-7
    assert chi.p_z < 1e-10 and chi.p_other < 1e-10
    data = json.loads(chi.to_json())
    assert data["labels"] == ["I", "X", "Y", "Z"]


def test_error_model_eval():
    assert error_model_eval(1e-5, 2e-9, 0.0, 3.0, 1.0, 2) == (1e-5, 2e-9)
    pz, px = error_model_eval(1e-5, 0.0, 1e-3 / 8, math.sqrt(8), 1.0, 2)
    assert pz == pytest.approx(2.01e-3)
    with pytest.raises(ValueError):
        error_model_eval(-1e-5, 0.0, 0.0, 1.0, 1.0, 1)


def _report(**kw):
    base = dict(gate="cx", scheme="dbc", T=1.0, kappa1=5e-5, alpha_sq=8.0, p_z=8e-4, p_x=1.4e-8)
    base.update(kw)
    return GateErrorReport(**base)


def test_report_serialization():
    rep = _report()
    assert rep.bias == pytest.approx(8e-4 / 1.4e-8)
    assert json.loads(rep.to_json())["p_z"] == 8e-4
    rows = list(csv.DictReader(io.StringIO(reports_to_csv([rep, _report(p_x=0.0)]))))
    assert len(rows) == 2
    assert float(rows[0]["p_z"]) == 8e-4
    assert rows[1]["bias"] == "inf"
    assert rows[0]["p_z_na"] == ""


def test_sweep_validation():
    with pytest.raises(ValueError):
        sweep_gate_time(dict(builder="identity"), [1e-4], [1, 2, 3])
    with pytest.raises(ValueError):
        sweep_gate_time(dict(builder="identity"), [], [1, 2, 3, 4, 5])
    with pytest.raises(ValueError):
        sweep_gate_time(dict(builder="identity"), [1e-4], [1, 2, 3, 4, 5], method="bogus")


def test_noiseless_optimum_at_longest_time():
    res = sweep_gate_time(
        dict(builder="z", theta=math.pi / 2, scheme="dbc"), [0.0], [0.2, 0.3, 0.5, 0.8, 1.2], method="full"
    )
    assert res.t_star[0.0] == pytest.approx(1.2)


def test_idle_sweep_exponent_is_linear():
    # an idle only dephases, so the optimum sits at the shortest time and scales as kappa1
    res = sweep_gate_time(dict(builder="identity"), [1e-4, 1e-3], [0.1, 0.2, 0.4, 0.8, 1.6], kappa_ref=1e-3)
    assert all(t == pytest.approx(0.1) for t in res.t_star.values())
    assert res.exponent == pytest.approx(1.0, abs=1e-3)
    assert len(res.noiseless) == 5
