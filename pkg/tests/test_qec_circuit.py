import numpy as np
import pytest

from kerrcat.qec import CircuitErrorModel, RepetitionCircuit, build_and_sample


def test_model_validation():
    with pytest.raises(ValueError):
        CircuitErrorModel(0.6, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        CircuitErrorModel(0.1, float("nan"), 0.0, 0.0)
    m = CircuitErrorModel.from_rates(1e-4, 1.0, p_z_na=1e-3, alpha_sq=8.0)
    assert m.p0 == pytest.approx(8e-4)
    assert m.cx_zc == pytest.approx(1.8e-3)
    assert m.cx_zt == m.cx_zczt == pytest.approx(4e-4)


def test_even_distance_rejected():
    with pytest.raises(ValueError):
        RepetitionCircuit(4, CircuitErrorModel.from_p0(0.0))


@pytest.mark.parametrize("d", [1, 3, 5])
def test_noiseless_circuit_is_silent(d):
    batch = build_and_sample(d, CircuitErrorModel.from_p0(0.0), 500, seed=1)
    assert not batch.detectors.any()
    assert not batch.observables.any()
    assert batch.detectors.shape == (500, (d + 1) * (d - 1))


def _single_fault(circ, kind, qubit, rnd):
    loc = next(l for l in circ.locations if l.kind == kind and l.round == rnd and l.qubits[0] == qubit)
    kinds = np.zeros((1, len(circ.locations)), np.int8)
    kinds[0, loc.index] = 1
    dets, obs = circ.propagate(kinds)
    return np.argwhere(dets[0].reshape(circ.rounds + 1, circ.n_anc)), bool(obs[0])


def test_single_data_error_gives_adjacent_pair():
    circ = RepetitionCircuit(5, CircuitErrorModel.from_p0(0.0))
    defects, obs = _single_fault(circ, "idle", ("d", 2), rnd=2)
    assert len(defects) == 2
    (t0, a0), (t1, a1) = defects
    assert t0 == t1 and abs(a0 - a1) == 1
    assert not obs


def test_single_edge_error_hits_boundary():
    circ = RepetitionCircuit(5, CircuitErrorModel.from_p0(0.0))
    defects, obs = _single_fault(circ, "idle", ("d", 0), rnd=1)
    assert len(defects) == 1 and defects[0][1] == 0
    assert obs


def test_measurement_error_gives_time_pair():
    circ = RepetitionCircuit(3, CircuitErrorModel.from_p0(0.0))
    defects, _ = _single_fault(circ, "meas", ("a", 1), rnd=1)
    assert [tuple(x) for x in defects] == [(1, 1), (2, 1)]


def _exact_detection_rates(circ):
    """P(detector fires) with independent locations and exclusive kinds per location."""
    q = np.zeros((len(circ.locations), circ.n_det))
    for loc, _, p, dets, _ in circ.fault_effects():
        q[loc.index, dets] += p
    return 0.5 * (1 - np.prod(1 - 2 * q, axis=0))


def test_defect_density_matches_expectation():
    model = CircuitErrorModel.from_p0(1e-2)
    shots = 100_000
    batch = build_and_sample(3, model, shots, seed=7)
    expected = _exact_detection_rates(RepetitionCircuit(3, model))
    observed = batch.detectors.mean(axis=0)
    sigma = np.sqrt(expected * (1 - expected) / shots)
    assert np.all(np.abs(observed - expected) < 4 * sigma)
    total_sigma = batch.detectors.sum(axis=1).std() / np.sqrt(shots)
    assert abs(observed.sum() - expected.sum()) < 3 * total_sigma


def test_marginal_fault_frequencies():
    model = CircuitErrorModel(0.02, 0.05, 0.03, 0.01)
    circ = RepetitionCircuit(3, model)
    shots = 50_000
    kinds = circ.sample_kinds(np.random.default_rng(3), shots)
    is_cx = np.array([l.kind == "cx" for l in circ.locations])
    n = shots * is_cx.sum()
    for kind, p in ((1, model.cx_zc), (2, model.cx_zt), (3, model.cx_zczt)):
        f = np.count_nonzero(kinds[:, is_cx] == kind) / n
        assert abs(f - p) < 3 * np.sqrt(p * (1 - p) / n)
    m = shots * (~is_cx).sum()
    f = np.count_nonzero(kinds[:, ~is_cx]) / m
    assert abs(f - model.p0) < 3 * np.sqrt(model.p0 * (1 - model.p0) / m)


def test_sampling_is_seed_deterministic():
    model = CircuitErrorModel.from_p0(5e-3)
    a = build_and_sample(5, model, 5000, seed=11)
    b = build_and_sample(5, model, 5000, seed=11)
    c = build_and_sample(5, model, 5000, seed=12)
    assert np.array_equal(a.detectors, b.detectors)
    assert not np.array_equal(a.detectors, c.detectors)
    rec = a.record(0)
    assert rec.detectors.shape == (a.rounds + 1, 4)
