import numpy as np
import pytest

from kerrcat.qec import (
    CircuitErrorModel,
    SyndromeRecord,
    brute_force_min_weight,
    build_and_sample,
    build_decoding_graph,
    decode_batch,
    mwpm_decode,
)


@pytest.fixture(scope="module")
def graph3():
    return build_decoding_graph(3, CircuitErrorModel.from_p0(0.05), rounds=2)


def _record(graph, d, rounds, defects):
    det = np.zeros(graph.n_det, bool)
    det[list(defects)] = True
    return SyndromeRecord(d, rounds, det.reshape(rounds + 1, d - 1), False)


def test_empty_syndrome(graph3):
    flip, w = mwpm_decode(_record(graph3, 3, 2, []), graph3, return_weight=True)
    assert not flip and w == 0.0


def test_adjacent_pair_matched_together(graph3):
    flip, w = mwpm_decode(_record(graph3, 3, 2, [0, 1]), graph3, return_weight=True)
    assert not flip
    assert w == pytest.approx(graph3.weight(0, 1), rel=1e-6)


def test_matches_brute_force_oracle(graph3):
    rng = np.random.default_rng(2024)
    dist = graph3.distance_matrix()
    bad = 0
    for _ in range(1000):
        k = int(rng.integers(1, min(8, graph3.n_det) + 1))
        defects = sorted(rng.choice(graph3.n_det, size=k, replace=False).tolist())
        _, w = mwpm_decode(_record(graph3, 3, 2, defects), graph3, return_weight=True)
        if abs(w - brute_force_min_weight(defects, dist)) > 1e-6 * max(1.0, w):
            bad += 1
    assert bad == 0


def test_brute_force_limit():
    with pytest.raises(ValueError):
        brute_force_min_weight(list(range(13)), np.zeros((14, 14)))


def test_quiet_records_never_fail():
    model = CircuitErrorModel.from_p0(1e-2)
    graph = build_decoding_graph(5, model)
    pred = decode_batch(np.zeros((100, graph.n_det), bool), graph)
    assert not pred.any()


def test_single_faults_are_corrected():
    model = CircuitErrorModel.from_p0(1e-3)
    graph = build_decoding_graph(5, model)
    batch = build_and_sample(5, model, 20_000, seed=5)
    n_def = batch.detectors.sum(axis=1)
    sparse = n_def <= 2
    pred = decode_batch(batch.detectors[sparse], graph)
    assert np.mean(pred != batch.observables[sparse]) < 1e-3


def test_logical_rate_falls_with_distance_below_threshold():
    model = CircuitErrorModel.from_p0(3e-3)
    rates = []
    for d in (3, 5):
        batch = build_and_sample(d, model, 40_000, seed=d)
        g = build_decoding_graph(d, model)
        rates.append(np.mean(decode_batch(batch.detectors, g) != batch.observables))
    assert rates[1] < rates[0] / 2
