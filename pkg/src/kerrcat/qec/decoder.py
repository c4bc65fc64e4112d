"""Space-time matching graph, MWPM decoding and a brute-force pairing oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pymatching
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .circuit import CircuitErrorModel, RepetitionCircuit, SyndromeRecord

__all__ = [
    "DecodingGraph",
    "MatchingDecodeError",
    "build_decoding_graph",
    "mwpm_decode",
    "decode_batch",
    "brute_force_min_weight",
]


class MatchingDecodeError(ValueError):
    pass


def _llr(p: float) -> float:
    return math.log((1 - p) / p)


@dataclass
class DecodingGraph:
    """Edges (u, v, p, observable) with v = -1 for the boundary, merged as independent faults."""

    n_det: int
    edges: dict
    matching: pymatching.Matching

    def weight(self, u: int, v: int) -> float:
        key = (min(u, v), max(u, v)) if v >= 0 else (u, -1)
        return _llr(self.edges[key][0])

    @property
    def boundary(self) -> int:
        return self.n_det

    def distance_matrix(self) -> np.ndarray:
        """All-pairs shortest path lengths over detectors plus a boundary node (last index)."""
        n = self.n_det + 1
        rows, cols, vals = [], [], []
        for (u, v), (p, _) in self.edges.items():
            w = _llr(p)
            v = self.n_det if v < 0 else v
            rows += [u, v]
            cols += [v, u]
            vals += [w, w]
        g = csr_matrix((vals, (rows, cols)), shape=(n, n))
        return dijkstra(g, directed=False)


def build_decoding_graph(d: int, model: CircuitErrorModel, rounds: int | None = None) -> DecodingGraph:
    """Edge weights log((1 - p)/p) per fault mechanism. A correlated Z_c Z_t fault that flips
    more than two detectors is split into its Z_c and Z_t components."""
    circ = RepetitionCircuit(d, model, rounds)
    effects = circ.fault_effects()
    single = {}
    for loc, kind, p, dets, obs in effects:
        single[(loc.index, kind)] = (dets, obs)
    edges: dict = {}

    def add(dets, obs, p):
        if p <= 0 or len(dets) == 0:
            return
        if len(dets) > 2:
            raise MatchingDecodeError(f"fault with {len(dets)} detectors cannot be an edge")
        key = (int(dets[0]), int(dets[1])) if len(dets) == 2 else (int(dets[0]), -1)
        if key in edges:
            q, o = edges[key]
            edges[key] = (q * (1 - p) + p * (1 - q), o)
        else:
            edges[key] = (p, obs)

    for loc, kind, p, dets, obs in effects:
        if len(dets) > 2 and kind == 3:
            for part in (1, 2):
                pd, po = single[(loc.index, part)]
                add(pd, po, p)
        else:
            add(dets, obs, p)

    m = pymatching.Matching()
    n_det = circ.n_det
    for (u, v), (p, obs) in edges.items():
        p_eff = min(p, 0.5 - 1e-12)
        fid = {0} if obs else set()
        if v < 0:
            m.add_boundary_edge(u, fault_ids=fid, weight=_llr(p_eff), error_probability=p_eff)
        else:
            m.add_edge(u, v, fault_ids=fid, weight=_llr(p_eff), error_probability=p_eff)
    if n_det and m.num_detectors < n_det:
        m.set_boundary_nodes(set())
    return DecodingGraph(n_det, edges, m)


def mwpm_decode(record: SyndromeRecord, graph: DecodingGraph, return_weight: bool = False):
    """Predicted logical flip (and matching weight) for one syndrome record."""
    det = np.asarray(record.detectors, np.uint8).reshape(-1)
    if graph.n_det == 0:
        return (False, 0.0) if return_weight else False
    pred, weight = graph.matching.decode(_pad(det, graph), return_weight=True)
    flip = bool(pred[0]) if len(pred) else False
    return (flip, float(weight)) if return_weight else flip


def _pad(det: np.ndarray, graph: DecodingGraph) -> np.ndarray:
    n = graph.matching.num_detectors
    if det.shape[-1] < n:
        pad = np.zeros(det.shape[:-1] + (n - det.shape[-1],), np.uint8)
        det = np.concatenate([det, pad], axis=-1)
    return det


def decode_batch(detectors: np.ndarray, graph: DecodingGraph) -> np.ndarray:
    """Predicted logical flips for a (shots, n_det) detector array."""
    if graph.n_det == 0:
        return np.zeros(detectors.shape[0], bool)
    pred = graph.matching.decode_batch(_pad(detectors.astype(np.uint8), graph))
    if pred.shape[1] == 0:
        return np.zeros(detectors.shape[0], bool)
    return pred[:, 0].astype(bool)


def brute_force_min_weight(defects: list[int], dist: np.ndarray) -> float:
    """Exact minimum total weight pairing defects with each other or with the boundary.

    ``dist`` is the shortest-path matrix whose last row/column is the boundary.
    """
    if len(defects) > 12:
        raise ValueError("brute force limited to 12 defects")
    b = dist.shape[0] - 1
    defects = tuple(defects)

    @lru_cache(maxsize=None)
    def best(mask: int) -> float:
        if mask == 0:
            return 0.0
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        u = defects[i]
        out = dist[u, b] + best(rest)
        m = rest
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            out = min(out, dist[u, defects[j]] + best(rest & ~(1 << j)))
        return out

    return float(best((1 << len(defects)) - 1))
