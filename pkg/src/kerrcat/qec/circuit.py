"""Circuit-level Z-fault model and Pauli-frame sampler for the repetition-cat memory.

Layout: ``d`` data qubits and ``d - 1`` ancillas; ancilla ``i`` measures X_i X_{i+1}.
Each noisy round has four steps of one CX duration each:

1. prepare ancillas in |+> (Z fault p0 on each ancilla), data idle (p0);
2. CX ancilla_i -> data_i (CX fault after the gate), data_{d-1} idles;
3. CX ancilla_i -> data_{i+1}, data_0 idles;
4. measure ancillas in X (outcome flip p0), data idle (p0).

``d`` noisy rounds are followed by one perfect round. Detection events compare each
round's outcomes with the previous round; the observable is the Z frame of data qubit 0
at the end (anticommutation with the logical X_0).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "CircuitErrorModel",
    "Location",
    "RepetitionCircuit",
    "SampleBatch",
    "SyndromeRecord",
    "build_and_sample",
    "CHUNK_SHOTS",
]

CHUNK_SHOTS = 4096

# fault kinds
NONE, ZC, ZT, ZCZT = 0, 1, 2, 3


@dataclass(frozen=True)
class CircuitErrorModel:
    """Per-operation Z/X fault probabilities of the syndrome-extraction circuit."""

    p0: float
    cx_zc: float
    cx_zt: float
    cx_zczt: float
    cx_x: float = 0.0
    source: str = "closed-form"
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("p0", "cx_zc", "cx_zt", "cx_zczt", "cx_x"):
            v = getattr(self, name)
            if not (0.0 <= v <= 0.5) or math.isnan(v):
                raise ValueError(f"{name}={v} outside [0, 0.5]")
        if self.cx_zc + self.cx_zt + self.cx_zczt > 1:
            raise ValueError("CX fault probabilities sum above 1")

    @classmethod
    def from_rates(
        cls,
        kappa1: float,
        T_cx: float,
        p_z_na: float = 0.0,
        p_x: float = 0.0,
        alpha_sq: float = 8.0,
        source: str = "closed-form",
    ) -> "CircuitErrorModel":
        """Table of loss-induced rates: idle/prep/meas p0 = kappa1 alpha^2 T_cx; CX Z_c gets p_na + p0,
        Z_t and Z_c Z_t get p0 / 2 each; measurement and preparation X faults are not modelled."""
        p0 = kappa1 * alpha_sq * T_cx
        return cls(
            p0=p0,
            cx_zc=p_z_na + p0,
            cx_zt=0.5 * p0,
            cx_zczt=0.5 * p0,
            cx_x=p_x,
            source=source,
            notes={"kappa1": kappa1, "T_cx": T_cx, "p_z_na": p_z_na, "alpha_sq": alpha_sq,
                   "fault_placement": "after ideal gate", "prep_meas_x": 0.0},
        )

    @classmethod
    def from_p0(cls, p0: float, p_z_na: float = 0.0, p_x: float = 0.0) -> "CircuitErrorModel":
        return cls(p0, p_z_na + p0, 0.5 * p0, 0.5 * p0, p_x, source="p0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Location:
    """A fault site: ``kind`` in {"prep", "idle", "cx", "meas"}; qubits as ("d"|"a", index)."""

    index: int
    round: int
    step: int
    kind: str
    qubits: tuple


@dataclass(frozen=True)
class SyndromeRecord:
    d: int
    rounds: int
    detectors: np.ndarray  # bool (rounds + 1, d - 1)
    logical: bool

    @property
    def defects(self) -> list[tuple[int, int]]:
        return [tuple(map(int, x)) for x in np.argwhere(self.detectors)]


@dataclass
class SampleBatch:
    """Vectorized samples: detectors (shots, n_det) and true observable flips (shots,)."""

    d: int
    rounds: int
    detectors: np.ndarray
    observables: np.ndarray
    seed: int | None = None

    def __len__(self) -> int:
        return self.detectors.shape[0]

    def record(self, k: int) -> SyndromeRecord:
        det = self.detectors[k].reshape(self.rounds + 1, self.d - 1)
        return SyndromeRecord(self.d, self.rounds, det, bool(self.observables[k]))

    def records(self) -> list[SyndromeRecord]:
        return [self.record(k) for k in range(len(self))]


class RepetitionCircuit:
    """Syndrome-extraction circuit with fault locations and exact Z-frame propagation."""

    def __init__(self, d: int, model: CircuitErrorModel, rounds: int | None = None):
        if d < 1 or d % 2 == 0:
            raise ValueError("distance must be odd and >= 1")
        self.d = d
        self.model = model
        self.rounds = d if rounds is None else rounds
        self.n_anc = d - 1
        self.n_det = (self.rounds + 1) * self.n_anc
        self.locations = self._enumerate()

    def _enumerate(self) -> list[Location]:
        d, locs = self.d, []

        def add(r, s, kind, qubits):
            locs.append(Location(len(locs), r, s, kind, qubits))

        for r in range(self.rounds):
            for i in range(self.n_anc):
                add(r, 0, "prep", (("a", i),))
            for j in range(d):
                add(r, 0, "idle", (("d", j),))
            for i in range(self.n_anc):
                add(r, 1, "cx", (("a", i), ("d", i)))
            add(r, 1, "idle", (("d", d - 1),))
            for i in range(self.n_anc):
                add(r, 2, "cx", (("a", i), ("d", i + 1)))
            add(r, 2, "idle", (("d", 0),))
            for i in range(self.n_anc):
                add(r, 3, "meas", (("a", i),))
            for j in range(d):
                add(r, 3, "idle", (("d", j),))
        return locs

    @cached_property
    def _fault_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-location cumulative thresholds over kinds (ZC, ZT, ZCZT) and kind offsets."""
        m = self.model
        thr = np.zeros((len(self.locations), 3))
        for loc in self.locations:
            if loc.kind == "cx":
                thr[loc.index] = np.cumsum([m.cx_zc, m.cx_zt, m.cx_zczt])
            else:
                thr[loc.index] = [m.p0, m.p0, m.p0]
        return thr

    def sample_kinds(self, rng: np.random.Generator, shots: int) -> np.ndarray:
        """Fault kind per (shot, location): 0 none, 1 Z (or Z_c), 2 Z_t, 3 Z_c Z_t."""
        u = rng.random((shots, len(self.locations)))
        thr = self._fault_table
        kinds = (u < thr[None, :, 0]).astype(np.int8)
        is_cx = np.array([loc.kind == "cx" for loc in self.locations])
        if is_cx.any():
            sub = u[:, is_cx]
            t = thr[is_cx]
            k = np.zeros(sub.shape, np.int8)
            k[sub < t[None, :, 2]] = ZCZT
            k[sub < t[None, :, 1]] = ZT
            k[sub < t[None, :, 0]] = ZC
            kinds[:, is_cx] = k
        return kinds

    def propagate(self, kinds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Run the Z frame through the circuit; returns (detectors, observable flips)."""
        shots = kinds.shape[0]
        d, na = self.d, self.n_anc
        zd = np.zeros((shots, d), bool)
        prev = np.zeros((shots, na), bool)
        dets = np.zeros((shots, self.rounds + 1, na), bool)
        locs = self.locations
        k = 0
        for r in range(self.rounds):
            za = np.zeros((shots, na), bool)
            # step 0
            for i in range(na):
                za[:, i] ^= kinds[:, k] != 0
                k += 1
            for j in range(d):
                zd[:, j] ^= kinds[:, k] != 0
                k += 1
            # steps 1 and 2
            for offset in (0, 1):
                for i in range(na):
                    t = i + offset
                    za[:, i] ^= zd[:, t]  # Z on the target copies onto the control
                    kk = kinds[:, k]
                    za[:, i] ^= (kk == ZC) | (kk == ZCZT)
                    zd[:, t] ^= (kk == ZT) | (kk == ZCZT)
                    k += 1
                j = d - 1 if offset == 0 else 0
                zd[:, j] ^= kinds[:, k] != 0
                k += 1
            # step 3
            meas = za.copy()
            for i in range(na):
                meas[:, i] ^= kinds[:, k] != 0
                k += 1
            for j in range(d):
                zd[:, j] ^= kinds[:, k] != 0
                k += 1
            dets[:, r] = meas ^ prev
            prev = meas
        assert k == len(locs)
        final = zd[:, :-1] ^ zd[:, 1:]
        dets[:, self.rounds] = final ^ prev
        return dets.reshape(shots, -1), zd[:, 0].copy()

    def fault_effects(self) -> list[tuple[Location, int, float, np.ndarray, bool]]:
        """(location, kind, probability, detector indices, observable flip) for every single fault."""
        entries = []
        for loc in self.locations:
            kinds = (ZC, ZT, ZCZT) if loc.kind == "cx" else (ZC,)
            for kind in kinds:
                entries.append((loc, kind))
        batch = np.zeros((len(entries), len(self.locations)), np.int8)
        for row, (loc, kind) in enumerate(entries):
            batch[row, loc.index] = kind
        dets, obs = self.propagate(batch)
        m = self.model
        out = []
        for row, (loc, kind) in enumerate(entries):
            if loc.kind == "cx":
                p = {ZC: m.cx_zc, ZT: m.cx_zt, ZCZT: m.cx_zczt}[kind]
            else:
                p = m.p0
            out.append((loc, kind, p, np.flatnonzero(dets[row]), bool(obs[row])))
        return out

    def detector_coords(self, index: int) -> tuple[int, int]:
        return divmod(index, self.n_anc)


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))


def build_and_sample(d: int, model: CircuitErrorModel, shots: int, seed: int = 0) -> SampleBatch:
    """Sample ``shots`` syndrome records. Shots are drawn in fixed chunks, each with its own
    counter-based stream derived from ``seed``, so results do not depend on how chunks are
    distributed."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    circ = RepetitionCircuit(d, model)
    dets, obs = [], []
    for c in range(math.ceil(shots / CHUNK_SHOTS)):
        n = min(CHUNK_SHOTS, shots - c * CHUNK_SHOTS)
        kinds = circ.sample_kinds(_chunk_rng(seed, c), n)
        de, ob = circ.propagate(kinds)
        dets.append(de)
        obs.append(ob)
    return SampleBatch(d, circ.rounds, np.concatenate(dets), np.concatenate(obs), seed)
