"""Depolarizing noise on the five physical location types.

One-qubit locations (preparations, measurements, one-qubit gates) draw from
``rho -> (1 - 3e/4) rho + e/4 (X rho X + Y rho Y + Z rho Z)`` by default; the
``total-eps`` convention uses ``e/3`` per letter instead.  Two-qubit gates
draw each of the 15 non-identity two-qubit Paulis with probability ``e/16``.
Faults land after preparations and gates and before measurements.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circuit import CliffordCircuit
from .frame import touched_qubits
from .pauli import PauliOperator

CONVENTIONS = ("three-quarter", "total-eps")

LOCATION_KINDS = ("prep0", "prep+", "measure", "gate2", "gate1")
_KIND_OF_GATE = {"PrepZ": "prep0", "PrepX": "prep+", "MeasurePauli": "measure",
                 "CNOT": "gate2", "CZ": "gate2", "H": "gate1", "P": "gate1",
                 "X": "gate1", "Y": "gate1", "Z": "gate1"}

# single-qubit Pauli codes used by the kernels: bit 0 = X part, bit 1 = Z part
PAULI_CODE = {"I": 0, "X": 1, "Z": 2, "Y": 3}
CODE_LETTER = "IXZY"


@dataclass(frozen=True)
class NoiseParams:
    epsilon: float
    convention: str = "three-quarter"

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {self.convention!r}")

    @property
    def p1(self) -> float:
        """Probability that a one-qubit location suffers a non-identity Pauli."""
        return 0.75 * self.epsilon if self.convention == "three-quarter" else self.epsilon

    @property
    def p2(self) -> float:
        """Probability that a two-qubit location suffers a non-identity Pauli."""
        return min(1.0, 15.0 * self.epsilon / 16.0)


def one_qubit_distribution(epsilon: Fraction, convention: str = "three-quarter") -> dict[str, Fraction]:
    each = epsilon / 4 if convention == "three-quarter" else epsilon / 3
    return {"I": 1 - 3 * each, "X": each, "Y": each, "Z": each}


def two_qubit_distribution(epsilon: Fraction) -> dict[str, Fraction]:
    out = {"II": 1 - 15 * epsilon / 16}
    for a in "IXYZ":
        for b in "IXYZ":
            if a + b != "II":
                out[a + b] = epsilon / 16
    return out


def sample_1q(params: NoiseParams, rng: np.random.Generator) -> PauliOperator:
    if rng.random() >= params.p1:
        return PauliOperator.identity(1)
    return PauliOperator.from_sites(1, [(0, "XYZ"[rng.integers(3)])])


def sample_2q(params: NoiseParams, rng: np.random.Generator) -> PauliOperator:
    if rng.random() >= params.p2:
        return PauliOperator.identity(2)
    k = int(rng.integers(1, 16))
    return PauliOperator.from_sites(2, [(0, "IXYZ"[k & 3]), (1, "IXYZ"[k >> 2])])


@dataclass(frozen=True)
class NoisyLocation:
    location_id: int
    kind: str
    qubits: tuple[int, ...]


def annotate(circuit: CliffordCircuit) -> list[NoisyLocation]:
    """One location per gate of a Table-style kind; idle qubits carry none."""
    out = []
    for g, lid in zip(circuit.gates, circuit.location_ids):
        kind = _KIND_OF_GATE[g.kind]
        qubits = g.qubits if kind != "measure" else g.qubits[:1]
        out.append(NoisyLocation(lid, kind, tuple(qubits)))
    return out


class Segment:
    """A compiled circuit fragment together with its noise-location table.

    ``loc_slot[i]`` is the kernel slot of location ``i``; ``loc_q`` holds its
    qubit(s) (second column -1 for one-qubit locations).
    """

    def __init__(self, name: str, circuit: CliffordCircuit):
        self.name = name
        self.circuit = circuit
        self.ops, owner = circuit.compile()
        self.n_meas = circuit.num_measurements()
        first_op = {}
        last_op = {}
        for k, gi in enumerate(owner):
            first_op.setdefault(int(gi), k)
            last_op[int(gi)] = k
        self.locations = annotate(circuit)
        slots, qs, kinds = [], [], []
        for gi, loc in enumerate(self.locations):
            if loc.kind == "measure":
                slots.append(2 * first_op[gi])
            else:
                slots.append(2 * last_op[gi] + 1)
            qs.append((loc.qubits[0], loc.qubits[1] if len(loc.qubits) > 1 else -1))
            kinds.append(2 if loc.kind == "gate2" else 1)
        self.loc_slot = np.array(slots, dtype=np.int64)
        self.loc_q = np.array(qs, dtype=np.int32).reshape(-1, 2)
        self.loc_arity = np.array(kinds, dtype=np.int8)
        self.one_idx = np.flatnonzero(self.loc_arity == 1)
        self.two_idx = np.flatnonzero(self.loc_arity == 2)
        self.touched = touched_qubits(self.ops)

    def __len__(self) -> int:
        return len(self.locations)

    def events_for(self, shots: np.ndarray, locs: np.ndarray, paulis: np.ndarray):
        """Kernel event arrays for faults ``paulis[i]`` at location ``locs[i]`` on shot ``shots[i]``.

        One-qubit faults use codes 1..3; two-qubit faults use 1..15 with the
        low two bits for the first qubit.
        """
        shots = np.asarray(shots, dtype=np.int64)
        locs = np.asarray(locs, dtype=np.int64)
        paulis = np.asarray(paulis, dtype=np.int64)
        two = self.loc_arity[locs] == 2
        first = np.where(two, paulis & 3, paulis)
        second = np.where(two, paulis >> 2, 0)
        slot = np.concatenate([self.loc_slot[locs], self.loc_slot[locs[two]]])
        q = np.concatenate([self.loc_q[locs, 0], self.loc_q[locs[two], 1]])
        sh = np.concatenate([shots, shots[two]])
        pa = np.concatenate([first, second[two]])
        keep = pa != 0
        slot, q, sh, pa = slot[keep], q[keep], sh[keep], pa[keep]
        order = np.argsort(slot, kind="stable")
        slot, q, sh, pa = slot[order], q[order], sh[order], pa[order]
        return (slot.astype(np.int64), q.astype(np.int32), (sh >> 6).astype(np.int32),
                (np.uint64(1) << (sh & 63).astype(np.uint64)).astype(np.uint64), pa.astype(np.uint8))

    def sample(self, params: NoiseParams, shots: np.ndarray, rng: np.random.Generator):
        """Sample depolarizing faults for the listed shots; returns kernel events."""
        shots = np.asarray(shots, dtype=np.int64)
        S = len(shots)
        all_s, all_l, all_p = [], [], []
        for idx, p, npaulis in ((self.one_idx, params.p1, 3), (self.two_idx, params.p2, 15)):
            total = len(idx) * S
            if total == 0 or p <= 0:
                continue
            count = rng.binomial(total, p)
            if count == 0:
                continue
            flat = rng.choice(total, size=count, replace=False)
            all_s.append(shots[flat // len(idx)])
            all_l.append(idx[flat % len(idx)])
            all_p.append(rng.integers(1, npaulis + 1, size=count))
        if not all_s:
            return None
        return self.events_for(np.concatenate(all_s), np.concatenate(all_l), np.concatenate(all_p))
