"""Pauli-frame propagation: exact operator conjugation and packed batch frames."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .circuit import OP_CNOT, OP_CZ, OP_MFLUSH, CliffordCircuit, CliffordGate
from .pauli import PauliOperator


class UnsupportedOperation(ValueError):
    pass


def conjugate_gate(p: PauliOperator, g: CliffordGate) -> PauliOperator:
    """g p g^dagger, phase-exact."""
    x, z, ph = p.x, p.z, p.phase
    if g.kind == "MeasurePauli":
        raise UnsupportedOperation("conjugation through a measurement")
    if g.kind in ("PrepZ", "PrepX"):
        raise UnsupportedOperation("conjugation through a preparation")
    a = g.qubits[0]
    xa, za = (x >> a) & 1, (z >> a) & 1
    if g.kind == "H":
        ph += 2 * (xa & za)
        if xa != za:
            x ^= 1 << a
            z ^= 1 << a
    elif g.kind == "P":
        ph += 2 * (xa & za)
        z ^= xa << a
    elif g.kind == "X":
        ph += 2 * za
    elif g.kind == "Z":
        ph += 2 * xa
    elif g.kind == "Y":
        ph += 2 * (xa ^ za)
    else:
        b = g.qubits[1]
        xb, zb = (x >> b) & 1, (z >> b) & 1
        if g.kind == "CNOT":
            ph += 2 * (xa & zb & (xb ^ za ^ 1))
            x ^= xa << b
            z ^= zb << a
        else:  # CZ
            ph += 2 * (xa & xb & (za ^ zb))
            z ^= (xb << a) | (xa << b)
    return PauliOperator(p.n, x, z, ph)


def conjugate(circuit: CliffordCircuit | list[CliffordGate], e: PauliOperator) -> PauliOperator:
    """C e C^dagger gate by gate.  Measurements and preparations are rejected."""
    n = circuit.n if isinstance(circuit, CliffordCircuit) else e.n
    if e.n != n:
        raise ValueError(f"operator has {e.n} qubits, circuit has {n}")
    for g in circuit:
        e = conjugate_gate(e, g)
    return e


@dataclass
class PauliFrame:
    n: int
    error: PauliOperator = None
    flips: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.error is None:
            self.error = PauliOperator.identity(self.n)


def frame_propagate(circuit: CliffordCircuit, injected: dict[int, PauliOperator] | None = None,
                    rng=None) -> PauliFrame:
    """Push injected faults through the circuit.

    A fault at a location is applied after the gate, except at measurement
    locations where it is applied just before readout.  ``rng`` is unused
    (propagation is deterministic) and kept for interface symmetry.
    """
    injected = injected or {}
    valid = set(circuit.location_ids)
    bad = set(injected) - valid
    if bad:
        raise ValueError(f"unknown location ids {sorted(bad)}")
    frame = PauliFrame(circuit.n)
    e = frame.error
    for g, lid in zip(circuit.gates, circuit.location_ids):
        fault = injected.get(lid)
        if g.kind == "MeasurePauli":
            if fault is not None:
                e = e * fault
            frame.flips.append(int(not e.commutes(g.pauli)))
            continue
        if g.kind in ("PrepZ", "PrepX"):
            q = g.qubits[0]
            keep = ~(1 << q)
            e = PauliOperator(e.n, e.x & keep, e.z & keep, e.phase)
        else:
            e = conjugate_gate(e, g)
        if fault is not None:
            e = e * fault
    frame.error = e.unsigned()
    return frame


_NO_EVENTS = (np.zeros(0, np.int64), np.zeros(0, np.int32), np.zeros(0, np.int32),
              np.zeros(0, np.uint64), np.zeros(0, np.uint8))


class BatchFrames:
    """Pauli frames for ``shots`` independent shots, packed 64 per word."""

    def __init__(self, n: int, shots: int, kernels=None):
        self.n = n
        self.shots = shots
        self.words = (shots + 63) // 64
        self.fx = np.zeros((n, self.words), dtype=np.uint64)
        self.fz = np.zeros((n, self.words), dtype=np.uint64)
        self.k = kernels or _backend.kernels

    def run(self, ops: np.ndarray, n_meas: int, events=None, active: np.ndarray | None = None,
            touched: np.ndarray | None = None) -> np.ndarray:
        """Execute ops; returns flips as a packed (n_meas, words) array.

        With an ``active`` word mask the frames of inactive shots on the
        ``touched`` qubits are restored afterwards, so the segment behaves as
        if it ran only for the active shots.
        """
        rec = np.zeros((max(n_meas, 1), self.words), dtype=np.uint64)
        if active is not None:
            if touched is None:
                touched = touched_qubits(ops)
            sx, sz = self.fx[touched].copy(), self.fz[touched].copy()
        self.k.frame_run(ops, self.fx, self.fz, rec, *(events if events is not None else _NO_EVENTS))
        if active is not None:
            keep = ~active
            self.fx[touched] = (self.fx[touched] & active) | (sx & keep)
            self.fz[touched] = (self.fz[touched] & active) | (sz & keep)
            rec &= active
        return rec[:n_meas]

    def bits(self, q: int, which: str = "x") -> np.ndarray:
        return unpack_bits(self.fx[q] if which == "x" else self.fz[q], self.shots)

    def block_masks(self, qubits: range) -> tuple[np.ndarray, np.ndarray]:
        """Per-shot integer (x, z) masks of the frame restricted to ``qubits``."""
        xs = np.zeros(self.shots, dtype=np.int64)
        zs = np.zeros(self.shots, dtype=np.int64)
        for j, q in enumerate(qubits):
            xs |= unpack_bits(self.fx[q], self.shots).astype(np.int64) << j
            zs |= unpack_bits(self.fz[q], self.shots).astype(np.int64) << j
        return xs, zs

    def apply_masks(self, qubits: range, xs: np.ndarray, zs: np.ndarray) -> None:
        """XOR per-shot (x, z) masks onto the frame of ``qubits``."""
        for j, q in enumerate(qubits):
            self.fx[q] ^= pack_bits((xs >> j) & 1)
            self.fz[q] ^= pack_bits((zs >> j) & 1)


def touched_qubits(ops: np.ndarray) -> np.ndarray:
    codes = ops[:, 0]
    two = (codes == OP_CNOT) | (codes == OP_CZ)
    return np.unique(np.concatenate([ops[codes != OP_MFLUSH, 1], ops[two, 2]]))


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Little-endian pack of a 0/1 vector into uint64 words."""
    b = np.asarray(bits, dtype=np.uint8)
    pad = (-len(b)) % 64
    if pad:
        b = np.concatenate([b, np.zeros(pad, np.uint8)])
    return np.packbits(b.reshape(-1, 64), axis=1, bitorder="little").view("<u8").reshape(-1).astype(np.uint64)


def unpack_bits(words: np.ndarray, count: int) -> np.ndarray:
    w = np.ascontiguousarray(words, dtype="<u8")
    return np.unpackbits(w.view(np.uint8), bitorder="little")[:count]
