"""Exact stabilizer-tableau simulation (destabilizer method)."""

from __future__ import annotations

import numpy as np

from . import _backend
from .circuit import CliffordCircuit, CliffordGate
from .pauli import PauliOperator


def _pack(mask: int, words: int) -> np.ndarray:
    return np.array([(mask >> (64 * w)) & ((1 << 64) - 1) for w in range(words)], dtype=np.uint64)


def _unpack(row: np.ndarray) -> int:
    return sum(int(v) << (64 * w) for w, v in enumerate(row))


class CliffordTableau:
    """Stabilizer state on n qubits, initialised to |0...0>.

    ``rng`` may be a seed or a ``numpy.random.Generator``; measurement coins
    come from a splitmix64 stream seeded from it so the compiled and numpy
    kernels produce identical outcomes.
    """

    def __init__(self, n: int, seed: int | np.random.Generator | None = 0, kernels=None):
        self.n = n
        self.words = (n + 63) // 64
        rows = 2 * n + 1
        self.xs = np.zeros((rows, self.words), dtype=np.uint64)
        self.zs = np.zeros((rows, self.words), dtype=np.uint64)
        self.r = np.zeros(rows, dtype=np.uint8)
        for q in range(n):
            self.xs[q, q >> 6] |= np.uint64(1 << (q & 63))
            self.zs[n + q, q >> 6] |= np.uint64(1 << (q & 63))
        if isinstance(seed, np.random.Generator):
            seed = int(seed.integers(0, 2**63))
        self.state = int(seed or 0) & ((1 << 64) - 1)
        self.k = kernels or _backend.kernels

    def copy(self) -> CliffordTableau:
        t = CliffordTableau.__new__(CliffordTableau)
        t.n, t.words, t.k, t.state = self.n, self.words, self.k, self.state
        t.xs, t.zs, t.r = self.xs.copy(), self.zs.copy(), self.r.copy()
        return t

    # -- rows as Pauli operators ---------------------------------------------
    def row(self, i: int) -> PauliOperator:
        return PauliOperator(self.n, _unpack(self.xs[i]), _unpack(self.zs[i]), 2 * int(self.r[i]))

    def stabilizers(self) -> list[PauliOperator]:
        return [self.row(self.n + i) for i in range(self.n)]

    def destabilizers(self) -> list[PauliOperator]:
        return [self.row(i) for i in range(self.n)]

    def check_invariants(self) -> None:
        """Raise AssertionError unless rows form a symplectic basis."""
        d, s = self.destabilizers(), self.stabilizers()
        for i in range(self.n):
            for j in range(self.n):
                assert d[i].commutes(s[j]) == (i != j), f"destab {i} vs stab {j}"
                if i < j:
                    assert s[i].commutes(s[j]), f"stabilizers {i},{j} anticommute"
                    assert d[i].commutes(d[j]), f"destabilizers {i},{j} anticommute"

    # -- evolution ------------------------------------------------------------
    def run_ops(self, ops: np.ndarray, n_meas: int, events=None) -> tuple[np.ndarray, np.ndarray]:
        out = np.zeros(max(n_meas, 1), dtype=np.uint8)
        det = np.zeros(max(n_meas, 1), dtype=np.uint8)
        if events is None:
            events = (np.zeros(0, np.int64), np.zeros(0, np.int32), np.zeros(0, np.uint8))
        self.state = int(self.k.tab_run(ops, self.xs, self.zs, self.r, self.n, out, det, *events,
                                        np.uint64(self.state)))
        return out[:n_meas], det[:n_meas]

    def run(self, circuit: CliffordCircuit | list[CliffordGate]) -> list[tuple[int, bool]]:
        if not isinstance(circuit, CliffordCircuit):
            circuit = CliffordCircuit(self.n, list(circuit))
        if circuit.n != self.n:
            raise ValueError("circuit width differs from tableau")
        ops, _ = circuit.compile()
        out, det = self.run_ops(ops, circuit.num_measurements())
        return [(int(o), bool(d)) for o, d in zip(out, det)]

    def apply_pauli(self, p: PauliOperator) -> None:
        """Apply p as a gate (global phase ignored)."""
        anti = ((self.xs & _pack(p.z, self.words)) ^ (self.zs & _pack(p.x, self.words)))
        self.r ^= (np.bitwise_count(anti).sum(axis=1) & 1).astype(np.uint8)

    def measure(self, p: PauliOperator) -> tuple[int, bool]:
        if p.n != self.n:
            raise ValueError(f"measured Pauli has {p.n} qubits, tableau has {self.n}")
        if p.phase % 2:
            raise ValueError("cannot measure a non-Hermitian operator")
        bit, det, st = self.k.tab_measure(self.xs, self.zs, self.r, self.n, _pack(p.x, self.words),
                                          _pack(p.z, self.words), int(p.phase == 2), np.uint64(self.state))
        self.state = int(st)
        return int(bit), bool(det)

    def peek(self, p: PauliOperator) -> int | None:
        """Outcome of measuring p if deterministic, else None; state untouched."""
        t = self.copy()
        bit, det = t.measure(p)
        return bit if det else None


def apply_gate(state: CliffordTableau, g: CliffordGate) -> CliffordTableau:
    state.run([g])
    return state


def measure(state: CliffordTableau, p: PauliOperator, rng=None) -> tuple[int, bool]:
    if rng is not None:
        state.state = int(rng.integers(0, 2**63)) if isinstance(rng, np.random.Generator) else int(rng)
    return state.measure(p)
