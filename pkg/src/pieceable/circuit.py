"""Clifford gate vocabulary, circuits, and the line-oriented text format.

Text format, one gate per line (blank lines and ``#`` comments ignored)::

    H 3
    P 2
    CNOT 0 7
    CZ 1 4
    PREPZ 5
    PREPX 6
    MZ Z0 Z2 Z4 Z6      # measure a Pauli (M and MX are accepted too)
    MX 3                # shorthand for a single-qubit X measurement

Any line may end in ``@<id>`` to pin its location id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .pauli import PauliOperator

ONE_QUBIT = ("H", "P", "X", "Y", "Z")
TWO_QUBIT = ("CNOT", "CZ")
PREPS = ("PrepZ", "PrepX")
KINDS = ONE_QUBIT + TWO_QUBIT + PREPS + ("MeasurePauli",)

# opcodes shared by every simulation kernel
OP_H, OP_S, OP_X, OP_Y, OP_Z = 1, 2, 3, 4, 5
OP_CNOT, OP_CZ = 6, 7
OP_PREPZ, OP_PREPX = 8, 9
OP_MZ, OP_MX = 10, 11
OP_MACC = 12  # accumulate one site of a multi-qubit measurement: (q, letter 1=X 2=Z 3=Y)
OP_MFLUSH = 13  # finish the accumulated measurement into record slot a

_SIMPLE_OPS = {"H": OP_H, "P": OP_S, "X": OP_X, "Y": OP_Y, "Z": OP_Z,
               "CNOT": OP_CNOT, "CZ": OP_CZ, "PrepZ": OP_PREPZ, "PrepX": OP_PREPX}


@dataclass(frozen=True)
class CliffordGate:
    kind: str
    qubits: tuple[int, ...] = ()
    pauli: PauliOperator | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind == "MeasurePauli":
            if self.pauli is None or self.pauli.is_identity():
                raise ValueError("MeasurePauli needs a non-identity Pauli")
            if self.pauli.phase % 2:
                raise ValueError("measured Pauli must be Hermitian")
            object.__setattr__(self, "qubits", tuple(sorted(self.pauli.support())))
            return
        want = 2 if self.kind in TWO_QUBIT else 1
        if len(self.qubits) != want:
            raise ValueError(f"{self.kind} takes {want} qubit(s), got {self.qubits}")
        if want == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"{self.kind} needs two distinct qubits")
        if min(self.qubits) < 0:
            raise ValueError("negative qubit index")

    @property
    def is_measurement(self) -> bool:
        return self.kind == "MeasurePauli"

    def text(self) -> str:
        if self.kind == "MeasurePauli":
            p = self.pauli
            body = p.text(with_phase=False)
            return f"MZ {body}" if p.phase == 0 else f"MZ -1 {body}"
        name = self.kind.upper() if self.kind in PREPS else self.kind
        return " ".join([name, *map(str, self.qubits)])


def measure(n: int, text: str) -> CliffordGate:
    """Shorthand: ``measure(7, "Z0 Z2 Z4 Z6")``."""
    return CliffordGate("MeasurePauli", pauli=PauliOperator.parse(text, n))


@dataclass
class CliffordCircuit:
    n: int
    gates: list[CliffordGate] = field(default_factory=list)
    location_ids: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.location_ids:
            self.location_ids = list(range(len(self.gates)))
        self.validate()

    def validate(self) -> None:
        if len(self.location_ids) != len(self.gates):
            raise ValueError("one location id per gate required")
        if len(set(self.location_ids)) != len(self.location_ids):
            raise ValueError("location ids must be unique")
        if any(b <= a for a, b in zip(self.location_ids, self.location_ids[1:])):
            raise ValueError("location ids must increase along the circuit")
        for g in self.gates:
            if g.kind == "MeasurePauli":
                if g.pauli.n != self.n:
                    raise ValueError("measured Pauli has the wrong width")
            elif max(g.qubits) >= self.n:
                raise ValueError(f"gate {g.text()} exceeds n={self.n}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self) -> Iterator[CliffordGate]:
        return iter(self.gates)

    def append(self, g: CliffordGate, location_id: int | None = None) -> None:
        if location_id is None:
            location_id = self.location_ids[-1] + 1 if self.location_ids else 0
        elif self.location_ids and location_id <= self.location_ids[-1]:
            raise ValueError("location ids must increase along the circuit")
        if g.kind != "MeasurePauli" and max(g.qubits) >= self.n:
            raise ValueError(f"gate {g.text()} exceeds n={self.n}")
        self.gates.append(g)
        self.location_ids.append(location_id)

    def num_measurements(self) -> int:
        return sum(g.is_measurement for g in self.gates)

    def has_measurements(self) -> bool:
        return any(g.is_measurement for g in self.gates)

    def inverse_order(self) -> list[CliffordGate]:
        return self.gates[::-1]

    def to_text(self, with_ids: bool = True) -> str:
        lines = []
        for g, lid in zip(self.gates, self.location_ids):
            lines.append(f"{g.text()} @{lid}" if with_ids else g.text())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n: int | None = None) -> CliffordCircuit:
        parsed: list[tuple[str, list[str], int | None]] = []
        top = -1
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            lid = None
            if "@" in line:
                line, tag = line.rsplit("@", 1)
                lid = int(tag)
                line = line.strip()
            name, *args = line.split()
            parsed.append((name.upper(), args, lid))
            for a in args:
                digits = a.lstrip("XYZI") if a[:1] in "XYZI" else a
                if digits.isdigit():
                    top = max(top, int(digits))
        if n is None:
            n = top + 1
        c = cls(n)
        for name, args, lid in parsed:
            c.append(_parse_gate(name, args, n), lid)
        return c

    def compile(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower to kernel opcodes.

        Returns ``(ops, gate_of_op)``: an int32 array of rows ``(opcode, a, b)``
        and, per op row, the index of the gate it came from.  Measurements are
        numbered in circuit order; single-qubit Z/X measurements become
        ``OP_MZ``/``OP_MX`` and anything else a run of ``OP_MACC`` rows closed
        by ``OP_MFLUSH``.  A ``-1`` phase on a measured Pauli is carried in the
        ``b`` field of the flush (or measurement) row.
        """
        rows: list[tuple[int, int, int]] = []
        owner: list[int] = []
        m = 0
        for gi, g in enumerate(self.gates):
            if g.kind == "MeasurePauli":
                p = g.pauli
                neg = int(p.phase == 2)
                if p.weight() == 1:
                    q = next(iter(p.support()))
                    letter = p.letter(q)
                    if letter in "ZX":
                        rows.append((OP_MZ if letter == "Z" else OP_MX, q, m | (neg << 30)))
                        owner.append(gi)
                        m += 1
                        continue
                for q in sorted(p.support()):
                    code = ((p.x >> q) & 1) | (((p.z >> q) & 1) << 1)
                    rows.append((OP_MACC, q, code))
                    owner.append(gi)
                rows.append((OP_MFLUSH, m, neg))
                owner.append(gi)
                m += 1
            else:
                a = g.qubits[0]
                b = g.qubits[1] if len(g.qubits) > 1 else 0
                rows.append((_SIMPLE_OPS[g.kind], a, b))
                owner.append(gi)
        ops = np.array(rows, dtype=np.int32).reshape(-1, 3)
        return ops, np.array(owner, dtype=np.int64)


def _parse_gate(name: str, args: list[str], n: int) -> CliffordGate:
    if name in ("MZ", "M", "MX", "MY", "MEASURE"):
        if name in ("MX", "MY") and len(args) == 1 and args[0].isdigit():
            return CliffordGate("MeasurePauli", pauli=PauliOperator.on(n, name[1], [int(args[0])]))
        if name == "MZ" and len(args) == 1 and args[0].isdigit():
            return CliffordGate("MeasurePauli", pauli=PauliOperator.on(n, "Z", [int(args[0])]))
        return CliffordGate("MeasurePauli", pauli=PauliOperator.parse(" ".join(args), n))
    kind = {"PREPZ": "PrepZ", "PREPX": "PrepX", "S": "P"}.get(name, name)
    return CliffordGate(kind, tuple(int(a) for a in args))


def concat(n: int, parts: Iterable[Iterable[CliffordGate]]) -> CliffordCircuit:
    c = CliffordCircuit(n)
    for part in parts:
        for g in part:
            c.append(g)
    return c


def cnot(c: int, t: int) -> CliffordGate:
    return CliffordGate("CNOT", (c, t))


def cz(a: int, b: int) -> CliffordGate:
    return CliffordGate("CZ", (a, b))


def gate(kind: str, *qubits: int) -> CliffordGate:
    return CliffordGate(kind, qubits)
