"""Two-piece logical CNOTs between the Steane and Reed-Muller blocks.

Both constructions apply the physical CNOT from every control-block qubit to
every target-block qubit (105 gates).  Because both codes have odd length,
transversal-type logical operators ``X^n``/``Z^n`` and even-weight X- and
Z-type generators, this all-pairs circuit preserves the joint stabilizer
group and acts as a logical CNOT.  The gates are split into two pieces; the
constant stabilizers (those commuting with every gate) are measured between
the pieces to catch errors before they spread further.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import CliffordCircuit, cnot
from .codes import StabilizerCode, rm15, steane
from .frame import conjugate
from .gadgets import ECGadget, build_full_ec, combine
from .pauli import PauliOperator

# Chosen piece assignment.  Entry [i][j] is the piece (1 or 2) holding the
# CNOT from control qubit i to target qubit j; within a piece gates run in
# control-major order.  Output of ``search.search_split(..., seed=0)``;
# ``verify_fault_tolerance`` confirms it by exhaustive fault injection.
SPLIT_A: tuple[tuple[int, ...], ...] | None = (
    (2, 2, 1, 2, 1, 2, 2, 1, 2, 2, 2, 2, 2, 1, 2),
    (2, 2, 2, 2, 1, 2, 1, 1, 2, 2, 1, 1, 1, 2, 1),
    (1, 1, 2, 1, 2, 1, 1, 2, 1, 1, 1, 1, 1, 2, 1),
    (1, 1, 2, 1, 2, 1, 1, 2, 1, 2, 2, 2, 2, 2, 1),
    (1, 2, 1, 1, 2, 2, 1, 1, 1, 2, 1, 1, 1, 1, 1),
    (2, 1, 2, 1, 1, 2, 1, 1, 2, 2, 2, 2, 2, 2, 1),
    (2, 1, 2, 2, 2, 2, 1, 1, 1, 1, 1, 2, 1, 1, 2),
)
SPLIT_B: tuple[tuple[int, ...], ...] | None = (
    (2, 2, 1, 2, 2, 1, 2),
    (2, 2, 1, 1, 1, 1, 1),
    (1, 1, 2, 2, 1, 2, 2),
    (1, 1, 2, 2, 1, 2, 2),
    (2, 1, 2, 2, 2, 2, 1),
    (2, 1, 2, 1, 1, 1, 2),
    (2, 2, 1, 1, 1, 2, 2),
    (2, 1, 1, 1, 1, 2, 1),
    (1, 2, 2, 1, 2, 1, 1),
    (2, 1, 2, 2, 1, 1, 1),
    (1, 2, 1, 2, 2, 2, 1),
    (2, 2, 1, 2, 2, 2, 1),
    (2, 2, 1, 1, 1, 2, 2),
    (2, 1, 2, 1, 1, 1, 1),
    (1, 1, 2, 1, 1, 1, 1),
)


@dataclass
class TwoBlockCircuit:
    """A logical CNOT on a register holding the control block then the target block."""

    name: str
    control_code: StabilizerCode
    target_code: StabilizerCode
    piece1: list[tuple[int, int]]
    piece2: list[tuple[int, int]]
    constant_stabilizers_control: list[PauliOperator]
    constant_stabilizers_target: list[PauliOperator]
    e1: ECGadget
    e2: ECGadget
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.control_code.n + self.target_code.n

    @property
    def nc(self) -> int:
        return self.control_code.n

    def gates(self) -> list[tuple[int, int]]:
        return self.piece1 + self.piece2

    def piece_circuit(self, which: int) -> CliffordCircuit:
        pairs = self.piece1 if which == 1 else self.piece2
        return CliffordCircuit(self.n, [cnot(i, self.nc + j) for i, j in pairs])

    def circuit(self) -> CliffordCircuit:
        return CliffordCircuit(self.n, [cnot(i, self.nc + j) for i, j in self.gates()])

    def joint_generators(self) -> list[PauliOperator]:
        """Generators of the tensor-product stabilizer group, control block first."""
        out = [g.tensor(PauliOperator.identity(self.target_code.n)) for g in self.control_code.generators]
        out += [PauliOperator.identity(self.nc).tensor(g) for g in self.target_code.generators]
        return out

    def constant_stabilizers(self) -> list[PauliOperator]:
        """All listed constant stabilizers on the joint register."""
        idc, idt = PauliOperator.identity(self.nc), PauliOperator.identity(self.target_code.n)
        return ([s.tensor(idt) for s in self.constant_stabilizers_control]
                + [idc.tensor(s) for s in self.constant_stabilizers_target])

    def to_text(self) -> str:
        lines = [f"# {self.name}: control {self.control_code.name} (qubits 0..{self.nc - 1}), "
                 f"target {self.target_code.name} (qubits {self.nc}..{self.n - 1})"]
        lid = 0
        for k, pairs in ((1, self.piece1), (2, self.piece2)):
            lines.append(f"# piece {k}: {len(pairs)} gates")
            for i, j in pairs:
                lines.append(f"CNOT {i} {self.nc + j} @{lid}")
                lid += 1
        return "\n".join(lines) + "\n"


def _pieces(nc: int, nt: int, split) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    if not callable(split):
        split = _table_split(split)
    p1, p2 = [], []
    for i in range(nc):
        for j in range(nt):
            (p1 if split(i, j) == 1 else p2).append((i, j))
    return p1, p2


def _table_split(table):
    return lambda i, j: table[i][j]


def build_ccnot_A(split=None, repeat: str = "adaptive", retry_policy: int = 3) -> TwoBlockCircuit:
    """Steane block controls the Reed-Muller block.

    ``split(i, j)`` returns the piece of the gate from control ``i`` to target
    ``j`` (a table indexed ``[i][j]`` also works); the default is the searched assignment ``SPLIT_A`` (falling back to
    the control-index split 0-3 / 4-6 when none is recorded).
    """
    cs, ct = steane(), rm15()
    if split is None:
        split = _table_split(SPLIT_A) if SPLIT_A is not None else (lambda i, j: 1 if i < 4 else 2)
    p1, p2 = _pieces(7, 15, split)
    cc = [cs.generators[i] for i in cs.z_type_rows()]
    tc = [ct.generators[i] for i in ct.x_type_rows()]
    return _assemble("ccnot_A", cs, ct, p1, p2, cc, tc, retry_policy, repeat)


def build_ccnot_B(split=None, repeat: str = "adaptive", retry_policy: int = 3) -> TwoBlockCircuit:
    """Reed-Muller block controls the Steane block.

    ``constant_stabilizers_control`` lists all ten Z-type generators of the
    Reed-Muller code; the intermediate gadget measures the four weight-8 ones,
    which already locate any single X error.
    """
    cs, ct = rm15(), steane()
    if split is None:
        split = _table_split(SPLIT_B) if SPLIT_B is not None else (lambda i, j: 1 if i < 8 else 2)
    p1, p2 = _pieces(15, 7, split)
    cc = [cs.generators[i] for i in cs.z_type_rows()]
    tc = [ct.generators[i] for i in ct.x_type_rows()]
    return _assemble("ccnot_B", cs, ct, p1, p2, cc, tc, retry_policy, repeat)


def _assemble(name, cs, ct, p1, p2, cc, tc, retry_policy, repeat) -> TwoBlockCircuit:
    e2 = combine(build_full_ec(cs, retry_policy=retry_policy, repeat=repeat),
                 build_full_ec(ct, retry_policy=retry_policy, repeat=repeat))
    c = TwoBlockCircuit(name, cs, ct, p1, p2, cc, tc, None, e2)
    c.e1 = build_constant_ec(c, retry_policy, repeat)
    return c


def _separating_subset(stabs: list[PauliOperator], letter: str) -> list[PauliOperator]:
    """Heaviest-first subset of ``stabs`` that already separates every single ``letter`` error."""
    n = stabs[0].n
    chosen: list[PauliOperator] = []
    best = 0
    for s in sorted(stabs, key=lambda p: -p.weight()):
        trial = chosen + [s]
        sigs = {tuple(int(not PauliOperator.on(n, letter, [q]).commutes(t)) for t in trial) for q in range(n)}
        if len(sigs) > best:
            chosen, best = trial, len(sigs)
        if best == n and all(any(sig) for sig in sigs):
            break
    return [s for s in stabs if s in chosen]


def build_constant_ec(c: TwoBlockCircuit, retry_policy: int = 3, repeat: str = "adaptive") -> ECGadget:
    """Intermediate gadget: constant stabilizers that locate every single contagious error.

    X errors spread from the control block and Z errors from the target
    block, so the control side uses Z-type and the target side X-type
    stabilizers, each block correcting only its contagious letter.
    """
    mc = _separating_subset(c.constant_stabilizers_control, "X")
    mt = _separating_subset(c.constant_stabilizers_target, "Z")
    return ECGadget((c.control_code, c.target_code), tuple([(0, s) for s in mc] + [(1, s) for s in mt]),
                    "contagious_only", ("X", "Z"), retry_policy, repeat)


# -- structural checks -----------------------------------------------------

def _in_joint_group(c: TwoBlockCircuit, p: PauliOperator) -> bool:
    a = p.restrict(0, c.nc)
    b = p.restrict(c.nc, c.target_code.n)
    return c.control_code.in_stabilizer_group(a) and c.target_code.in_stabilizer_group(b)


def check_stabilizer_preservation(c: TwoBlockCircuit) -> list[str]:
    """Generators whose image under the full circuit leaves the joint stabilizer group."""
    circ = c.circuit()
    bad = []
    for g in c.joint_generators():
        img = conjugate(circ, g)
        if img.phase != 0 or not _in_joint_group(c, img):
            bad.append(f"{g.text(False)} -> {img.text()}")
    return bad


def check_constant_stabilizers(c: TwoBlockCircuit) -> list[str]:
    """(stabilizer, gate) pairs that fail to commute gate by gate."""
    bad = []
    circ = c.circuit()
    for s in c.constant_stabilizers():
        for k, g in enumerate(circ.gates):
            if conjugate([g], s) != s:
                bad.append(f"{s.text(False)} vs gate {k} {g.text()}")
    return bad


def logical_operators(c: TwoBlockCircuit) -> dict[str, PauliOperator]:
    idc, idt = PauliOperator.identity(c.nc), PauliOperator.identity(c.target_code.n)
    return {
        "Xc": c.control_code.logical_x[0].tensor(idt),
        "Zc": c.control_code.logical_z[0].tensor(idt),
        "Xt": idc.tensor(c.target_code.logical_x[0]),
        "Zt": idc.tensor(c.target_code.logical_z[0]),
    }


def logical_action(c: TwoBlockCircuit) -> dict[str, str]:
    """Image of each logical Pauli, named by its logical content (e.g. ``"Xc Xt"``).

    Images are reduced modulo the joint stabilizer group; an image outside the
    logical Pauli group is reported as ``"?"``.
    """
    circ = c.circuit()
    logs = logical_operators(c)
    combos = {}
    for bits in range(16):
        names = [k for i, k in enumerate(("Xc", "Zc", "Xt", "Zt")) if (bits >> i) & 1]
        p = PauliOperator.identity(c.n)
        for k in names:
            p = p * logs[k]
        combos[bits] = (" ".join(names) or "I", p)
    out = {}
    for name, op in logs.items():
        img = conjugate(circ, op)
        found = "?"
        for label, p in combos.values():
            if _in_joint_group(c, (img * p).unsigned()):
                found = label
                break
        out[name] = found
    return out


CNOT_ACTION = {"Xc": "Xc Xt", "Zc": "Zc", "Xt": "Xt", "Zt": "Zc Zt"}
