"""Extended-rectangle execution for the logical CNOTs and the conversion chain.

Register layout shared by every run (so circuits A and B can be chained):

    0..6    Steane block
    7..21   Reed-Muller block
    22..30  ancilla pool
    31, 32  reference qubits for the Steane / Reed-Muller logical qubits
            (tableau runs only)

Logical bit vectors come in two orders.  *Block order* is
``(xS, zS, xR, zR)`` for the Steane (S) and Reed-Muller (R) blocks.
*Circuit order* is ``(xc, zc, xt, zt)`` for the control and target of a
particular CNOT.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import CliffordCircuit, cnot
from .codes import StabilizerCode, lookup_arrays, rm15, steane
from .gadgets import POOL_SIZE, BoundGadget, build_full_ec, combine, run_gadget
from .machines import FrameMachine, TableauMachine
from .noise import Segment
from .pauli import PauliOperator
from .pieceable import TwoBlockCircuit

S_OFF, R_OFF, POOL = 0, 7, 22
N_FRAME = POOL + POOL_SIZE
REF_S, REF_R = N_FRAME, N_FRAME + 1
N_TABLEAU = N_FRAME + 2
BLOCKS = ((S_OFF, 7), (R_OFF, 15))


def _block_index(code: StabilizerCode) -> int:
    return 0 if code.n == 7 else 1


class LogicalFrame:
    """Tracks which logical operators the Bell reference checks currently hold.

    ``xchk[r]`` is the set of blocks whose logical X appears (with X on
    reference ``r``) in the check that started as ``Xbar_r X_ref_r``;
    ``zchk`` likewise for Z.  Logical CNOTs update the sets.
    """

    def __init__(self):
        self.xchk = [{0}, {1}]
        self.zchk = [{0}, {1}]

    def apply_cnot(self, c: int, t: int) -> None:
        for s in self.xchk:
            if c in s:
                s ^= {t}
        for s in self.zchk:
            if t in s:
                s ^= {c}

    def operators(self) -> list[PauliOperator]:
        """Checks in order (X ref S, X ref R, Z ref S, Z ref R) on the tableau register."""
        out = []
        for letter, sets in (("X", self.xchk), ("Z", self.zchk)):
            for r, blocks in enumerate(sets):
                qs = [REF_S if r == 0 else REF_R]
                for b in blocks:
                    off, n = BLOCKS[b]
                    qs.extend(range(off, off + n))
                out.append(PauliOperator.on(N_TABLEAU, letter, qs))
        return out

    def solve(self, flips: np.ndarray) -> np.ndarray:
        """Logical error bits (block order) from check flips, shape (shots, 4)."""
        out = np.zeros((len(flips), 4), dtype=np.uint8)
        # an X check flips iff the error has odd Z content on its blocks, and vice versa
        for part, sets, col in ((1, self.xchk, 0), (0, self.zchk, 2)):
            m = np.array([[int(b in s) for b in range(2)] for s in sets], dtype=np.uint8)
            inv = _gf2_inv2(m)
            rhs = flips[:, col:col + 2]
            sol = (rhs @ inv.T) % 2
            for b in range(2):
                out[:, 2 * b + part] = sol[:, b]
        return out


def _gf2_inv2(m: np.ndarray) -> np.ndarray:
    det = (int(m[0, 0]) * int(m[1, 1]) + int(m[0, 1]) * int(m[1, 0])) % 2
    if det == 0:
        raise ValueError("singular reference checks")
    return np.array([[m[1, 1], m[0, 1]], [m[1, 0], m[0, 0]]], dtype=np.uint8)


def cnot_logical(bits: np.ndarray, c: int, t: int) -> np.ndarray:
    """Conjugate block-order logical Paulis by a logical CNOT from block c to t."""
    out = bits.copy()
    out[:, 2 * t] ^= bits[:, 2 * c]
    out[:, 2 * c + 1] ^= bits[:, 2 * t + 1]
    return out


def to_circuit_order(bits: np.ndarray, c: int) -> np.ndarray:
    t = 1 - c
    return bits[:, [2 * c, 2 * c + 1, 2 * t, 2 * t + 1]]


def to_block_order(bits: np.ndarray, c: int) -> np.ndarray:
    out = np.zeros_like(bits)
    t = 1 - c
    out[:, [2 * c, 2 * c + 1, 2 * t, 2 * t + 1]] = bits
    return out


def frame_logical(machine: FrameMachine) -> np.ndarray:
    """Ideal decoding of the current frames: block-order logical bits per shot."""
    out = np.zeros((machine.shots, 4), dtype=np.uint8)
    for b, code in enumerate((steane(), rm15())):
        off, n = BLOCKS[b]
        xs, zs = machine.block_masks(off, n)
        s = _syndromes(code, xs, zs)
        lx, lz = lookup_arrays(code)
        rx, rz = xs ^ lx[s], zs ^ lz[s]
        out[:, 2 * b] = _parity(rx)
        out[:, 2 * b + 1] = _parity(rz)
    return out


def _parity(v: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(v.astype(np.uint64)) & 1).astype(np.uint8)


def _syndromes(code: StabilizerCode, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    sx, sz = code._site_syndromes
    s = np.zeros(len(xs), dtype=np.int64)
    for q in range(code.n):
        s ^= ((xs >> q) & 1) * sx[q]
        s ^= ((zs >> q) & 1) * sz[q]
    return s


def tableau_logical(machine: TableauMachine, frame: LogicalFrame, shots=None) -> np.ndarray:
    """Ideal decoding on each tableau, read through the reference checks."""
    idx = np.arange(machine.shots) if shots is None else shots
    checks = frame.operators()
    flips = np.zeros((machine.shots, 4), dtype=np.uint8)
    gens = []
    for b, code in enumerate((steane(), rm15())):
        off, _ = BLOCKS[b]
        gens.append([g.embed(N_TABLEAU, off) for g in code.generators])
    for s in idx:
        t = machine.tabs[s]
        corr = PauliOperator.identity(N_TABLEAU)
        for b, code in enumerate((steane(), rm15())):
            syn = 0
            for i, g in enumerate(gens[b]):
                bit = t.peek(g)
                if bit is None:
                    raise RuntimeError("data block is not in a stabilizer eigenstate")
                syn |= bit << i
            corr = corr * code.lookup()[syn].embed(N_TABLEAU, BLOCKS[b][0])
        for j, op in enumerate(checks):
            bit = t.peek(op)
            if bit is None:
                raise RuntimeError("reference check is not deterministic")
            flips[s, j] = bit ^ int(not corr.commutes(op))
    return frame.solve(flips)


def reference_state(machine: TableauMachine, logical: str = "bell") -> None:
    """Encode both blocks, each maximally entangled with its reference qubit."""
    stabs, fixers = [], []
    for b, code in enumerate((steane(), rm15())):
        off, _ = BLOCKS[b]
        for g, t in zip(code.generators, code.pure_errors):
            stabs.append(g.embed(N_TABLEAU, off))
            fixers.append(t.embed(N_TABLEAU, off))
    frame = LogicalFrame()
    ops = frame.operators()
    stabs += ops
    fixers += [PauliOperator.on(N_TABLEAU, "Z", [REF_S]), PauliOperator.on(N_TABLEAU, "Z", [REF_R]),
               PauliOperator.on(N_TABLEAU, "X", [REF_S]), PauliOperator.on(N_TABLEAU, "X", [REF_R])]
    machine.prepare(stabs, fixers)


@dataclass
class ExRecResult:
    s_lec: np.ndarray    # (shots, 20) Steane bits then Reed-Muller bits
    s1: np.ndarray       # (shots, 7) control constant stabilizers then target ones
    s2: np.ndarray       # (shots, 20)
    logical: np.ndarray  # (shots, 4) circuit-order logical error after decoding
    raw: np.ndarray      # (shots, 4) circuit-order logical error with no logical correction
    accepted: np.ndarray  # (shots,) bool

    @property
    def failed(self) -> np.ndarray:
        return self.logical.any(axis=1) & self.accepted

    @property
    def features(self) -> np.ndarray:
        return np.concatenate([self.s_lec, self.s1, self.s2], axis=1)


class ExRecProgram:
    """LEC, piece 1, intermediate correction, piece 2, TEC on the shared layout."""

    def __init__(self, c: TwoBlockCircuit, name: str | None = None):
        self.circuit = c
        self.name = name or c.name
        self.cb = _block_index(c.control_code)
        self.tb = 1 - self.cb
        coff, toff = BLOCKS[self.cb][0], BLOCKS[self.tb][0]
        self.coff, self.toff = coff, toff
        full = combine(build_full_ec(steane(), retry_policy=c.e2.retry_policy, repeat=c.e2.repeat),
                       build_full_ec(rm15(), retry_policy=c.e2.retry_policy, repeat=c.e2.repeat))
        self.lec = BoundGadget(full, N_TABLEAU, (S_OFF, R_OFF), POOL, f"{self.name}.lec")
        self.tec = BoundGadget(full, N_TABLEAU, (S_OFF, R_OFF), POOL, f"{self.name}.tec")
        self.e1 = BoundGadget(c.e1, N_TABLEAU, (coff, toff), POOL, f"{self.name}.e1")
        self.piece = []
        for k, pairs in ((1, c.piece1), (2, c.piece2)):
            circ = CliffordCircuit(N_TABLEAU, [cnot(coff + i, toff + j) for i, j in pairs])
            self.piece.append(Segment(f"{self.name}.piece{k}", circ))

    def segments(self) -> dict[str, list[Segment]]:
        return {"lec": self.lec.segments(), "piece1": [self.piece[0]], "e1": self.e1.segments(),
                "piece2": [self.piece[1]], "tec": self.tec.segments()}

    def run_core(self, machine, active: np.ndarray, decoder=None, s_lec: np.ndarray | None = None):
        """Pieces, intermediate correction, TEC and the decoder's logical correction.

        Returns (s1, s2, raw_correction_bits, rejected).
        """
        B = machine.shots
        rejected = np.zeros(B, dtype=bool)
        machine.run(self.piece[0], (f"{self.name}.piece1",), active)
        o1 = run_gadget(machine, self.e1, active)
        rejected |= o1.rejected
        act = active & ~rejected
        machine.run(self.piece[1], (f"{self.name}.piece2",), act)
        o2 = run_gadget(machine, self.tec, act)
        rejected |= o2.rejected
        s2 = o2.bits
        g = np.zeros((B, 4), dtype=np.uint8)
        if decoder is not None:
            g = decoder.decode(s_lec, o1.bits, s2) & (active & ~rejected)[:, None]
            gb = to_block_order(g, self.cb)
            for b, code in enumerate((steane(), rm15())):
                off, n = BLOCKS[b]
                full = (1 << n) - 1
                xs = np.where(gb[:, 2 * b] == 1, full, 0).astype(np.int64)
                zs = np.where(gb[:, 2 * b + 1] == 1, full, 0).astype(np.int64)
                if xs.any() or zs.any():
                    machine.xor_block(off, n, xs, zs)
        return o1.bits, s2, g, rejected


def logical_now(machine, frame: LogicalFrame) -> np.ndarray:
    if isinstance(machine, TableauMachine):
        return tableau_logical(machine, frame)
    return frame_logical(machine)


def run_exrec(program: ExRecProgram, machine, decoder=None) -> ExRecResult:
    """One batch of CNOT exRec trials; the machine supplies noise and state."""
    B = machine.shots
    frame = LogicalFrame()
    if isinstance(machine, TableauMachine):
        reference_state(machine)
    active = np.ones(B, dtype=bool)
    o = run_gadget(machine, program.lec, active)
    s_lec = o.bits
    ok = ~o.rejected
    l0 = logical_now(machine, frame)
    s1, s2, g, rej = program.run_core(machine, ok, decoder, s_lec)
    ok &= ~rej
    frame.apply_cnot(program.cb, program.tb)
    lf = logical_now(machine, frame)
    e_block = lf ^ cnot_logical(l0, program.cb, program.tb)
    e = to_circuit_order(e_block, program.cb)
    raw = e ^ g
    e[~ok] = 0
    raw[~ok] = 0
    return ExRecResult(s_lec, s1, s2, e, raw, ok)


def run_chain(programs: list[ExRecProgram], machine, decoders: list) -> tuple[np.ndarray, np.ndarray]:
    """Several exRecs back to back sharing EC gadgets (each TEC is the next LEC).

    Returns (block-order logical error after the last exRec, accepted).
    """
    B = machine.shots
    frame = LogicalFrame()
    if isinstance(machine, TableauMachine):
        reference_state(machine)
    o = run_gadget(machine, programs[0].lec, np.ones(B, dtype=bool))
    ok = ~o.rejected
    s_prev = o.bits
    l0 = logical_now(machine, frame)
    ideal = l0.copy()
    for prog, dec in zip(programs, decoders):
        s1, s2, g, rej = prog.run_core(machine, ok, dec, s_prev)
        ok &= ~rej
        frame.apply_cnot(prog.cb, prog.tb)
        ideal = cnot_logical(ideal, prog.cb, prog.tb)
        s_prev = s2
    lf = logical_now(machine, frame)
    e = lf ^ ideal
    e[~ok] = 0
    return e, ok
