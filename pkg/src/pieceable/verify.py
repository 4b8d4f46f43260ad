"""Exhaustive single-fault verification and the code-conversion circuit.

A construction is 1-fault tolerant here when every single fault, at any
location of the leading EC, either data piece, the intermediate EC or the
trailing EC, leaves no logical error once the decoder has acted and the
output is ideally decoded.  Rejected shots (ancilla verification failing
every retry) count as detected, not as failures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decoders import extended_lookup_decoder, make_decoder
from .exrec import (N_FRAME, N_TABLEAU, REF_R, REF_S, ExRecProgram, LogicalFrame, reference_state,
                    run_chain, run_exrec, tableau_logical)
from .faults import enumerate_faults, inject_all
from .machines import TableauMachine
from .pauli import PauliOperator
from .pieceable import TwoBlockCircuit, build_ccnot_A, build_ccnot_B


@dataclass
class FaultReport:
    name: str
    n_faults: int
    n_rejected: int
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        return (f"{self.name}: {self.n_faults} single faults, {self.n_rejected} rejected, "
                f"{len(self.violations)} violations")


def _report(name, faults, errors, accepted) -> FaultReport:
    bad = np.flatnonzero(errors.any(axis=1) & accepted)
    return FaultReport(name, len(faults), int((~accepted).sum()), [faults.describe(i) for i in bad])


def verify_fault_tolerance(c: TwoBlockCircuit, decoder: str = "mwd") -> FaultReport:
    """Every single fault in one exRec of ``c``, decoded with ``decoder``."""
    prog = ExRecProgram(c)
    dec = make_decoder(decoder, c)
    run = lambda m: run_exrec(prog, m, dec)  # noqa: E731
    faults = enumerate_faults(run, N_TABLEAU)
    res = inject_all(run, N_TABLEAU, faults)
    return _report(c.name, faults, res.logical, res.accepted)


@dataclass
class ConversionCircuit:
    """Logical SWAP between the blocks as three alternating pieceable CNOTs.

    The destination block starts in logical |0>; after the SWAP the source
    block holds |0> and is discarded.
    """

    direction: str                      # "7->15" or "15->7"
    cnot_sequence: tuple[TwoBlockCircuit, TwoBlockCircuit, TwoBlockCircuit]
    destination_prep: str = "zero"

    @property
    def source_block(self) -> int:
        return 0 if self.direction == "7->15" else 1

    @property
    def destination_block(self) -> int:
        return 1 - self.source_block

    def programs(self) -> list[ExRecProgram]:
        return [ExRecProgram(c, f"{c.name}.{k}") for k, c in enumerate(self.cnot_sequence)]


def build_conversion(direction: str = "7->15", **kw) -> ConversionCircuit:
    a, b = build_ccnot_A(**kw), build_ccnot_B(**kw)
    if direction == "7->15":
        return ConversionCircuit(direction, (a, b, a))
    if direction == "15->7":
        return ConversionCircuit(direction, (b, a, b))
    raise ValueError("direction must be '7->15' or '15->7'")


def verify_conversion(conv: ConversionCircuit, decoder: str = "mwd") -> FaultReport:
    """Every single fault anywhere in the three chained exRecs."""
    progs = conv.programs()
    decs = [make_decoder(decoder, c) for c in conv.cnot_sequence]
    run = lambda m: run_chain(progs, m, decs)  # noqa: E731
    faults = enumerate_faults(run, N_TABLEAU)
    err, ok = inject_all(run, N_TABLEAU, faults)
    return _report(f"conversion {conv.direction}", faults, err, ok)


_LOGICAL = {"0": ("Z", 0), "1": ("Z", 1), "+": ("X", 0), "-": ("X", 1)}


def run_conversion(conv: ConversionCircuit, state: str, seed: int = 0) -> dict[str, int | None]:
    """Noiseless tableau conversion of logical ``state`` (one of 0, 1, +, -).

    The source block is prepared in ``state`` by measuring its logical
    operator and fixing the sign, the destination in |0>.  Returns the
    deterministic logical Z and X readouts of the destination (``None`` when
    random) and of the discarded source block.
    """
    from .codes import rm15, steane

    letter, sign = _LOGICAL[state]
    codes = (steane(), rm15())
    offs = (0, 7)
    src, dst = conv.source_block, conv.destination_block
    m = TableauMachine(N_TABLEAU, 1, seeds=[seed])
    reference_state(m)  # puts both blocks in their code space
    t = m.tabs[0]
    for b, (ltr, sgn) in ((src, (letter, sign)), (dst, ("Z", 0))):
        op = _logical(codes[b], ltr, offs[b])
        bit, _ = t.measure(op)
        if bit != sgn:
            t.apply_pauli(_logical(codes[b], "Z" if ltr == "X" else "X", offs[b]))
    # the reference qubits are now product with the data and play no role
    active = np.ones(1, dtype=bool)
    for prog in conv.programs():
        prog.run_core(m, active, None, np.zeros((1, 20), np.uint8))
    out = {}
    for name, b in (("dest", dst), ("source", src)):
        for ltr in "ZX":
            out[f"{name}_{ltr}"] = t.peek(_logical(codes[b], ltr, offs[b]))
    return out


def _logical(code, letter: str, off: int) -> PauliOperator:
    base = code.logical_x[0] if letter == "X" else code.logical_z[0]
    return base.embed(N_TABLEAU, off)


__all__ = ["FaultReport", "verify_fault_tolerance", "ConversionCircuit", "build_conversion",
           "verify_conversion", "run_conversion", "extended_lookup_decoder", "N_FRAME", "REF_S", "REF_R",
           "LogicalFrame", "tableau_logical"]
