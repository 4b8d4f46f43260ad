"""Shor-style syndrome extraction gadgets with verified cat states.

Each weight-w stabilizer is measured with a w-qubit cat state built by a
CNOT chain, checked by one parity measurement between its first and last
qubit (re-prepared on failure), coupled transversally (CNOT for X-type
generators, CZ for Z-type) and read out in the X basis.  The syndrome bit is
the parity of the w readouts.

``repeat="adaptive"`` measures the whole block once; if that syndrome is
nonzero it measures again, and if the two disagree a third time, keeping the
last round.  ``repeat="single"`` keeps the first round unconditionally.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuit import CliffordCircuit, CliffordGate, cnot, cz, gate, measure
from .codes import StabilizerCode, lookup_arrays
from .noise import Segment
from .pauli import PauliOperator

REPEAT_MODES = ("adaptive", "single")
POOL_SIZE = 9  # largest cat (8) plus the verification qubit


@dataclass(frozen=True)
class ECGadget:
    """Template: which stabilizers to measure on which block, and how to correct.

    ``stabilizers_measured`` pairs a block index with an operator on that
    block's code.  ``contagious`` holds, per block, ``"full"`` for a
    complete lookup correction or the single Pauli letter that is corrected
    (``"X"`` or ``"Z"``) under ``contagious_only``.
    """

    codes: tuple[StabilizerCode, ...]
    stabilizers_measured: tuple[tuple[int, PauliOperator], ...]
    correction_mode: str = "full_lookup"
    contagious: tuple[str, ...] = ("full",)
    retry_policy: int = 3
    repeat: str = "adaptive"

    def __post_init__(self):
        if self.correction_mode not in ("full_lookup", "contagious_only"):
            raise ValueError(f"unknown correction mode {self.correction_mode!r}")
        if self.repeat not in REPEAT_MODES:
            raise ValueError(f"unknown repeat mode {self.repeat!r}")
        if self.retry_policy < 0:
            raise ValueError("retry_policy must be >= 0")
        for b, s in self.stabilizers_measured:
            code = self.codes[b]
            if not code.in_stabilizer_group(s):
                raise ValueError(f"{s} is not a stabilizer of {code.name}")
            if s.x and s.z:
                raise ValueError("only X-type or Z-type stabilizers are supported")

    @property
    def cat_sizes(self) -> tuple[int, ...]:
        return tuple(s.weight() for _, s in self.stabilizers_measured)

    @property
    def ancilla_spec(self) -> list[tuple[int, tuple[int, int]]]:
        """Per stabilizer: cat size and the pair of cat qubits compared by verification."""
        return [(w, (0, w - 1)) for w in self.cat_sizes]

    def rows_of_block(self, b: int) -> list[int]:
        return [i for i, (blk, _) in enumerate(self.stabilizers_measured) if blk == b]

    def location_count(self) -> int:
        """Noisy locations of one round with no retries: 4w + 3 per stabilizer."""
        return sum(4 * w + 3 for w in self.cat_sizes)

    def with_options(self, **kw) -> ECGadget:
        fields = dict(codes=self.codes, stabilizers_measured=self.stabilizers_measured,
                      correction_mode=self.correction_mode, contagious=self.contagious,
                      retry_policy=self.retry_policy, repeat=self.repeat)
        fields.update(kw)
        return ECGadget(**fields)

    def describe(self) -> str:
        lines = [f"gadget mode={self.correction_mode} repeat={self.repeat} retries={self.retry_policy}"]
        for (b, s), w in zip(self.stabilizers_measured, self.cat_sizes):
            lines.append(f"  block {b} ({self.codes[b].name}): {s.text(with_phase=False)}  "
                         f"cat={w}  locations={4 * w + 3}")
        lines.append(f"  total locations per round: {self.location_count()}")
        return "\n".join(lines)


def build_full_ec(code: StabilizerCode, **kw) -> ECGadget:
    return ECGadget((code,), tuple((0, g) for g in code.generators), "full_lookup", ("full",), **kw)


def combine(*gadgets: ECGadget) -> ECGadget:
    """Run several single-block gadgets as one, blocks numbered in argument order."""
    codes, stabs, cont = [], [], []
    for g in gadgets:
        base = len(codes)
        codes.extend(g.codes)
        cont.extend(g.contagious)
        stabs.extend((base + b, s) for b, s in g.stabilizers_measured)
    mode = gadgets[0].correction_mode
    return ECGadget(tuple(codes), tuple(stabs), mode, tuple(cont), gadgets[0].retry_policy, gadgets[0].repeat)


def contagious_table(code: StabilizerCode, stabs: list[PauliOperator], letter: str) -> tuple[np.ndarray, np.ndarray]:
    """Lowest-weight single-letter correction for each syndrome of ``stabs``."""
    size = 1 << len(stabs)
    xs = np.zeros(size, dtype=np.int64)
    zs = np.zeros(size, dtype=np.int64)
    seen = np.zeros(size, dtype=bool)
    seen[0] = True
    for w in range(1, code.n + 1):
        for sup in itertools.combinations(range(code.n), w):
            p = PauliOperator.on(code.n, letter, sup)
            s = sum(1 << i for i, g in enumerate(stabs) if not g.commutes(p))
            if not seen[s]:
                seen[s] = True
                xs[s], zs[s] = p.x, p.z
        if seen.all():
            break
    return xs, zs


@dataclass
class SyndromeOutcome:
    """Per-shot gadget result: bits in gadget order, retries, rejection, correction."""

    bits: np.ndarray          # (shots, n_stabilizers) uint8
    retries_used: np.ndarray  # (shots,)
    rejected: np.ndarray      # (shots,) bool
    rounds: np.ndarray        # (shots, n_blocks) rounds executed
    corrections: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)  # per block (x, z)

    def applied_correction(self, block: int, shot: int, n: int) -> PauliOperator:
        xs, zs = self.corrections[block]
        return PauliOperator(n, int(xs[shot]), int(zs[shot]))


class BoundGadget:
    """An ECGadget placed in a register: blocks at ``offsets``, ancillas at ``pool``."""

    def __init__(self, gadget: ECGadget, n_total: int, offsets: tuple[int, ...], pool: int, name: str = "ec"):
        self.gadget = gadget
        self.n_total = n_total
        self.offsets = offsets
        self.pool = pool
        self.name = name
        if pool + POOL_SIZE > n_total:
            raise ValueError("ancilla pool does not fit in the register")
        self.prep: list[Segment] = []
        self.couple: list[Segment] = []
        for i, (b, s) in enumerate(gadget.stabilizers_measured):
            data = [offsets[b] + q for q in sorted(s.support())]
            p, c = _cat_segments(n_total, data, pool, "X" if s.x else "Z")
            self.prep.append(Segment(f"{name}.{i}.prep", p))
            self.couple.append(Segment(f"{name}.{i}.couple", c))
        self.tables = []
        for b, code in enumerate(gadget.codes):
            rows = gadget.rows_of_block(b)
            if gadget.contagious[b] == "full":
                if [gadget.stabilizers_measured[i][1] for i in rows] != list(code.generators):
                    raise ValueError("full lookup needs every generator in table order")
                self.tables.append(lookup_arrays(code))
            else:
                stabs = [gadget.stabilizers_measured[i][1] for i in rows]
                self.tables.append(contagious_table(code, stabs, gadget.contagious[b]))

    def segments(self) -> list[Segment]:
        return [s for pair in zip(self.prep, self.couple) for s in pair]


def _cat_segments(n: int, data: list[int], pool: int, kind: str) -> tuple[CliffordCircuit, CliffordCircuit]:
    w = len(data)
    a = list(range(pool, pool + w))
    v = pool + w
    prep = CliffordCircuit(n)
    prep.append(gate("PrepX", a[0]))
    for q in a[1:]:
        prep.append(gate("PrepZ", q))
    for k in range(1, w):
        prep.append(cnot(a[k - 1], a[k]))
    prep.append(gate("PrepZ", v))
    prep.append(cnot(a[0], v))
    prep.append(cnot(a[-1], v))
    prep.append(measure(n, f"Z{v}"))
    couple = CliffordCircuit(n)
    for q, d in zip(a, data):
        couple.append(cnot(q, d) if kind == "X" else cz(q, d))
    for q in a:
        couple.append(measure(n, f"X{q}"))
    return prep, couple


def run_gadget(machine, bound: BoundGadget, active: np.ndarray | None = None,
               tag: str | None = None) -> SyndromeOutcome:
    """Execute a bound gadget on every active shot of ``machine`` and apply its correction.

    Shots whose cat state fails verification more than ``retry_policy``
    times are marked rejected and take no further part.
    """
    g = bound.gadget
    B = machine.shots
    tag = tag or bound.name
    active = np.ones(B, dtype=bool) if active is None else active.copy()
    nstab = len(g.stabilizers_measured)
    nblk = len(g.codes)
    rejected = np.zeros(B, dtype=bool)
    retries = np.zeros(B, dtype=np.int64)
    rows = [g.rows_of_block(b) for b in range(nblk)]
    block_of = np.array([b for b, _ in g.stabilizers_measured], dtype=np.int64)

    def one_round(r: int, want: np.ndarray) -> np.ndarray:
        # want: (B, nblk) which blocks measure in this round
        bits = np.zeros((B, nstab), dtype=np.uint8)
        for i in range(nstab):
            run = want[:, block_of[i]] & ~rejected
            if not run.any():
                continue
            pending = run.copy()
            attempt = 0
            while True:
                out = machine.run(bound.prep[i], (tag, r, i, attempt, "prep"), pending)
                failed = pending & out[0].astype(bool)
                if not failed.any():
                    break
                if attempt >= g.retry_policy:
                    rejected[failed] = True
                    break
                retries[failed] += 1
                pending = failed
                attempt += 1
            run &= ~rejected
            out = machine.run(bound.couple[i], (tag, r, i, 0, "couple"), run)
            bits[:, i] = np.bitwise_xor.reduce(out, axis=0) & run
        return bits

    def block_syndrome(bits: np.ndarray, b: int) -> np.ndarray:
        s = np.zeros(B, dtype=np.int64)
        for j, i in enumerate(rows[b]):
            s |= bits[:, i].astype(np.int64) << j
        return s

    want = np.repeat(active[:, None], nblk, axis=1)
    rounds = want.astype(np.int64)
    first = one_round(0, want)
    final = first.copy()
    if g.repeat == "adaptive":
        syn1 = np.stack([block_syndrome(first, b) for b in range(nblk)], axis=1)
        want2 = want & (syn1 != 0) & ~rejected[:, None]
        if want2.any():
            second = one_round(1, want2)
            rounds += want2
            syn2 = np.stack([block_syndrome(second, b) for b in range(nblk)], axis=1)
            want3 = want2 & (syn2 != syn1) & ~rejected[:, None]
            third = one_round(2, want3) if want3.any() else np.zeros_like(first)
            rounds += want3
            pick2 = want2[:, block_of] & ~want3[:, block_of]
            pick3 = want3[:, block_of]
            final = np.where(pick2, second, np.where(pick3, third, first)).astype(np.uint8)
    outcome = SyndromeOutcome(final, retries, rejected, rounds)
    ok = active & ~rejected
    for b in range(nblk):
        s = block_syndrome(final, b)
        xs_t, zs_t = bound.tables[b]
        xs, zs = np.where(ok, xs_t[s], 0), np.where(ok, zs_t[s], 0)
        outcome.corrections.append((xs, zs))
        if xs.any() or zs.any():
            machine.xor_block(bound.offsets[b], g.codes[b].n, xs, zs)
    return outcome
