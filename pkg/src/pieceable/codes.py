"""The Steane [[7,1,3]] and Reed-Muller [[15,1,3]] codes.

Generator order is the printed table order and is also the bit order of every
syndrome vector produced by this package (bit ``i`` of a syndrome integer is
generator ``i``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .pauli import PauliOperator, symplectic_rank

STEANE_ROWS = (
    "X0 X2 X4 X6",
    "X1 X2 X5 X6",
    "X3 X4 X5 X6",
    "Z0 Z2 Z4 Z6",
    "Z1 Z2 Z5 Z6",
    "Z3 Z4 Z5 Z6",
)

RM15_ROWS = (
    "X7 X8 X9 X10 X11 X12 X13 X14",
    "X3 X4 X5 X6 X11 X12 X13 X14",
    "X1 X2 X5 X6 X9 X10 X13 X14",
    "X0 X2 X4 X6 X8 X10 X12 X14",
    "Z7 Z8 Z9 Z10 Z11 Z12 Z13 Z14",
    "Z3 Z4 Z5 Z6 Z11 Z12 Z13 Z14",
    "Z1 Z2 Z5 Z6 Z9 Z10 Z13 Z14",
    "Z0 Z2 Z4 Z6 Z8 Z10 Z12 Z14",
    "Z11 Z12 Z13 Z14",
    "Z9 Z10 Z13 Z14",
    "Z8 Z10 Z12 Z14",
    "Z5 Z6 Z13 Z14",
    "Z4 Z6 Z12 Z14",
    "Z2 Z6 Z10 Z14",
)


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    name: str
    n: int
    k: int
    d: int
    generators: tuple[PauliOperator, ...]
    logical_x: tuple[PauliOperator, ...]
    logical_z: tuple[PauliOperator, ...]
    pure_errors: tuple[PauliOperator, ...] = field(default=())

    @property
    def r(self) -> int:
        """Number of generators (syndrome length)."""
        return len(self.generators)

    # per-qubit syndrome contributions, used for fast bitwise syndromes
    @cached_property
    def _site_syndromes(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        sx, sz = [], []
        for q in range(self.n):
            bit = 1 << q
            sx.append(sum(1 << i for i, g in enumerate(self.generators) if g.z & bit))
            sz.append(sum(1 << i for i, g in enumerate(self.generators) if g.x & bit))
        return tuple(sx), tuple(sz)

    def syndrome_int(self, e: PauliOperator) -> int:
        if e.n != self.n:
            raise ValueError(f"error acts on {e.n} qubits, code has {self.n}")
        s = 0
        for i, g in enumerate(self.generators):
            if not g.commutes(e):
                s |= 1 << i
        return s

    def syndrome(self, e: PauliOperator) -> tuple[int, ...]:
        s = self.syndrome_int(e)
        return tuple((s >> i) & 1 for i in range(self.r))

    def syndrome_of_masks(self, x: int, z: int) -> int:
        sx, sz = self._site_syndromes
        s = 0
        q = 0
        while x or z:
            if x & 1:
                s ^= sx[q]
            if z & 1:
                s ^= sz[q]
            x >>= 1
            z >>= 1
            q += 1
        return s

    @cached_property
    def stabilizer_matrix(self) -> np.ndarray:
        """Binary (r, 2n) check matrix with columns [X part | Z part]."""
        m = np.zeros((self.r, 2 * self.n), dtype=np.uint8)
        for i, g in enumerate(self.generators):
            for q in range(self.n):
                m[i, q] = (g.x >> q) & 1
                m[i, self.n + q] = (g.z >> q) & 1
        return m

    def x_type_rows(self) -> list[int]:
        return [i for i, g in enumerate(self.generators) if g.z == 0]

    def z_type_rows(self) -> list[int]:
        return [i for i, g in enumerate(self.generators) if g.x == 0]

    def in_stabilizer_group(self, p: PauliOperator) -> bool:
        """Membership of p (ignoring phase) in the group generated by the generators."""
        if p.n != self.n:
            return False
        return symplectic_rank(list(self.generators) + [p.unsigned()]) == self.r

    def logical_class(self, p: PauliOperator) -> tuple[int, int]:
        """(x, z) logical components of an operator in the normalizer."""
        return (int(not p.commutes(self.logical_z[0])), int(not p.commutes(self.logical_x[0])))

    def lookup(self) -> dict[int, PauliOperator]:
        return build_lookup(self)

    def pure_error(self, s: int | tuple[int, ...]) -> PauliOperator:
        return pure_error(self, s)

    def check_matrix_text(self) -> str:
        lines = [f"# {self.name} [[{self.n},{self.k},{self.d}]]  columns: X(0..{self.n - 1}) | Z(0..{self.n - 1})"]
        for g in self.generators:
            lines.append(_row_text(g))
        lines.append("# logical X")
        lines.extend(_row_text(p) for p in self.logical_x)
        lines.append("# logical Z")
        lines.extend(_row_text(p) for p in self.logical_z)
        return "\n".join(lines) + "\n"

    def validate(self) -> None:
        """Raise ValueError if any structural invariant fails."""
        gens = self.generators
        for a, b in itertools.combinations(gens, 2):
            if not a.commutes(b):
                raise ValueError("generators do not commute")
        if symplectic_rank(gens) != self.n - self.k:
            raise ValueError("generators are not independent")
        for lx, lz in zip(self.logical_x, self.logical_z):
            for g in gens:
                if not (lx.commutes(g) and lz.commutes(g)):
                    raise ValueError("logical operator outside the normalizer")
            if lx.commutes(lz):
                raise ValueError("logical X and Z must anticommute")
        for i, g in enumerate(gens):
            for j, t in enumerate(self.pure_errors):
                if g.commutes(t) == (i == j):
                    raise ValueError(f"pure error {j} fails against generator {i}")


def _row_text(p: PauliOperator) -> str:
    xs = "".join(str((p.x >> q) & 1) for q in range(p.n))
    zs = "".join(str((p.z >> q) & 1) for q in range(p.n))
    return f"{xs}|{zs}"


def _make(name: str, n: int, rows: tuple[str, ...]) -> StabilizerCode:
    gens = tuple(PauliOperator.parse(r, n) for r in rows)
    lx = (PauliOperator.on(n, "X", range(n)),)
    lz = (PauliOperator.on(n, "Z", range(n)),)
    code = StabilizerCode(name, n, 1, 3, gens, lx, lz)
    object.__setattr__(code, "pure_errors", _find_pure_errors(code))
    code.validate()
    return code


def _find_pure_errors(code: StabilizerCode) -> tuple[PauliOperator, ...]:
    """Lowest-weight T_j anticommuting with generator j only, commuting with both logicals."""
    targets = {1 << j for j in range(code.r)}
    found = _first_by_weight(code, targets, logical_free=True)
    return tuple(found[1 << j] for j in range(code.r))


def _first_by_weight(code: StabilizerCode, targets: set[int] | None,
                     logical_free: bool = False) -> dict[int, PauliOperator]:
    """First Pauli (by weight, then support, then X<Y<Z) hitting each target syndrome.

    ``targets=None`` asks for every syndrome.  With ``logical_free`` the
    candidate must commute with the logical X and Z operators.
    """
    n = code.n
    lz, lx = code.logical_z[0], code.logical_x[0]
    mask = (1 << code.r) - 1

    def cell(q: int, letter: str) -> int:
        # syndrome bits, then anticommutation with (Zbar, Xbar) above them
        p = PauliOperator.from_sites(n, [(q, letter)])
        return code.syndrome_int(p) | (int(not p.commutes(lz)) << code.r) | (int(not p.commutes(lx)) << (code.r + 1))

    site = np.array([[cell(q, c) for c in "XYZ"] for q in range(n)], dtype=np.int64)
    want = np.zeros(1 << (code.r + 2), dtype=bool)
    want[list(range(mask + 1)) if targets is None else list(targets)] = True
    found: dict[int, PauliOperator] = {}
    if want[0]:
        found[0] = PauliOperator.identity(n)
        want[0] = False
    remaining = int(want.sum())
    for w in range(1, n + 1):
        if remaining == 0:
            break
        letters = np.array(list(itertools.product(range(3), repeat=w)), dtype=np.int64)
        rows = np.arange(w)
        for sup in itertools.combinations(range(n), w):
            cells = np.bitwise_xor.reduce(site[list(sup)][rows, letters], axis=1)
            key = cells if logical_free else cells & mask
            for idx in np.flatnonzero(want[key]):
                k = int(key[idx])
                if want[k]:
                    want[k] = False
                    remaining -= 1
                    found[k & mask] = PauliOperator.from_sites(n, zip(sup, ("XYZ"[c] for c in letters[idx])))
            if remaining == 0:
                break
    return found


@lru_cache(maxsize=None)
def steane() -> StabilizerCode:
    return _make("steane", 7, STEANE_ROWS)


@lru_cache(maxsize=None)
def rm15() -> StabilizerCode:
    return _make("rm15", 15, RM15_ROWS)


def syndrome(code: StabilizerCode, e: PauliOperator) -> tuple[int, ...]:
    return code.syndrome(e)


def pure_error(code: StabilizerCode, s: int | tuple[int, ...]) -> PauliOperator:
    """Product of the pure-error generators selected by the syndrome bits."""
    if not isinstance(s, int):
        if len(s) != code.r:
            raise ValueError(f"syndrome length {len(s)} != {code.r}")
        s = sum(int(b) << i for i, b in enumerate(s))
    out = PauliOperator.identity(code.n)
    for j, t in enumerate(code.pure_errors):
        if (s >> j) & 1:
            out = out * t
    return out.unsigned()


_LOOKUPS: dict[str, dict[int, PauliOperator]] = {}


def build_lookup(code: StabilizerCode) -> dict[int, PauliOperator]:
    """Minimal-weight representative for every syndrome.

    Enumerates Paulis by increasing weight; within a weight the first hit in
    (support, X<Y<Z) lexicographic order wins.
    """
    if code.name not in _LOOKUPS:
        _LOOKUPS[code.name] = _first_by_weight(code, None)
    return _LOOKUPS[code.name]


def lookup_arrays(code: StabilizerCode) -> tuple[np.ndarray, np.ndarray]:
    """Lookup table as (x_mask, z_mask) int arrays indexed by syndrome."""
    table = build_lookup(code)
    xs = np.zeros(1 << code.r, dtype=np.int64)
    zs = np.zeros(1 << code.r, dtype=np.int64)
    for s, p in table.items():
        xs[s], zs[s] = p.x, p.z
    return xs, zs


# -- operations on tableau states ------------------------------------------
# ``state`` is a CliffordTableau; blocks are (code, first qubit) pairs.

def ideal_project(state, blocks) -> list[tuple[int, PauliOperator]]:
    """Noise-free EC on each block: measure every generator, apply the lookup.

    Returns ``(syndrome, correction)`` per block; the state is left in the
    code space of every block.
    """
    out = []
    for code, off in blocks:
        s = 0
        for i, g in enumerate(code.generators):
            bit, _ = state.measure(g.embed(state.n, off))
            s |= bit << i
        corr = code.lookup()[s]
        if not corr.is_identity():
            state.apply_pauli(corr.embed(state.n, off))
        out.append((s, corr))
    return out


def logical_measure(state, code: StabilizerCode, off: int, basis: str = "Z") -> int:
    """Deterministic logical Z (or X) readout of a block in the code space.

    Raises ``ValueError`` when the outcome is random (not an eigenstate).
    """
    op = (code.logical_z if basis == "Z" else code.logical_x)[0].embed(state.n, off)
    bit = state.peek(op)
    if bit is None:
        raise ValueError(f"logical {basis} of {code.name} block is not deterministic")
    return bit


def prepare_logical(state, code: StabilizerCode, off: int, which: str = "0") -> None:
    """Project a block onto logical |0>, |1>, |+> or |-> by ideal measurement and Pauli fixes."""
    basis, sign = {"0": ("Z", 0), "1": ("Z", 1), "+": ("X", 0), "-": ("X", 1)}[which]
    for g, t in zip(code.generators, code.pure_errors):
        bit, _ = state.measure(g.embed(state.n, off))
        if bit:
            state.apply_pauli(t.embed(state.n, off))
    op = (code.logical_z if basis == "Z" else code.logical_x)[0].embed(state.n, off)
    flip = (code.logical_x if basis == "Z" else code.logical_z)[0].embed(state.n, off)
    bit, _ = state.measure(op)
    if bit != sign:
        state.apply_pauli(flip)
