"""Exact n-qubit Pauli operators in symplectic form.

Operators are stored as two little-endian bit masks (bit ``j`` of ``x``/``z``
is the X/Z component on qubit ``j``) plus a phase exponent ``k`` so that the
operator equals ``i**k`` times the tensor product of the letters I, X, Y, Z
read off the masks.  A site with both bits set is the Hermitian letter Y.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

_PHASE_TEXT = {0: "+1", 1: "+i", 2: "-1", 3: "-i"}
_TEXT_PHASE = {"+1": 0, "1": 0, "+": 0, "+i": 1, "i": 1, "-1": 2, "-": 2, "-i": 3}
_TERM = re.compile(r"^([IXYZ])(\d+)$")


def _popcount(v: int) -> int:
    return v.bit_count()


@dataclass(frozen=True)
class PauliOperator:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("qubit count must be positive")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask or self.x < 0 or self.z < 0:
            raise ValueError(f"bit masks exceed {self.n} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- constructors -------------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> PauliOperator:
        return cls(n)

    @classmethod
    def from_sites(cls, n: int, sites: dict[int, str] | Iterable[tuple[int, str]], phase: int = 0) -> PauliOperator:
        items = sites.items() if isinstance(sites, dict) else sites
        x = z = 0
        for q, letter in items:
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for n={n}")
            bit = 1 << q
            if (x | z) & bit:
                raise ValueError(f"qubit {q} listed twice")
            if letter in "XY":
                x |= bit
            if letter in "ZY":
                z |= bit
            if letter not in "IXYZ":
                raise ValueError(f"unknown Pauli letter {letter!r}")
        return cls(n, x, z, phase)

    @classmethod
    def on(cls, n: int, letter: str, qubits: Iterable[int]) -> PauliOperator:
        """The same letter on every listed qubit, e.g. ``on(7, "Z", range(7))``."""
        return cls.from_sites(n, [(q, letter) for q in qubits])

    @classmethod
    def parse(cls, text: str, n: int) -> PauliOperator:
        """Parse ``"+1 X0 X2 X4 X6"``; the phase prefix is optional."""
        tokens = text.split()
        phase = 0
        if tokens and tokens[0] in _TEXT_PHASE:
            phase = _TEXT_PHASE[tokens.pop(0)]
        sites = []
        for tok in tokens:
            m = _TERM.match(tok)
            if m is None:
                if tok == "I":
                    continue
                raise ValueError(f"bad Pauli term {tok!r}")
            if m.group(1) != "I":
                sites.append((int(m.group(2)), m.group(1)))
        return cls.from_sites(n, sites, phase)

    # -- views ---------------------------------------------------------------
    def letter(self, q: int) -> str:
        return "IXZY"[((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)]

    def support(self) -> set[int]:
        s = self.x | self.z
        return {q for q in range(self.n) if (s >> q) & 1}

    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def unsigned(self) -> PauliOperator:
        return PauliOperator(self.n, self.x, self.z, 0)

    def text(self, with_phase: bool = True) -> str:
        terms = [f"{self.letter(q)}{q}" for q in sorted(self.support())]
        body = " ".join(terms) if terms else "I"
        return f"{_PHASE_TEXT[self.phase]} {body}" if with_phase else body

    def dense(self) -> str:
        return "".join(self.letter(q) for q in range(self.n))

    def __str__(self) -> str:
        return self.text()

    # -- algebra -------------------------------------------------------------
    def commutes(self, other: PauliOperator) -> bool:
        _check_dims(self, other)
        return _popcount((self.x & other.z) ^ (self.z & other.x)) % 2 == 0

    def __mul__(self, other: PauliOperator) -> PauliOperator:
        _check_dims(self, other)
        x1, z1, x2, z2 = self.x, self.z, other.x, other.z
        y1, xo1, zo1 = x1 & z1, x1 & ~z1, z1 & ~x1
        y2, xo2, zo2 = x2 & z2, x2 & ~z2, z2 & ~x2
        # per-site letter products: XY=iZ, YZ=iX, ZX=iY and reversed with -i
        plus = _popcount(xo1 & y2) + _popcount(y1 & zo2) + _popcount(zo1 & xo2)
        minus = _popcount(xo1 & zo2) + _popcount(y1 & xo2) + _popcount(zo1 & y2)
        phase = self.phase + other.phase + plus - minus
        return PauliOperator(self.n, x1 ^ x2, z1 ^ z2, phase)

    def inverse(self) -> PauliOperator:
        # letters are self-inverse; only the scalar needs inverting
        return PauliOperator(self.n, self.x, self.z, -self.phase)

    def tensor(self, other: PauliOperator) -> PauliOperator:
        return PauliOperator(
            self.n + other.n,
            self.x | (other.x << self.n),
            self.z | (other.z << self.n),
            self.phase + other.phase,
        )

    def embed(self, n: int, offset: int) -> PauliOperator:
        """Place this operator on qubits ``offset .. offset+self.n-1`` of an n-qubit register."""
        if offset < 0 or offset + self.n > n:
            raise ValueError("embedding out of range")
        return PauliOperator(n, self.x << offset, self.z << offset, self.phase)

    def restrict(self, offset: int, size: int) -> PauliOperator:
        mask = (1 << size) - 1
        return PauliOperator(size, (self.x >> offset) & mask, (self.z >> offset) & mask)

    def equal_up_to_phase(self, other: PauliOperator) -> bool:
        return self.n == other.n and self.x == other.x and self.z == other.z


def _check_dims(p: PauliOperator, q: PauliOperator) -> None:
    if p.n != q.n:
        raise ValueError(f"dimension mismatch: {p.n} vs {q.n} qubits")


def weight(p: PauliOperator) -> int:
    return p.weight()


def support(p: PauliOperator) -> set[int]:
    return p.support()


def commutes(p: PauliOperator, q: PauliOperator) -> bool:
    return p.commutes(q)


def multiply(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    return p * q


def tensor(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    return p.tensor(q)


def symplectic_rank(ops: Iterable[PauliOperator]) -> int:
    """GF(2) rank of the (x|z) rows."""
    pivots: dict[int, int] = {}
    for p in ops:
        v = p.x | (p.z << p.n)
        while v:
            top = v.bit_length() - 1
            if top not in pivots:
                pivots[top] = v
                break
            v ^= pivots[top]
    return len(pivots)
