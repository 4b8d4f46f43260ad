"""Search for a piece assignment that keeps the all-pairs CNOT single-fault tolerant.

A fault on the CNOT from control ``i`` to target ``j`` in piece ``p`` can
leave an X error on control ``i`` that copies onto every later target of
row ``i`` in the same piece, and a Z error on target ``j`` that copies back
onto every later control of column ``j`` in the same piece.  The intermediate
EC then sees a contiguous run of the gate sequence.  If such a run is an
odd-weight codeword of the block's error code, the errors it leaves are
indistinguishable from a logical operator and the decoder can no longer tell
a harmless single fault from a logical one.

So an assignment is acceptable when, for every row (and column) and piece,
no contiguous run of that piece's gates is an odd-weight word of the
relevant code.  ``search_split`` finds one by first-improvement local search.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from .codes import StabilizerCode
from .pauli import PauliOperator


def odd_words(code: StabilizerCode, letter: str) -> frozenset[frozenset[int]]:
    """Supports of odd-weight ``letter``-type operators commuting with every generator."""
    out = set()
    for w in range(1, code.n + 1, 2):
        for sup in itertools.combinations(range(code.n), w):
            p = PauliOperator.on(code.n, letter, sup)
            if all(p.commutes(g) for g in code.generators):
                out.add(frozenset(sup))
    return frozenset(out)


def _runs_hitting(seq: list[int], bad: frozenset) -> int:
    count = 0
    for a in range(len(seq)):
        for b in range(a + 1, len(seq) + 1):
            if frozenset(seq[a:b]) in bad:
                count += 1
    return count


def violations(split: np.ndarray, row_bad: frozenset, col_bad: frozenset) -> int:
    """Number of contiguous runs that are bad words (0 means acceptable)."""
    nc, nt = split.shape
    total = 0
    for p in (1, 2):
        for i in range(nc):
            total += _runs_hitting([j for j in range(nt) if split[i, j] == p], row_bad)
        for j in range(nt):
            total += _runs_hitting([i for i in range(nc) if split[i, j] == p], col_bad)
    return total


def search_split(control: StabilizerCode, target: StabilizerCode, seed: int = 0,
                 max_steps: int = 20000) -> tuple[np.ndarray, int]:
    """Return ``(split, remaining_violations)`` with ``split[i, j]`` in {1, 2}.

    Rows see X errors spread onto the target block; columns see Z errors
    spread onto the control block.
    """
    row_bad = odd_words(target, "X")
    col_bad = odd_words(control, "Z")
    rng = random.Random(seed)
    nc, nt = control.n, target.n
    a = np.array([[rng.choice((1, 2)) for _ in range(nt)] for _ in range(nc)])
    cur = violations(a, row_bad, col_bad)
    for _ in range(max_steps):
        if cur == 0:
            break
        i, j = rng.randrange(nc), rng.randrange(nt)
        a[i, j] ^= 3
        v = violations(a, row_bad, col_bad)
        if v <= cur:
            cur = v
        else:
            a[i, j] ^= 3
    return a, cur
