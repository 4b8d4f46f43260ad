"""Recovery operators and the table-driven baseline decoders.

Every decoder answers the same question: given the exRec syndromes
``(s_lec, s1, s2)``, which logical Paulis should follow the minimum-weight
pure-error correction already applied by the trailing EC?  Answers are
circuit-order bits ``(xc, zc, xt, zt)``.

* ``lookup`` never adds a logical correction (plain per-block minimum weight).
* ``mwd`` is the extended minimum-weight decoder: a table from syndrome keys
  to the logical correction demanded by the unique single fault (if any)
  that produces them, built by exhaustive single-fault injection.  Keys seen
  with no fault, or never seen, get no logical correction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import StabilizerCode
from .pauli import PauliOperator


def _as_int(code: StabilizerCode, s) -> int:
    if isinstance(s, (int, np.integer)):
        return int(s)
    if len(s) != code.r:
        raise ValueError(f"syndrome length {len(s)} != {code.r}")
    return sum(int(b) << i for i, b in enumerate(s))


def mwd_decode(code: StabilizerCode, s) -> PauliOperator:
    """Minimum-weight correction for syndrome ``s`` (bit i = generator i)."""
    return code.lookup()[_as_int(code, s)]


@dataclass(frozen=True)
class RecoveryOperator:
    pure_part: PauliOperator
    g_x: int
    g_z: int

    def operator(self, code: StabilizerCode) -> PauliOperator:
        """X^gX Z^gZ T(s); the stabilizer factor is fixed to the identity."""
        out = self.pure_part
        if self.g_z:
            out = code.logical_z[0] * out
        if self.g_x:
            out = code.logical_x[0] * out
        return out

    @property
    def label(self) -> str:
        return LABELS[(self.g_x, self.g_z)]


LABELS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


def assemble_recovery(code: StabilizerCode, s, g_x: int, g_z: int) -> PauliOperator:
    if g_x not in (0, 1) or g_z not in (0, 1):
        raise ValueError("logical bits must be 0 or 1")
    return RecoveryOperator(mwd_decode(code, s), g_x, g_z).operator(code)


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack each row of a 0/1 matrix (<= 63 columns) into an int64, column 0 lowest."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[1] > 63:
        raise ValueError("too many columns to pack")
    return (bits << np.arange(bits.shape[1], dtype=np.int64)).sum(axis=1)


class LookupDecoder:
    """No logical correction: the trailing EC's minimum-weight step only."""

    name = "lookup"

    def decode(self, s_lec, s1, s2) -> np.ndarray:
        return np.zeros((len(s2), 4), dtype=np.uint8)


class TableDecoder:
    """Syndrome-key table with an optional coarser fallback table.

    ``keys``/``values`` use the full 47-bit key ``s_lec|s1|s2``; the fallback
    uses ``s1|s2`` only and answers keys absent from the full table.
    """

    name = "mwd"

    def __init__(self, keys: np.ndarray, values: np.ndarray, fb_keys: np.ndarray | None = None,
                 fb_values: np.ndarray | None = None):
        order = np.argsort(keys)
        self.keys, self.values = keys[order], values[order]
        if fb_keys is None:
            fb_keys, fb_values = np.zeros(0, np.int64), np.zeros((0, 4), np.uint8)
        order = np.argsort(fb_keys)
        self.fb_keys, self.fb_values = fb_keys[order], fb_values[order]

    @staticmethod
    def _find(keys, values, k):
        out = np.zeros((len(k), 4), dtype=np.uint8)
        if len(keys) == 0:
            return out, np.zeros(len(k), dtype=bool)
        pos = np.clip(np.searchsorted(keys, k), 0, len(keys) - 1)
        hit = keys[pos] == k
        out[hit] = values[pos[hit]]
        return out, hit

    def decode(self, s_lec, s1, s2) -> np.ndarray:
        full = pack_rows(np.concatenate([s_lec, s1, s2], axis=1))
        out, hit = self._find(self.keys, self.values, full)
        if (~hit).any():
            short = pack_rows(np.concatenate([s1, s2], axis=1))[~hit]
            out[~hit], _ = self._find(self.fb_keys, self.fb_values, short)
        return out

    def __len__(self) -> int:
        return len(self.keys)


@dataclass
class TableConflicts:
    full: int
    short: int


def build_table(features: np.ndarray, raw: np.ndarray) -> tuple[TableDecoder, TableConflicts]:
    """Table from single-fault records.

    ``features`` rows are ``s_lec|s1|s2`` (47 bits); ``raw`` rows are the
    logical error each record would suffer with no logical correction.  A key
    reached with two different errors is a conflict; it is stored with the
    error of the first record and counted.
    """
    n_lec = features.shape[1] - 27
    short = features[:, n_lec:]
    tables = []
    counts = []
    for f in (features, short):
        keys = pack_rows(f)
        order = np.lexsort((np.arange(len(keys)), keys))
        keys_s, raw_s = keys[order], raw[order]
        first = np.ones(len(keys_s), dtype=bool)
        first[1:] = keys_s[1:] != keys_s[:-1]
        starts = np.flatnonzero(first)
        uk, uv = keys_s[starts], raw_s[starts]
        grp = np.cumsum(first) - 1
        differs = (raw_s != uv[grp]).any(axis=1)
        counts.append(int(len(np.unique(grp[differs]))))
        nonzero = uv.any(axis=1)
        tables.append((uk[nonzero], uv[nonzero].astype(np.uint8)))
    dec = TableDecoder(tables[0][0], tables[0][1], tables[1][0], tables[1][1])
    return dec, TableConflicts(*counts)


_TABLES: dict[tuple, tuple[TableDecoder, TableConflicts]] = {}


def _circuit_key(c) -> tuple:
    return (c.name, tuple(c.piece1), c.e2.repeat, c.e2.retry_policy, c.e1.stabilizers_measured)


def single_fault_records(c):
    """Inject every single fault into one exRec of ``c``; returns (faults, ExRecResult)."""
    from .exrec import N_TABLEAU, ExRecProgram, run_exrec
    from .faults import enumerate_faults, inject_all

    prog = ExRecProgram(c)
    faults = enumerate_faults(lambda m: run_exrec(prog, m), N_TABLEAU)
    return faults, inject_all(lambda m: run_exrec(prog, m), N_TABLEAU, faults)


def extended_lookup_decoder(c) -> TableDecoder:
    """The ``mwd`` decoder for two-block circuit ``c`` (cached per construction)."""
    return extended_lookup_table(c)[0]


def extended_lookup_table(c) -> tuple[TableDecoder, TableConflicts]:
    key = _circuit_key(c)
    if key not in _TABLES:
        _, res = single_fault_records(c)
        ok = res.accepted
        _TABLES[key] = build_table(res.features[ok], res.raw[ok])
    return _TABLES[key]


def make_decoder(kind: str, c):
    if kind == "lookup":
        return LookupDecoder()
    if kind == "mwd":
        return extended_lookup_decoder(c)
    raise ValueError(f"unknown decoder {kind!r}")
