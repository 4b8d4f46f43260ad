"""Exhaustive single-fault injection.

Every noisy location that executes in a fault-free run is given every
non-identity Pauli (3 for one-qubit locations, 15 for two-qubit ones), one
fault per shot, and all shots run as one frame batch.  Locations that only
execute after a detected fault (verification retries, repeated syndrome
rounds) cannot host the single fault and are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .machines import ForcedFaults, FrameMachine
from .noise import Segment


class _Recorder:
    def __init__(self):
        self.seen: list[tuple[tuple, Segment]] = []

    def events(self, seg: Segment, key, shots):
        self.seen.append((key, seg))
        return None


@dataclass
class FaultList:
    keys: list[tuple]               # segment-instance key per fault
    segments: list[Segment]
    locs: np.ndarray                # location index within the segment
    paulis: np.ndarray              # kernel Pauli code

    def __len__(self) -> int:
        return len(self.locs)

    def describe(self, i: int) -> str:
        seg = self.segments[i]
        loc = seg.locations[int(self.locs[i])]
        p = int(self.paulis[i])
        letters = "IXZY"
        name = letters[p & 3] + letters[p >> 2] if loc.kind == "gate2" else letters[p]
        return f"{'/'.join(map(str, self.keys[i]))} loc {loc.location_id} ({loc.kind} on {loc.qubits}) {name}"


def enumerate_faults(run, n_qubits: int, include=None) -> FaultList:
    """All single faults for the procedure ``run(machine)``.

    ``include(key)`` may filter segment instances (e.g. to data pieces only).
    """
    rec = _Recorder()
    run(FrameMachine(n_qubits, 1, rec))
    keys, segs, locs, paulis = [], [], [], []
    seen = set()
    for key, seg in rec.seen:
        if key in seen or (include is not None and not include(key)):
            continue
        seen.add(key)
        for li in range(len(seg)):
            count = 15 if seg.loc_arity[li] == 2 else 3
            for p in range(1, count + 1):
                keys.append(key)
                segs.append(seg)
                locs.append(li)
                paulis.append(p)
    return FaultList(keys, segs, np.array(locs, dtype=np.int64), np.array(paulis, dtype=np.int64))


def inject_all(run, n_qubits: int, faults: FaultList):
    """Run every fault of ``faults`` in its own shot; returns ``run``'s result."""
    table: dict[tuple, list] = {}
    for shot, (key, li, p) in enumerate(zip(faults.keys, faults.locs, faults.paulis)):
        table.setdefault(key, []).append((shot, int(li), int(p)))
    machine = FrameMachine(n_qubits, len(faults), ForcedFaults(table))
    return run(machine)
