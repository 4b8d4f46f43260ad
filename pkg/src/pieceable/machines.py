"""Execution back ends for batched trials and the noise sources that feed them.

A machine runs compiled :class:`~pieceable.noise.Segment` objects for a batch
of shots, each call restricted to a boolean ``active`` mask.  The frame
machine reports measurement *flips* relative to the noiseless circuit; the
tableau machine reports actual outcomes.  Syndrome logic only uses parities
of outcomes that are deterministic in the noiseless circuit, where the two
agree.
"""

from __future__ import annotations

import numpy as np

from .frame import BatchFrames, pack_bits, unpack_bits
from .noise import NoiseParams, Segment
from .pauli import PauliOperator
from .tableau import CliffordTableau


class NoNoise:
    def events(self, seg: Segment, key, shots: np.ndarray):
        return None


class Depolarizing:
    def __init__(self, params: NoiseParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng

    def events(self, seg: Segment, key, shots: np.ndarray):
        if self.params.epsilon == 0:
            return None
        return seg.sample(self.params, shots, self.rng)


class ForcedFaults:
    """Deterministic faults: ``faults[key]`` lists ``(shot, location, pauli_code)``.

    ``key`` is the segment-instance key the gadget runner passes, e.g.
    ``("tec", 0, 3, 0, "couple")``; data pieces use ``("piece1",)``.
    """

    def __init__(self, faults: dict):
        self.faults = faults

    def events(self, seg: Segment, key, shots: np.ndarray):
        items = self.faults.get(key)
        if not items:
            return None
        arr = np.array(items, dtype=np.int64).reshape(-1, 3)
        keep = np.isin(arr[:, 0], shots)
        if not keep.any():
            return None
        arr = arr[keep]
        return seg.events_for(arr[:, 0], arr[:, 1], arr[:, 2])


class FrameMachine:
    """Packed Pauli frames for ``shots`` shots on ``n`` qubits."""

    def __init__(self, n: int, shots: int, noise=None, kernels=None):
        self.n = n
        self.shots = shots
        self.frames = BatchFrames(n, shots, kernels)
        self.noise = noise or NoNoise()

    def run(self, seg: Segment, key, active: np.ndarray) -> np.ndarray:
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            return np.zeros((seg.n_meas, self.shots), dtype=np.uint8)
        events = self.noise.events(seg, key, idx)
        full = len(idx) == self.shots
        rec = self.frames.run(seg.ops, seg.n_meas, events, None if full else pack_bits(active), seg.touched)
        if not seg.n_meas:
            return np.zeros((0, self.shots), np.uint8)
        return np.stack([unpack_bits(r, self.shots) for r in rec])

    def xor_block(self, offset: int, n: int, xs: np.ndarray, zs: np.ndarray) -> None:
        self.frames.apply_masks(range(offset, offset + n), xs, zs)

    def block_masks(self, offset: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        return self.frames.block_masks(range(offset, offset + n))


class TableauMachine:
    """One exact stabilizer tableau per shot.

    ``refs`` names, per data block, a reference qubit that starts maximally
    entangled with that block's logical qubit, so logical errors can be read
    out by measuring the joint logical-reference operators.
    """

    def __init__(self, n: int, shots: int, noise=None, seeds=None, kernels=None):
        self.n = n
        self.shots = shots
        self.noise = noise or NoNoise()
        seeds = seeds if seeds is not None else range(shots)
        self.tabs = [CliffordTableau(n, int(s), kernels) for s in seeds]

    def run(self, seg: Segment, key, active: np.ndarray) -> np.ndarray:
        out = np.zeros((seg.n_meas, self.shots), dtype=np.uint8)
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            return out
        events = self.noise.events(seg, key, idx)
        if events is not None:
            slot, q, word, mask, pauli = events
            shot = word.astype(np.int64) * 64 + np.bitwise_count(mask - np.uint64(1)).astype(np.int64)
            order = np.argsort(shot, kind="stable")
            slot, q, pauli, shot = slot[order], q[order], pauli[order], shot[order]
            bounds = np.searchsorted(shot, idx), np.searchsorted(shot, idx, side="right")
        for j, s in enumerate(idx):
            if events is not None:
                lo, hi = bounds[0][j], bounds[1][j]
                ev = (slot[lo:hi], q[lo:hi], pauli[lo:hi])
            else:
                ev = None
            res, _ = self.tabs[s].run_ops(seg.ops, seg.n_meas, ev)
            out[:, s] = res
        return out

    def xor_block(self, offset: int, n: int, xs: np.ndarray, zs: np.ndarray) -> None:
        for s in np.flatnonzero((xs != 0) | (zs != 0)):
            p = PauliOperator(self.n, int(xs[s]) << offset, int(zs[s]) << offset)
            self.tabs[s].apply_pauli(p)

    def prepare(self, stabilizers: list[PauliOperator], fixers: list[PauliOperator]) -> None:
        """Project every shot onto the +1 eigenspace of commuting ``stabilizers``.

        ``fixers[i]`` must anticommute with ``stabilizers[i]`` only; it is
        applied whenever that measurement returns -1.
        """
        for t in self.tabs:
            for s, f in zip(stabilizers, fixers):
                bit, _ = t.measure(s)
                if bit:
                    t.apply_pauli(f)

    def expect(self, ops: list[PauliOperator], shots: np.ndarray | None = None) -> np.ndarray:
        """Deterministic outcomes of measuring each op; raises if any is random."""
        idx = range(self.shots) if shots is None else shots
        out = np.zeros((self.shots, len(ops)), dtype=np.uint8)
        for s in idx:
            for j, p in enumerate(ops):
                bit = self.tabs[s].peek(p)
                if bit is None:
                    raise RuntimeError(f"outcome of {p} is not deterministic on shot {s}")
                out[s, j] = bit
        return out
