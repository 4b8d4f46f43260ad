"""Pure-numpy simulation kernels.

Fallback for the compiled ``_ext`` module; both expose the same three
functions with identical semantics and random streams.

Frames are bit-packed over shots: ``fx[q, w]`` bit ``b`` is the X component
on qubit ``q`` for shot ``64*w + b``.  Tableaux are bit-packed over qubits:
row ``i`` of ``xs``/``zs`` holds ``W = ceil(n/64)`` words.  Rows ``0..n-1``
are destabilizers, ``n..2n-1`` stabilizers and row ``2n`` is scratch.

Noise events are applied at *slots*: slot ``2k`` is just before op ``k`` and
slot ``2k+1`` just after it.  Event arrays must be sorted by slot.
"""

from __future__ import annotations

import numpy as np

from .circuit import (OP_CNOT, OP_CZ, OP_H, OP_MACC, OP_MFLUSH, OP_MX, OP_MZ,
                      OP_PREPX, OP_PREPZ, OP_S, OP_X, OP_Y, OP_Z)

_M64 = (1 << 64) - 1
_ONES = np.uint64(_M64)
_ONE = np.uint64(1)


def frame_run(ops, fx, fz, rec, ev_slot, ev_q, ev_word, ev_mask, ev_pauli):
    """Propagate packed Pauli frames through ``ops``, writing flips into ``rec``."""
    acc = np.zeros(fx.shape[1], dtype=np.uint64)
    ne = len(ev_slot)
    e = 0
    for k in range(len(ops)):
        code, a, b = int(ops[k, 0]), int(ops[k, 1]), int(ops[k, 2])
        while e < ne and ev_slot[e] == 2 * k:
            _frame_event(fx, fz, ev_q[e], ev_word[e], ev_mask[e], ev_pauli[e])
            e += 1
        if code == OP_CNOT:
            fx[b] ^= fx[a]
            fz[a] ^= fz[b]
        elif code == OP_CZ:
            fz[a] ^= fx[b]
            fz[b] ^= fx[a]
        elif code == OP_H:
            tmp = fx[a].copy()
            fx[a] = fz[a]
            fz[a] = tmp
        elif code == OP_S:
            fz[a] ^= fx[a]
        elif code == OP_PREPZ or code == OP_PREPX:
            fx[a] = 0
            fz[a] = 0
        elif code == OP_MZ:
            rec[b & 0x3FFFFFFF] = fx[a]
        elif code == OP_MX:
            rec[b & 0x3FFFFFFF] = fz[a]
        elif code == OP_MACC:
            if b & 1:
                acc ^= fz[a]
            if b & 2:
                acc ^= fx[a]
        elif code == OP_MFLUSH:
            rec[a] = acc
            acc[:] = 0
        while e < ne and ev_slot[e] == 2 * k + 1:
            _frame_event(fx, fz, ev_q[e], ev_word[e], ev_mask[e], ev_pauli[e])
            e += 1


def _frame_event(fx, fz, q, w, mask, pauli):
    if pauli & 1:
        fx[q, w] ^= mask
    if pauli & 2:
        fz[q, w] ^= mask


# -- tableau -----------------------------------------------------------------

def splitmix64(state: int) -> tuple[int, int]:
    """One step of splitmix64: returns (new_state, output)."""
    state = (int(state) + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return state, z ^ (z >> 31)


def _col(arr, q):
    return (arr[:, q >> 6] >> np.uint64(q & 63)) & _ONE


def _flip_col(arr, q, bits):
    arr[:, q >> 6] ^= bits << np.uint64(q & 63)


def _rowsum(xs, zs, r, h, i):
    """row h <- row i * row h, with the exact sign."""
    x1, z1, x2, z2 = xs[i], zs[i], xs[h], zs[h]
    y1, xo1, zo1 = x1 & z1, x1 & ~z1, z1 & ~x1
    y2, xo2, zo2 = x2 & z2, x2 & ~z2, z2 & ~x2
    cnt = np.bitwise_count
    plus = int(cnt(xo1 & y2).sum() + cnt(y1 & zo2).sum() + cnt(zo1 & xo2).sum())
    minus = int(cnt(xo1 & zo2).sum() + cnt(y1 & xo2).sum() + cnt(zo1 & y2).sum())
    total = 2 * int(r[i]) + 2 * int(r[h]) + plus - minus
    r[h] = (total % 4) // 2
    xs[h] ^= x1
    zs[h] ^= z1


def _anticommuting(xs, zs, px, pz, lo, hi):
    par = np.bitwise_count((xs[lo:hi] & pz) ^ (zs[lo:hi] & px)).sum(axis=1) & 1
    return np.flatnonzero(par) + lo


def tab_measure(xs, zs, r, n, px, pz, neg, state):
    """Measure ``(-1)**neg * P``.  Returns (outcome, deterministic, new_state)."""
    anti = _anticommuting(xs, zs, px, pz, n, 2 * n)
    if len(anti):
        p = int(anti[0])
        for i in _anticommuting(xs, zs, px, pz, 0, 2 * n):
            if i != p:
                _rowsum(xs, zs, r, int(i), p)
        xs[p - n] = xs[p]
        zs[p - n] = zs[p]
        r[p - n] = r[p]
        state, out = splitmix64(state)
        bit = out & 1
        xs[p] = px
        zs[p] = pz
        r[p] = bit ^ neg
        return bit, 0, state
    s = 2 * n
    xs[s] = 0
    zs[s] = 0
    r[s] = 0
    for i in _anticommuting(xs, zs, px, pz, 0, n):
        _rowsum(xs, zs, r, s, int(i) + n)
    return int(r[s]) ^ neg, 1, state


def _tab_pauli(xs, zs, r, q, pauli):
    bits = np.zeros(len(r), dtype=np.uint64)
    if pauli & 1:
        bits ^= _col(zs, q)
    if pauli & 2:
        bits ^= _col(xs, q)
    r ^= bits.astype(np.uint8)


def tab_run(ops, xs, zs, r, n, out, det, ev_slot, ev_q, ev_pauli, state):
    """Run ``ops`` on one tableau; outcomes go to ``out``.  Returns the rng state."""
    W = xs.shape[1]
    state = int(state)
    accx = np.zeros(W, dtype=np.uint64)
    accz = np.zeros(W, dtype=np.uint64)
    ne = len(ev_slot)
    e = 0
    for k in range(len(ops)):
        code, a, b = int(ops[k, 0]), int(ops[k, 1]), int(ops[k, 2])
        while e < ne and ev_slot[e] == 2 * k:
            _tab_pauli(xs, zs, r, int(ev_q[e]), int(ev_pauli[e]))
            e += 1
        if code == OP_H:
            xa, za = _col(xs, a), _col(zs, a)
            r ^= (xa & za).astype(np.uint8)
            _flip_col(xs, a, xa ^ za)
            _flip_col(zs, a, xa ^ za)
        elif code == OP_S:
            xa, za = _col(xs, a), _col(zs, a)
            r ^= (xa & za).astype(np.uint8)
            _flip_col(zs, a, xa)
        elif code == OP_X:
            _tab_pauli(xs, zs, r, a, 1)
        elif code == OP_Z:
            _tab_pauli(xs, zs, r, a, 2)
        elif code == OP_Y:
            _tab_pauli(xs, zs, r, a, 3)
        elif code == OP_CNOT:
            xc, zc, xt, zt = _col(xs, a), _col(zs, a), _col(xs, b), _col(zs, b)
            r ^= (xc & zt & (xt ^ zc ^ _ONE)).astype(np.uint8)
            _flip_col(xs, b, xc)
            _flip_col(zs, a, zt)
        elif code == OP_CZ:
            xa, za, xb, zb = _col(xs, a), _col(zs, a), _col(xs, b), _col(zs, b)
            r ^= (xa & xb & (za ^ zb)).astype(np.uint8)
            _flip_col(zs, a, xb)
            _flip_col(zs, b, xa)
        elif code in (OP_PREPZ, OP_PREPX, OP_MZ, OP_MX):
            px = np.zeros(W, dtype=np.uint64)
            pz = np.zeros(W, dtype=np.uint64)
            bit = np.uint64(1) << np.uint64(a & 63)
            if code in (OP_PREPX, OP_MX):
                px[a >> 6] = bit
            else:
                pz[a >> 6] = bit
            neg = (b >> 30) & 1 if code in (OP_MZ, OP_MX) else 0
            outcome, d, state = tab_measure(xs, zs, r, n, px, pz, neg, state)
            if code in (OP_MZ, OP_MX):
                m = b & 0x3FFFFFFF
                out[m] = outcome
                det[m] = d
            elif outcome:
                _tab_pauli(xs, zs, r, a, 2 if code == OP_PREPX else 1)
        elif code == OP_MACC:
            bit = np.uint64(1) << np.uint64(a & 63)
            if b & 1:
                accx[a >> 6] |= bit
            if b & 2:
                accz[a >> 6] |= bit
        elif code == OP_MFLUSH:
            outcome, d, state = tab_measure(xs, zs, r, n, accx, accz, b, state)
            out[a] = outcome
            det[a] = d
            accx[:] = 0
            accz[:] = 0
        while e < ne and ev_slot[e] == 2 * k + 1:
            _tab_pauli(xs, zs, r, int(ev_q[e]), int(ev_pauli[e]))
            e += 1
    return state


def adam_step(p, g, m, v, b1, b2, step, eps):
    """One Adam update over flat buffers, in place."""
    m *= b1
    m += (1 - b1) * g
    v *= b2
    g2 = np.square(g)
    g2 *= 1 - b2
    v += g2
    np.sqrt(v, out=g2)
    g2 += eps
    np.divide(m, g2, out=g2)
    g2 *= step
    p -= g2
