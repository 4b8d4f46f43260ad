# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels; same contract as ``_kernels``."""

from libc.stdint cimport uint64_t, uint8_t, int32_t, int64_t
from libc.math cimport sqrtf as sqrt

import numpy as np

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

cdef enum:
    OP_H = 1
    OP_S = 2
    OP_X = 3
    OP_Y = 4
    OP_Z = 5
    OP_CNOT = 6
    OP_CZ = 7
    OP_PREPZ = 8
    OP_PREPX = 9
    OP_MZ = 10
    OP_MX = 11
    OP_MACC = 12
    OP_MFLUSH = 13


def frame_run(const int32_t[:, ::1] ops, uint64_t[:, ::1] fx, uint64_t[:, ::1] fz,
              uint64_t[:, ::1] rec, const int64_t[::1] ev_slot, const int32_t[::1] ev_q,
              const int32_t[::1] ev_word, const uint64_t[::1] ev_mask, const uint8_t[::1] ev_pauli):
    cdef Py_ssize_t W = fx.shape[1]
    cdef Py_ssize_t nops = ops.shape[0]
    cdef Py_ssize_t ne = ev_slot.shape[0]
    cdef Py_ssize_t k, w, e = 0
    cdef int code, a, b
    cdef uint64_t tmp
    cdef uint64_t[::1] acc = np.zeros(W, dtype=np.uint64)
    with nogil:
        for k in range(nops):
            code = ops[k, 0]
            a = ops[k, 1]
            b = ops[k, 2]
            while e < ne and ev_slot[e] == 2 * k:
                if ev_pauli[e] & 1:
                    fx[ev_q[e], ev_word[e]] ^= ev_mask[e]
                if ev_pauli[e] & 2:
                    fz[ev_q[e], ev_word[e]] ^= ev_mask[e]
                e += 1
            if code == OP_CNOT:
                for w in range(W):
                    fx[b, w] ^= fx[a, w]
                    fz[a, w] ^= fz[b, w]
            elif code == OP_CZ:
                for w in range(W):
                    fz[a, w] ^= fx[b, w]
                    fz[b, w] ^= fx[a, w]
            elif code == OP_H:
                for w in range(W):
                    tmp = fx[a, w]
                    fx[a, w] = fz[a, w]
                    fz[a, w] = tmp
            elif code == OP_S:
                for w in range(W):
                    fz[a, w] ^= fx[a, w]
            elif code == OP_PREPZ or code == OP_PREPX:
                for w in range(W):
                    fx[a, w] = 0
                    fz[a, w] = 0
            elif code == OP_MZ:
                for w in range(W):
                    rec[b & 0x3FFFFFFF, w] = fx[a, w]
            elif code == OP_MX:
                for w in range(W):
                    rec[b & 0x3FFFFFFF, w] = fz[a, w]
            elif code == OP_MACC:
                for w in range(W):
                    if b & 1:
                        acc[w] ^= fz[a, w]
                    if b & 2:
                        acc[w] ^= fx[a, w]
            elif code == OP_MFLUSH:
                for w in range(W):
                    rec[a, w] = acc[w]
                    acc[w] = 0
            while e < ne and ev_slot[e] == 2 * k + 1:
                if ev_pauli[e] & 1:
                    fx[ev_q[e], ev_word[e]] ^= ev_mask[e]
                if ev_pauli[e] & 2:
                    fz[ev_q[e], ev_word[e]] ^= ev_mask[e]
                e += 1


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def splitmix64(uint64_t state):
    cdef uint64_t out = _splitmix(&state)
    return state, out


cdef inline int _anti(uint64_t[:, ::1] xs, uint64_t[:, ::1] zs, Py_ssize_t i,
                      uint64_t* px, uint64_t* pz, Py_ssize_t W) noexcept nogil:
    cdef int c = 0
    cdef Py_ssize_t w
    for w in range(W):
        c += __builtin_popcountll((xs[i, w] & pz[w]) ^ (zs[i, w] & px[w]))
    return c & 1


cdef inline void _rowsum(uint64_t[:, ::1] xs, uint64_t[:, ::1] zs, uint8_t[::1] r,
                         Py_ssize_t h, Py_ssize_t i, Py_ssize_t W) noexcept nogil:
    cdef long total = 2 * r[i] + 2 * r[h]
    cdef uint64_t x1, z1, x2, z2, y1, xo1, zo1, y2, xo2, zo2
    cdef Py_ssize_t w
    for w in range(W):
        x1 = xs[i, w]; z1 = zs[i, w]; x2 = xs[h, w]; z2 = zs[h, w]
        y1 = x1 & z1; xo1 = x1 & ~z1; zo1 = z1 & ~x1
        y2 = x2 & z2; xo2 = x2 & ~z2; zo2 = z2 & ~x2
        total += __builtin_popcountll(xo1 & y2) + __builtin_popcountll(y1 & zo2) + __builtin_popcountll(zo1 & xo2)
        total -= __builtin_popcountll(xo1 & zo2) + __builtin_popcountll(y1 & xo2) + __builtin_popcountll(zo1 & y2)
        xs[h, w] = x1 ^ x2
        zs[h, w] = z1 ^ z2
    r[h] = <uint8_t>(((total % 4) + 4) % 4 // 2)


cdef int _measure(uint64_t[:, ::1] xs, uint64_t[:, ::1] zs, uint8_t[::1] r, Py_ssize_t n,
                  uint64_t* px, uint64_t* pz, int neg, uint64_t* state, int* det) noexcept nogil:
    cdef Py_ssize_t W = xs.shape[1]
    cdef Py_ssize_t i, w, p = -1, s = 2 * n
    cdef int bit
    for i in range(n, 2 * n):
        if _anti(xs, zs, i, px, pz, W):
            p = i
            break
    if p >= 0:
        for i in range(2 * n):
            if i != p and _anti(xs, zs, i, px, pz, W):
                _rowsum(xs, zs, r, i, p, W)
        for w in range(W):
            xs[p - n, w] = xs[p, w]
            zs[p - n, w] = zs[p, w]
        r[p - n] = r[p]
        bit = <int>(_splitmix(state) & 1)
        for w in range(W):
            xs[p, w] = px[w]
            zs[p, w] = pz[w]
        r[p] = <uint8_t>(bit ^ neg)
        det[0] = 0
        return bit
    for w in range(W):
        xs[s, w] = 0
        zs[s, w] = 0
    r[s] = 0
    for i in range(n):
        if _anti(xs, zs, i, px, pz, W):
            _rowsum(xs, zs, r, s, i + n, W)
    det[0] = 1
    return r[s] ^ neg


def tab_measure(uint64_t[:, ::1] xs, uint64_t[:, ::1] zs, uint8_t[::1] r, Py_ssize_t n,
                uint64_t[::1] px, uint64_t[::1] pz, int neg, uint64_t state):
    cdef int det = 0
    cdef int out = _measure(xs, zs, r, n, &px[0], &pz[0], neg, &state, &det)
    return out, det, state


cdef inline void _pauli(uint64_t[:, ::1] xs, uint64_t[:, ::1] zs, uint8_t[::1] r,
                        int q, int pauli) noexcept nogil:
    cdef Py_ssize_t i
    cdef Py_ssize_t w = q >> 6
    cdef int sh = q & 63
    cdef uint64_t bits
    for i in range(r.shape[0]):
        bits = 0
        if pauli & 1:
            bits ^= zs[i, w] >> sh
        if pauli & 2:
            bits ^= xs[i, w] >> sh
        r[i] ^= <uint8_t>(bits & 1)


def tab_run(const int32_t[:, ::1] ops, uint64_t[:, ::1] xs, uint64_t[:, ::1] zs, uint8_t[::1] r,
            Py_ssize_t n, uint8_t[::1] out, uint8_t[::1] det, const int64_t[::1] ev_slot,
            const int32_t[::1] ev_q, const uint8_t[::1] ev_pauli, uint64_t state):
    cdef Py_ssize_t W = xs.shape[1]
    cdef Py_ssize_t rows = r.shape[0]
    cdef Py_ssize_t nops = ops.shape[0]
    cdef Py_ssize_t ne = ev_slot.shape[0]
    cdef Py_ssize_t k, i, e = 0, wa, wb
    cdef int code, a, b, sa, sb, outcome, d, m
    cdef uint64_t xa, za, xb, zb, t
    cdef uint64_t[::1] buf = np.zeros(4 * W, dtype=np.uint64)
    cdef uint64_t* accx = &buf[0]
    cdef uint64_t* accz = &buf[W]
    cdef uint64_t* px = &buf[2 * W]
    cdef uint64_t* pz = &buf[3 * W]
    with nogil:
        for k in range(nops):
            code = ops[k, 0]
            a = ops[k, 1]
            b = ops[k, 2]
            while e < ne and ev_slot[e] == 2 * k:
                _pauli(xs, zs, r, ev_q[e], ev_pauli[e])
                e += 1
            wa = a >> 6
            sa = a & 63
            if code == OP_H:
                for i in range(rows):
                    xa = (xs[i, wa] >> sa) & 1
                    za = (zs[i, wa] >> sa) & 1
                    r[i] ^= <uint8_t>(xa & za)
                    t = (xa ^ za) << sa
                    xs[i, wa] ^= t
                    zs[i, wa] ^= t
            elif code == OP_S:
                for i in range(rows):
                    xa = (xs[i, wa] >> sa) & 1
                    za = (zs[i, wa] >> sa) & 1
                    r[i] ^= <uint8_t>(xa & za)
                    zs[i, wa] ^= xa << sa
            elif code == OP_X:
                _pauli(xs, zs, r, a, 1)
            elif code == OP_Z:
                _pauli(xs, zs, r, a, 2)
            elif code == OP_Y:
                _pauli(xs, zs, r, a, 3)
            elif code == OP_CNOT or code == OP_CZ:
                wb = b >> 6
                sb = b & 63
                for i in range(rows):
                    xa = (xs[i, wa] >> sa) & 1
                    za = (zs[i, wa] >> sa) & 1
                    xb = (xs[i, wb] >> sb) & 1
                    zb = (zs[i, wb] >> sb) & 1
                    if code == OP_CNOT:
                        r[i] ^= <uint8_t>(xa & zb & (xb ^ za ^ 1))
                        xs[i, wb] ^= xa << sb
                        zs[i, wa] ^= zb << sa
                    else:
                        r[i] ^= <uint8_t>(xa & xb & (za ^ zb))
                        zs[i, wa] ^= xb << sa
                        zs[i, wb] ^= xa << sb
            elif code == OP_PREPZ or code == OP_PREPX or code == OP_MZ or code == OP_MX:
                for i in range(W):
                    px[i] = 0
                    pz[i] = 0
                if code == OP_PREPX or code == OP_MX:
                    px[wa] = (<uint64_t>1) << sa
                else:
                    pz[wa] = (<uint64_t>1) << sa
                if code == OP_MZ or code == OP_MX:
                    m = b & 0x3FFFFFFF
                    outcome = _measure(xs, zs, r, n, px, pz, (b >> 30) & 1, &state, &d)
                    out[m] = <uint8_t>outcome
                    det[m] = <uint8_t>d
                else:
                    outcome = _measure(xs, zs, r, n, px, pz, 0, &state, &d)
                    if outcome:
                        _pauli(xs, zs, r, a, 2 if code == OP_PREPX else 1)
            elif code == OP_MACC:
                if b & 1:
                    accx[wa] |= (<uint64_t>1) << sa
                if b & 2:
                    accz[wa] |= (<uint64_t>1) << sa
            elif code == OP_MFLUSH:
                outcome = _measure(xs, zs, r, n, accx, accz, b, &state, &d)
                out[a] = <uint8_t>outcome
                det[a] = <uint8_t>d
                for i in range(W):
                    accx[i] = 0
                    accz[i] = 0
            while e < ne and ev_slot[e] == 2 * k + 1:
                _pauli(xs, zs, r, ev_q[e], ev_pauli[e])
                e += 1
    return state


def adam_step(float[::1] p, const float[::1] g, float[::1] m, float[::1] v,
              float b1, float b2, float step, float eps):
    """One fused Adam update over flat float32 buffers."""
    cdef Py_ssize_t i, n = p.shape[0]
    cdef float gi
    with nogil:
        for i in range(n):
            gi = g[i]
            m[i] = b1 * m[i] + (1 - b1) * gi
            v[i] = b2 * v[i] + (1 - b2) * gi * gi
            p[i] -= step * m[i] / (sqrt(v[i]) + eps)
