from __future__ import annotations

import numpy as np
import pytest

from pieceable.codes import logical_measure, prepare_logical, rm15, steane
from pieceable.decoders import (LABELS, LookupDecoder, RecoveryOperator, TableDecoder, assemble_recovery, build_table,
                                extended_lookup_table, make_decoder, mwd_decode, pack_rows)
from pieceable.pauli import PauliOperator
from pieceable.tableau import CliffordTableau
from pieceable.verify import verify_fault_tolerance

P = PauliOperator.parse


def test_mwd_decode_examples():
    assert mwd_decode(steane(), (0,) * 6).is_identity()
    assert mwd_decode(steane(), (0, 0, 0, 1, 0, 0)) == P("X0", 7)
    r = rm15()
    assert mwd_decode(r, r.syndrome(P("Z7", 15))) == P("Z7", 15)
    with pytest.raises(ValueError):
        mwd_decode(steane(), (0, 1))


def test_assemble_recovery_examples():
    s = steane()
    assert assemble_recovery(s, (0,) * 6, 0, 0).is_identity()
    assert assemble_recovery(s, (0,) * 6, 1, 0) == PauliOperator.on(7, "X", range(7))
    rec = assemble_recovery(s, (0, 0, 0, 1, 0, 0), 0, 1)
    assert rec.equal_up_to_phase(P("X0", 7) * PauliOperator.on(7, "Z", range(7)))
    with pytest.raises(ValueError):
        assemble_recovery(s, (0,) * 6, 2, 0)


@pytest.mark.parametrize("code_fn", [steane, rm15])
def test_recovery_fixes_weight_one_errors(code_fn):
    code = code_fn()
    for q in range(code.n):
        for letter in "XYZ":
            e = PauliOperator.on(code.n, letter, [q])
            rec = assemble_recovery(code, code.syndrome(e), 0, 0)
            assert code.in_stabilizer_group(rec * e)


def test_labels_are_a_bijection():
    assert sorted(LABELS.values()) == ["I", "X", "Y", "Z"]
    code = steane()
    for (gx, gz), lab in LABELS.items():
        op = RecoveryOperator(PauliOperator.identity(7), gx, gz)
        assert op.label == lab
        assert code.logical_class(op.operator(code)) == (gx, gz)


def test_stabilizer_factor_is_unobservable():
    code = steane()
    rng = np.random.default_rng(3)
    for which in "0+":
        basis = "Z" if which == "0" else "X"
        for _ in range(5):
            t = CliffordTableau(7, seed=1)
            prepare_logical(t, code, 0, which)
            e = PauliOperator.on(7, "XYZ"[rng.integers(3)], [int(rng.integers(7))])
            t.apply_pauli(e)
            u = t.copy()
            rec = assemble_recovery(code, code.syndrome(e), 0, 0)
            g = code.generators[int(rng.integers(6))]
            t.apply_pauli(rec)
            u.apply_pauli(rec * g)
            assert logical_measure(t, code, 0, basis) == logical_measure(u, code, 0, basis)


def test_pack_rows():
    bits = np.array([[1, 0, 1], [0, 0, 0], [0, 1, 1]])
    assert pack_rows(bits).tolist() == [5, 0, 6]


def test_build_table_counts_conflicts():
    f = np.zeros((4, 47), np.uint8)
    f[0, 0] = f[1, 0] = 1          # same full key, different errors
    f[2, 30] = 1
    f[3, 1] = f[3, 30] = 1         # differs from row 2 only in s_lec
    raw = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 0, 1, 0]], np.uint8)
    dec, conf = build_table(f, raw)
    assert conf.full == 1 and conf.short == 2
    out = dec.decode(f[:, :20], f[:, 20:27], f[:, 27:])
    assert out[0].tolist() == [1, 0, 0, 0] and out[2].tolist() == [1, 0, 0, 0]


def test_table_fallback_uses_short_key():
    dec = TableDecoder(np.array([1], np.int64), np.array([[1, 0, 0, 0]], np.uint8),
                       np.array([1 << 7], np.int64), np.array([[0, 0, 0, 1]], np.uint8))
    s_lec = np.zeros((2, 20), np.uint8)
    s1 = np.zeros((2, 7), np.uint8)
    s2 = np.zeros((2, 20), np.uint8)
    s_lec[0, 0] = 1
    s_lec[1, 5] = 1
    s2[1, 0] = 1
    assert dec.decode(s_lec, s1, s2).tolist() == [[1, 0, 0, 0], [0, 0, 0, 1]]


@pytest.mark.parametrize("name,size", [("A", 398), ("B", 485)])
def test_extended_table_is_conflict_free(name, size, circ_a, circ_b):
    c = circ_a if name == "A" else circ_b
    dec, conf = extended_lookup_table(c)
    assert conf.full == 0
    assert len(dec) == size
    assert make_decoder("mwd", c) is dec


def test_lookup_decoder_is_not_enough(circ_a):
    assert not LookupDecoder().decode(None, None, np.zeros((3, 20))).any()
    rep = verify_fault_tolerance(circ_a, "lookup")
    assert not rep.ok
    with pytest.raises(ValueError):
        make_decoder("other", circ_a)
