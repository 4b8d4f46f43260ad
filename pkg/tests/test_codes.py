from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pieceable.codes import (build_lookup, ideal_project, logical_measure, prepare_logical, pure_error, rm15,
                             steane, syndrome)
from pieceable.pauli import PauliOperator
from pieceable.tableau import CliffordTableau

P = PauliOperator.parse
CODES = {"steane": steane, "rm15": rm15}


def check_matrix_syndrome(code, e: PauliOperator) -> tuple[int, ...]:
    """Symplectic product against the dense check matrix (independent of PauliOperator.commutes)."""
    n = code.n
    ex = np.array([(e.x >> q) & 1 for q in range(n)])
    ez = np.array([(e.z >> q) & 1 for q in range(n)])
    h = code.stabilizer_matrix.astype(int)
    return tuple(int(v) for v in (h[:, :n] @ ez + h[:, n:] @ ex) % 2)


def single_errors(n):
    for q in range(n):
        for letter in "XYZ":
            yield PauliOperator.on(n, letter, [q])


def test_steane_generators_in_table_order():
    c = steane()
    assert (c.n, c.k, c.d, c.r) == (7, 1, 3, 6)
    assert c.generators[0] == P("X0 X2 X4 X6", 7)
    assert [g.text(False) for g in c.generators[3:]] == ["Z0 Z2 Z4 Z6", "Z1 Z2 Z5 Z6", "Z3 Z4 Z5 Z6"]
    assert c.logical_x[0] == PauliOperator.on(7, "X", range(7))
    assert c.logical_z[0] == PauliOperator.on(7, "Z", range(7))
    c.validate()


def test_rm15_generators_in_table_order():
    c = rm15()
    assert (c.n, c.k, c.d, c.r) == (15, 1, 3, 14)
    assert c.generators[0] == P("X7 X8 X9 X10 X11 X12 X13 X14", 15)
    assert len(c.x_type_rows()) == 4 and len(c.z_type_rows()) == 10
    assert c.logical_z[0] == PauliOperator.on(15, "Z", range(15))
    c.validate()


def test_syndrome_examples():
    assert syndrome(steane(), PauliOperator.identity(7)) == (0,) * 6
    assert syndrome(steane(), P("Z0", 7)) == (1, 0, 0, 0, 0, 0)
    s = syndrome(rm15(), P("X0", 15))
    assert s == tuple(int(i == 7) for i in range(14))


@pytest.mark.parametrize("name", CODES)
def test_syndrome_matches_check_matrix(name):
    code = CODES[name]()
    rng = np.random.default_rng(1)
    for _ in range(300):
        e = PauliOperator(code.n, int(rng.integers(1 << code.n)), int(rng.integers(1 << code.n)))
        assert syndrome(code, e) == check_matrix_syndrome(code, e)
        assert code.syndrome_of_masks(e.x, e.z) == code.syndrome_int(e)


def test_lookup_examples():
    table = build_lookup(steane())
    assert table[0] == PauliOperator.identity(7)
    assert table[1] == P("Z0", 7)          # syndrome 100000
    assert table[1 << 3] == P("X0", 7)     # syndrome 000100


@pytest.mark.parametrize("name", CODES)
def test_single_errors_have_unique_syndromes_and_are_corrected(name):
    code = CODES[name]()
    seen = {}
    for e in single_errors(code.n):
        s = code.syndrome_int(e)
        assert s != 0 and s not in seen
        seen[s] = e
        assert code.in_stabilizer_group(code.lookup()[s] * e)
    assert len(seen) == 3 * code.n


@pytest.mark.parametrize("name", CODES)
def test_lookup_is_minimal_weight(name):
    """Every table entry has the weight of the lightest error with that syndrome (brute force to weight 3)."""
    code = CODES[name]()
    table = build_lookup(code)
    best = {0: 0}
    for w in range(1, 4):
        for sup in itertools.combinations(range(code.n), w):
            for letters in itertools.product("XYZ", repeat=w):
                s = code.syndrome_int(PauliOperator.from_sites(code.n, zip(sup, letters)))
                best.setdefault(s, w)
        if len(best) == 1 << code.r:
            break
    for s, w in best.items():
        assert table[s].weight() == w
        assert code.syndrome_int(table[s]) == s
    assert len(table) == 1 << code.r


def test_pure_error_examples():
    c = steane()
    assert pure_error(c, (0,) * 6) == PauliOperator.identity(7)
    t = pure_error(c, (1, 0, 0, 0, 0, 0))
    assert [g.commutes(t) for g in c.generators] == [False] + [True] * 5


@pytest.mark.parametrize("name", CODES)
def test_pure_error_syndromes(name):
    code = CODES[name]()
    limit = 1 << code.r
    values = range(limit) if code.r <= 6 else np.random.default_rng(2).integers(0, limit, 500)
    for s in values:
        assert code.syndrome_int(pure_error(code, int(s))) == int(s)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, (1 << 14) - 1), st.integers(0, (1 << 14) - 1))
def test_pure_error_composes(a, b):
    code = rm15()
    assert pure_error(code, a ^ b).equal_up_to_phase(pure_error(code, a) * pure_error(code, b))


def _encoded(code, which="0"):
    t = CliffordTableau(code.n, seed=3)
    prepare_logical(t, code, 0, which)
    return t


@pytest.mark.parametrize("name", CODES)
def test_logical_measure(name):
    code = CODES[name]()
    t = _encoded(code, "0")
    assert logical_measure(t, code, 0, "Z") == 0
    t.apply_pauli(code.logical_x[0])
    assert logical_measure(t, code, 0, "Z") == 1
    assert logical_measure(_encoded(code, "+"), code, 0, "X") == 0
    assert logical_measure(_encoded(code, "-"), code, 0, "X") == 1
    with pytest.raises(ValueError):
        logical_measure(_encoded(code, "0"), code, 0, "X")


def test_ideal_project_on_codeword_is_trivial():
    code = steane()
    t = _encoded(code)
    before = t.copy()
    [(s, corr)] = ideal_project(t, [(code, 0)])
    assert s == 0 and corr.is_identity()
    assert np.array_equal(t.r, before.r) and np.array_equal(t.xs, before.xs)


def test_ideal_project_corrects_single_error():
    code = steane()
    t = _encoded(code)
    t.apply_pauli(P("X0", 7))
    [(s, corr)] = ideal_project(t, [(code, 0)])
    assert corr == P("X0", 7)
    assert all(t.peek(g) == 0 for g in code.generators)
    assert logical_measure(t, code, 0, "Z") == 0


def test_ideal_project_weight_two_lands_in_code_space():
    code = steane()
    t = _encoded(code)
    t.apply_pauli(P("X0 X1", 7))
    ideal_project(t, [(code, 0)])
    assert all(t.peek(g) == 0 for g in code.generators)
    # distance 3: the weight-2 error plus its correction is a logical X
    assert logical_measure(t, code, 0, "Z") == 1


def test_check_matrix_export():
    text = steane().check_matrix_text()
    rows = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert len(rows) == 6 + 2
    assert rows[0].replace(" ", "")[:7] == "1010101"
