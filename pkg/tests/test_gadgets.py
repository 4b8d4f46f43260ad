from __future__ import annotations

import numpy as np
import pytest

from pieceable.codes import prepare_logical, rm15, steane
from pieceable.faults import enumerate_faults, inject_all
from pieceable.gadgets import POOL_SIZE, BoundGadget, ECGadget, build_full_ec, run_gadget
from pieceable.machines import ForcedFaults, FrameMachine, TableauMachine
from pieceable.pauli import PauliOperator
from pieceable.pieceable import build_constant_ec

P = PauliOperator.parse


def bound_single(code, **kw):
    g = build_full_ec(code, **kw)
    return BoundGadget(g, code.n + POOL_SIZE, (0,), code.n, "ec")


def test_full_ec_cat_sizes():
    assert build_full_ec(steane()).cat_sizes == (4,) * 6
    assert build_full_ec(rm15()).cat_sizes == (8,) * 8 + (4,) * 6
    assert build_full_ec(steane()).correction_mode == "full_lookup"


def test_describe_and_location_count():
    g = build_full_ec(steane())
    assert g.location_count() == 6 * (4 * 4 + 3)
    assert "total locations per round: 114" in g.describe()
    bound = bound_single(steane())
    assert sum(len(s) for s in bound.segments()) == g.location_count()


def test_rejects_non_stabilizer():
    with pytest.raises(ValueError):
        ECGadget((steane(),), ((0, P("Z0 Z1", 7)),))


def test_constant_ec_of_circuit_a(circ_a):
    g = build_constant_ec(circ_a)
    assert g.correction_mode == "contagious_only"
    assert [(b, s.text(False)) for b, s in g.stabilizers_measured[:3]] == [
        (0, "Z0 Z2 Z4 Z6"), (0, "Z1 Z2 Z5 Z6"), (0, "Z3 Z4 Z5 Z6")]
    assert [s for b, s in g.stabilizers_measured if b == 1] == [rm15().generators[i] for i in range(4)]
    assert len(g.stabilizers_measured) == 7


def test_constant_ec_of_circuit_b(circ_b):
    g = build_constant_ec(circ_b)
    assert len(g.stabilizers_measured) == 7
    ctrl = [s for b, s in g.stabilizers_measured if b == 0]
    assert all(s.x == 0 and s.weight() == 8 for s in ctrl) and len(ctrl) == 4
    assert [s for b, s in g.stabilizers_measured if b == 1] == [steane().generators[i] for i in range(3)]


def _e1_run(circ, fault_block, letter, qubit):
    """Noiseless intermediate gadget on a frame holding one data error."""
    g = build_constant_ec(circ)
    nc, nt = circ.control_code.n, circ.target_code.n
    n = nc + nt + POOL_SIZE
    bound = BoundGadget(g, n, (0, nc), nc + nt, "e1")
    m = FrameMachine(n, 1)
    off = 0 if fault_block == 0 else nc
    size = nc if fault_block == 0 else nt
    xs = np.array([1 << qubit if letter in "XY" else 0])
    zs = np.array([1 << qubit if letter in "ZY" else 0])
    m.xor_block(off, size, xs, zs)
    out = run_gadget(m, bound)
    return out, m.block_masks(0, nc), m.block_masks(nc, nt)


def test_constant_ec_corrects_contagious_x_on_control(circ_a):
    out, (cx, cz), _ = _e1_run(circ_a, 0, "X", 0)
    assert out.bits[0].tolist() == [1, 0, 0, 0, 0, 0, 0]
    assert out.applied_correction(0, 0, 7) == P("X0", 7)
    assert cx[0] == 0 and cz[0] == 0


def test_constant_ec_corrects_contagious_z_on_target(circ_a):
    for q in range(15):
        out, _, (tx, tz) = _e1_run(circ_a, 1, "Z", q)
        assert out.bits[0, 3:].any()
        assert tx[0] == 0 and tz[0] == 0


def test_constant_ec_leaves_non_contagious_errors(circ_a):
    out, (cx, cz), _ = _e1_run(circ_a, 0, "Z", 2)
    assert not out.bits.any()
    assert cz[0] == 1 << 2
    out, _, (tx, tz) = _e1_run(circ_a, 1, "X", 5)
    assert not out.bits.any() and tx[0] == 1 << 5


@pytest.mark.parametrize("code_fn", [steane, rm15])
def test_noiseless_frame_gives_zero_syndrome(code_fn):
    bound = bound_single(code_fn())
    m = FrameMachine(bound.n_total, 64)
    out = run_gadget(m, bound)
    assert not out.bits.any() and not out.retries_used.any() and not out.rejected.any()
    assert not m.frames.fx.any() and not m.frames.fz.any()


def test_noiseless_tableau_on_codeword():
    code = steane()
    bound = bound_single(code)
    m = TableauMachine(bound.n_total, 3)
    for t in m.tabs:
        prepare_logical(t, code, 0, "+")
    before = [[t.peek(g.embed(bound.n_total, 0)) for g in code.generators] for t in m.tabs]
    out = run_gadget(m, bound)
    assert not out.bits.any()
    for t, b in zip(m.tabs, before):
        assert [t.peek(g.embed(bound.n_total, 0)) for g in code.generators] == b == [0] * 6
        assert t.peek(code.logical_x[0].embed(bound.n_total, 0)) == 0


def test_tableau_syndrome_of_single_error():
    code = steane()
    bound = bound_single(code)
    m = TableauMachine(bound.n_total, 1)
    prepare_logical(m.tabs[0], code, 0, "0")
    m.tabs[0].apply_pauli(P("Y3", bound.n_total))
    out = run_gadget(m, bound)
    assert code.syndrome_int(P("Y3", 7)) == sum(int(b) << i for i, b in enumerate(out.bits[0]))
    assert all(m.tabs[0].peek(g.embed(bound.n_total, 0)) == 0 for g in code.generators)


def _verification_fault(bound):
    prep = bound.prep[0]
    loc = len(prep) - 1            # the verification readout
    assert prep.locations[loc].kind == "measure"
    return {("ec", 0, 0, 0, "prep"): [(0, loc, 1)]}


def test_rejection_when_retries_exhausted():
    bound = bound_single(steane(), retry_policy=0)
    m = FrameMachine(bound.n_total, 2, ForcedFaults(_verification_fault(bound)))
    out = run_gadget(m, bound)
    assert out.rejected.tolist() == [True, False]


def test_retry_recovers():
    bound = bound_single(steane(), retry_policy=3)
    m = FrameMachine(bound.n_total, 1, ForcedFaults(_verification_fault(bound)))
    out = run_gadget(m, bound)
    assert not out.rejected[0] and out.retries_used[0] == 1 and not out.bits.any()


@pytest.mark.parametrize("code_fn", [steane, rm15])
def test_single_fault_leaves_at_most_weight_one(code_fn):
    """Every single fault in a gadget: the residual data error is a weight <= 1 error up to stabilizers."""
    code = code_fn()
    bound = bound_single(code)

    def run(m):
        run_gadget(m, bound)
        return m.block_masks(0, code.n)

    faults = enumerate_faults(run, bound.n_total)
    xs, zs = inject_all(run, bound.n_total, faults)
    lookup = code.lookup()
    for i, (x, z) in enumerate(zip(xs, zs)):
        e = PauliOperator(code.n, int(x), int(z))
        corr = lookup[code.syndrome_int(e)]
        assert corr.weight() <= 1 and code.in_stabilizer_group(corr * e), faults.describe(i)
