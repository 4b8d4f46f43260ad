from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from pieceable.circuit import CliffordCircuit
from pieceable.noise import (NoiseParams, Segment, annotate, one_qubit_distribution, sample_1q, sample_2q,
                             two_qubit_distribution)


def binomial_ok(count, n, p, k=4.0):
    return abs(count - n * p) <= k * np.sqrt(n * p * (1 - p))


def test_zero_noise_is_identity(rng):
    p = NoiseParams(0.0)
    assert all(sample_1q(p, rng).is_identity() for _ in range(200))
    assert all(sample_2q(p, rng).is_identity() for _ in range(200))


def test_distributions_sum_to_one_exactly():
    for e in (Fraction(0), Fraction(1, 1000), Fraction(1, 7), Fraction(1)):
        assert sum(one_qubit_distribution(e).values()) == 1
        assert sum(one_qubit_distribution(e, "total-eps").values()) == 1
        d2 = two_qubit_distribution(e)
        assert len(d2) == 16 and sum(d2.values()) == 1
    assert one_qubit_distribution(Fraction(1, 100))["X"] == Fraction(1, 400)


def test_marginal_probabilities():
    assert NoiseParams(0.01).p1 == pytest.approx(0.0075)
    assert NoiseParams(0.01, "total-eps").p1 == pytest.approx(0.01)
    assert NoiseParams(0.01).p2 == pytest.approx(0.009375)
    with pytest.raises(ValueError):
        NoiseParams(1.5)
    with pytest.raises(ValueError):
        NoiseParams(0.1, "other")


def _segment_counts(text, eps, shots, seed=0):
    seg = Segment("s", CliffordCircuit.from_text(text))
    ev = seg.sample(NoiseParams(eps), np.arange(shots), np.random.default_rng(seed))
    return seg, ev


def test_one_qubit_sampler_statistics():
    """Vectorised sampler at e=0.01 over 10^6 one-qubit locations."""
    shots = 1_000_000
    seg, ev = _segment_counts("H 0", 0.01, shots)
    _, _, _, _, pauli = ev
    counts = np.bincount(pauli, minlength=4)
    assert binomial_ok(counts[1:].sum(), shots, 0.0075)
    for c in counts[1:]:
        assert binomial_ok(c, shots, 0.0025)


def test_two_qubit_sampler_statistics():
    shots = 1_000_000
    seg, ev = _segment_counts("CNOT 0 1", 0.01, shots)
    slot, q, word, mask, pauli = ev
    shot = word.astype(np.int64) * 64 + np.log2(mask.astype(float)).astype(np.int64)
    code = np.zeros(shots, dtype=np.int64)
    np.add.at(code, shot, np.where(q == 0, pauli, pauli.astype(np.int64) << 2))
    hits = code[code > 0]
    assert binomial_ok(len(hits), shots, 0.009375)
    obs = np.bincount(hits, minlength=16)[1:]
    exp = len(hits) / 15
    chi2 = ((obs - exp) ** 2 / exp).sum()
    assert chi2 < 36.1  # 99.9% point, 14 degrees of freedom


def test_scalar_samplers_statistics():
    rng = np.random.default_rng(7)
    n = 200_000
    p = NoiseParams(0.02)
    hits1 = sum(not sample_1q(p, rng).is_identity() for _ in range(n))
    assert binomial_ok(hits1, n, 0.015)
    hits2 = sum(not sample_2q(p, rng).is_identity() for _ in range(n))
    assert binomial_ok(hits2, n, 0.01875)


def test_annotate_kinds():
    c = CliffordCircuit.from_text("PREPZ 0\nH 0\nCNOT 0 1\nMZ Z1\n")
    locs = annotate(c)
    assert [l.kind for l in locs] == ["prep0", "gate1", "gate2", "measure"]
    assert [l.location_id for l in locs] == [0, 1, 2, 3]


def test_annotate_data_pieces(circ_a):
    c = circ_a.circuit()
    locs = annotate(c)
    assert len(locs) == 105 and {l.kind for l in locs} == {"gate2"}


def test_idle_qubits_have_no_locations():
    c = CliffordCircuit.from_text("H 0", n=10)
    assert len(annotate(c)) == 1


def test_measurement_fault_flips_outcome_at_full_strength():
    """At e=1 a Z readout is flipped by X or Y: probability 2/4 under the one-qubit channel."""
    from pieceable.machines import Depolarizing, FrameMachine
    seg = Segment("m", CliffordCircuit.from_text("MZ 0"))
    shots = 200_000
    fm = FrameMachine(1, shots, Depolarizing(NoiseParams(1.0), np.random.default_rng(1)))
    flips = fm.run(seg, ("m",), np.ones(shots, bool))[0]
    assert binomial_ok(int(flips.sum()), shots, 0.5)
