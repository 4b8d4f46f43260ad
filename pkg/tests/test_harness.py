from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pieceable.decoders import extended_lookup_decoder
from pieceable.harness import (ERROR_NAMES, ExRecSpec, NoThreshold, QuadraticFit, RateEstimate, error_index, estimate,
                               fit_pure_quadratic, fit_quadratic, log_slope, pseudo_threshold, rate_from_errors,
                               read_results, run_trial, simulate_records, swap_physical, swap_pseudo_threshold,
                               swap_rate, threshold_from_points, write_results)
from pieceable.noise import NoiseParams


def test_error_names():
    assert ERROR_NAMES[0] == "II" and len(set(ERROR_NAMES)) == 16
    bits = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [1, 1, 1, 1]], np.uint8)
    assert [ERROR_NAMES[i] for i in error_index(bits)] == ["XI", "IZ", "YY"]


def test_zero_noise_gives_zero_counts(circ_a):
    spec = ExRecSpec(circ_a, extended_lookup_decoder(circ_a), NoiseParams(0.0))
    est = estimate(spec, 100)
    assert est.shots == 100 and est.failures == 0 and est.rate == 0.0
    out = run_trial(spec, np.random.default_rng(0))
    assert out.accepted and out.logical_error == "II"


def test_records_deterministic_and_worker_independent(circ_a):
    a = simulate_records(circ_a, NoiseParams(2e-3), 300, seed=4, batch=128)
    b = simulate_records(circ_a, NoiseParams(2e-3), 300, seed=4, batch=128, workers=2)
    c = simulate_records(circ_a, NoiseParams(2e-3), 300, seed=5, batch=128)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.raw, b.raw)
    assert len(a) == 300 and not np.array_equal(a.features, c.features)


def test_wilson_interval_shrinks_with_shots():
    r1 = RateEstimate(1e-3, 10_000, {"XI": 100})
    r4 = RateEstimate(1e-3, 40_000, {"XI": 400})
    w1 = r1.ci()[1] - r1.ci()[0]
    w4 = r4.ci()[1] - r4.ci()[0]
    assert w4 / w1 == pytest.approx(0.5, rel=0.02)
    assert r1.ci()[0] < r1.rate < r1.ci()[1]
    assert RateEstimate(0.0, 100).ci()[0] == 0.0


def test_rate_from_errors():
    errs = np.zeros((10, 4), np.uint8)
    errs[0, 0] = 1
    errs[1, 3] = errs[1, 0] = 1
    r = rate_from_errors(1e-3, errs)
    assert r.counts["XI"] == 1 and r.counts["XZ"] == 1 and r.failures == 2 and r.rate == 0.2


def _pts(eps, p, shots=10**6):
    return [RateEstimate(e, shots, {"XI": int(round(v * shots))}) for e, v in zip(eps, p)]


def test_fit_quadratic_exact():
    eps = np.array([1e-4, 2e-4, 5e-4, 1e-3, 2e-3])
    a, b, c = 3.2e4, 0.7, 1e-6
    pts = [(e, a * e * e + b * e + c, 1e-6) for e in eps]
    fit = fit_quadratic(pts)
    assert fit.a == pytest.approx(a, rel=1e-10)
    assert fit.b == pytest.approx(b, rel=1e-10)
    assert fit.c == pytest.approx(c, rel=1e-8)


def test_fit_quadratic_synthetic_binomial():
    rng = np.random.default_rng(0)
    eps = np.array([3e-4, 5e-4, 1e-3, 2e-3, 3e-3])
    n = 10**5
    pts = [RateEstimate(e, n, {"XI": int(rng.binomial(n, 1e5 * e * e))}) for e in eps]
    assert fit_quadratic(pts).a == pytest.approx(1e5, rel=0.1)
    assert fit_pure_quadratic(pts).a == pytest.approx(1e5, rel=0.1)


def test_fit_quadratic_errors():
    with pytest.raises(ValueError):
        fit_quadratic([(1e-3, 1e-3, 1e-4), (2e-3, 2e-3, 1e-4)])
    with pytest.raises(ValueError):
        fit_quadratic([(1e-3, 1e-3, 1e-4)] * 3)


def test_pseudo_threshold_examples():
    assert pseudo_threshold(QuadraticFit(1e6, 0, 0)) == pytest.approx(1e-6, rel=1e-9)
    with pytest.raises(NoThreshold):
        pseudo_threshold(QuadraticFit(0, 0.5, 0))
    assert pseudo_threshold(QuadraticFit(1e6, 0, 0), "15/16") == pytest.approx(15 / 16 * 1e-6)


def test_log_slope():
    eps = np.geomspace(3e-4, 3e-3, 5)
    assert log_slope([(e, 7 * e ** 2, 1) for e in eps]) == pytest.approx(2.0)


def test_swap_rate_boundaries():
    assert swap_rate(0, 0) == 0
    assert swap_rate(1, 0) == 1
    assert swap_rate(0, 1) == 0
    for p in (1e-3, 0.1, 0.5):
        assert swap_rate(p, p) == pytest.approx(3 * p * (1 - p) ** 2)
        assert swap_rate(p, p, symmetric=True) == pytest.approx(3 * p * (1 - p) ** 2)
    assert swap_rate(0, 1, symmetric=True) == 1
    with pytest.raises(ValueError):
        swap_rate(1.5, 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_swap_rate_properties(pa, pb):
    sym = swap_rate(pa, pb, symmetric=True)
    assert -1e-12 <= sym <= 1 + 1e-12
    assert swap_rate(pa, pb) == pytest.approx(2 * pa * (1 - pb) * (1 - pa) + pa * (1 - pb) ** 2)
    assert swap_rate(pa, pb) >= 0
    assert swap_physical(pa) == pytest.approx(swap_rate(pa, pa))
    assert swap_physical(pa) == pytest.approx(swap_rate(pa, pa, symmetric=True))


def test_printed_swap_form_can_exceed_one():
    assert swap_rate(0.6, 0.0) == pytest.approx(1.08)


def test_swap_pseudo_threshold_zero_rates():
    zero = QuadraticFit(0, 0, 0)
    with pytest.raises(NoThreshold):
        swap_pseudo_threshold(zero, zero)


def test_swap_pseudo_threshold_matches_polynomial_root():
    a = 1e6
    fit = QuadraticFit(a, 0, 0)
    got = swap_pseudo_threshold(fit, fit)
    # 3e(1-e)^2 = 3 a e^2 (1 - a e^2)^2, divided by 3e, as a polynomial in e
    poly = np.polynomial.Polynomial([1, -2, 1]) - np.polynomial.Polynomial([0, a]) * \
        np.polynomial.Polynomial([1, 0, -a]) ** 2
    roots = sorted(r.real for r in poly.roots() if abs(r.imag) < 1e-12 and 1e-8 < r.real < 0.1)
    assert got == pytest.approx(roots[0], rel=2e-3)
    assert got == pytest.approx(1e-6, rel=1e-2)


def test_results_round_trip(tmp_path):
    rows = [("A", "mwd", RateEstimate(1e-3, 1000, {"XI": 3, "IZ": 1})),
            ("B", "nn", RateEstimate(2e-4, 500, {}))]
    path = tmp_path / "r.csv"
    write_results(path, rows, {"seed": 3})
    back, cfg = read_results(path)
    assert cfg == {"seed": "3"}
    assert [(c, d, r.epsilon, r.shots, r.failures) for c, d, r in back] == \
        [("A", "mwd", 1e-3, 1000, 4), ("B", "nn", 2e-4, 500, 0)]
    assert back[0][2].counts["XI"] == 3


def test_threshold_from_synthetic_points():
    eps = [1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 3e-3]
    res = threshold_from_points(_pts(eps, [2e4 * e * e for e in eps]), "A", "mwd")
    assert res.eps_star == pytest.approx(5e-5, rel=0.01)
    assert res.slope == pytest.approx(2.0, abs=0.01)
    text = "\n".join(res.lines())
    assert "reference=9.36e-07" in text and "eps_star=" in text


def test_swap_rate_exact_with_fractions():
    from fractions import Fraction
    p, q = Fraction(1, 3), Fraction(1, 7)
    assert swap_rate(p, p) == 3 * p * (1 - p) ** 2 == Fraction(4, 9)
    assert swap_rate(p, q) == 2 * p * (1 - q) * (1 - p) + p * (1 - q) ** 2
    assert isinstance(swap_rate(p, q, symmetric=True), Fraction)
    v = np.array([0.1, 0.2])
    assert np.allclose(swap_rate(v, v), 3 * v * (1 - v) ** 2)
