from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from akns_ist import (BoundState, CertificateReport, DecayEnvelope, DispersionSpec,
                      SampledPotential, ScatteringData)
from akns_ist import certifier as ce
from akns_ist.evolution import evolve

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
positive = st.floats(1e-6, 1e6, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(cplx, cplx), min_size=2, max_size=30),
       st.floats(-50, 50), positive, st.floats(0, 10))
def test_csv_roundtrip(vals, x0, dx, t):
    q = [a for a, _ in vals]
    r = [b for _, b in vals]
    p = SampledPotential(x0, dx, q, r, t)
    back = SampledPotential.from_csv(p.to_csv())
    assert np.array_equal(back.q, p.q) and np.array_equal(back.r, p.r)
    assert back.t == p.t and np.allclose(back.x, p.x, rtol=1e-12, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(cplx, cplx), min_size=1, max_size=10),
       st.lists(st.tuples(finite, positive, cplx), max_size=3), st.floats(-5, 5))
def test_scattering_json_roundtrip(coef, states, t):
    n = len(coef)
    grid = np.arange(n, dtype=float) - n / 2
    a = np.array([c for c, _ in coef])
    b = np.array([c for _, c in coef])
    bs = tuple(BoundState.upper(complex(re, im), m) for re, im, m in states)
    sd = ScatteringData(grid, a, b, np.conj(a), np.conj(b), bs, t)
    assert ScatteringData.from_json(sd.to_json()) == sd


@settings(max_examples=60, deadline=None)
@given(st.fractions(Fraction(1, 1000), 100), st.fractions(Fraction(1, 1000), 100),
       st.integers(1, 6))
def test_window_monotone_and_threshold(d1, d2, degree):
    lo1, hi1 = ce.window_from(d1, degree)
    lo2, hi2 = ce.window_from(d2, degree)
    assert hi1 == hi2 == degree
    if d1 < d2:
        assert lo1 > lo2
    # nonempty exactly when δ > 1/(d - 1)
    expect = degree > 1 and d1 > Fraction(1, degree - 1)
    assert (lo1 < hi1) == expect


@settings(max_examples=40, deadline=None)
@given(positive, positive, st.floats(0.01, 10), st.sampled_from(["left", "right"]),
       st.floats(0, 1))
def test_envelope_roundtrip(amp, rate, delta, side, res):
    env = DecayEnvelope(amp, rate, delta, side, res)
    assert DecayEnvelope.from_dict(env.to_dict()) == env


@settings(max_examples=40, deadline=None)
@given(st.fractions(Fraction(1, 100), 100), st.integers(1, 5),
       st.lists(st.tuples(st.floats(0.01, 3.1), st.floats(-1e3, 1e3) | st.just(-np.inf)),
                max_size=5))
def test_report_roundtrip(delta, degree, samples):
    lo, hi = ce.window_from(delta, degree)
    rep = CertificateReport((lo, hi), lo < hi, samples)
    assert CertificateReport.from_json(rep.to_json()) == rep


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.sampled_from(["nls2", "kdv3"]))
def test_evolution_composes(t1, t2, preset):
    grid = np.linspace(-2, 2, 9)
    a = np.ones(9, dtype=complex)
    b = 0.1 * np.exp(1j * grid)
    sd = ScatteringData(grid, a, b, a, np.conj(b), (BoundState.upper(0.3j, 1.0),), 0.0,
                        DispersionSpec.preset(preset))
    one = evolve(evolve(sd, t1), t2)
    direct = evolve(sd, t2)
    assert np.allclose(one.b, direct.b, rtol=1e-12, atol=1e-14)
    assert abs(one.bound_states[0].norming - direct.bound_states[0].norming) \
        <= 1e-12 * abs(direct.bound_states[0].norming)
