import numpy as np
import pytest

import oracles
from akns_ist import BoundState, DispersionSpec
from akns_ist import solitons as so
from akns_ist.errors import EmptySpectrum

X = np.linspace(-10.0, 10.0, 801)


def test_sech_soliton_matches_closed_form():
    up, lo = so.sech_soliton(0.5)
    p = so.soliton_potential([up], [lo], x_grid=X)
    assert np.max(np.abs(p.q - oracles.nls_one_soliton(X, 0.0))) < 1e-13
    assert np.max(np.abs(p.r + np.conj(p.q))) < 1e-13


def test_shift_and_phase():
    up, lo = so.sech_soliton(0.8, x0=1.5, phase=0.3)
    p = so.soliton_potential([up], [lo], x_grid=X)
    ref = oracles.nls_one_soliton(X, 0.0, eta=0.8, x0=1.5) * np.exp(0.3j)
    assert np.max(np.abs(p.q - ref)) < 1e-12


def test_soliton_time_evolution():
    up, lo = so.sech_soliton(0.5)
    p = so.soliton_potential([up], [lo], x_grid=X, t=0.7)
    assert np.max(np.abs(p.q - oracles.nls_one_soliton(X, 0.7))) < 1e-12


def test_two_soliton_matches_direct_bound_state_solve():
    from akns_ist import zs_scattering as zs
    from akns_ist import SampledPotential
    # 2 sech x is the reflectionless pair at i/2, 3i/2
    x = np.linspace(-15, 15, 3001)
    st = zs.find_bound_states(SampledPotential.focusing(x, 2 / np.cosh(x)),
                              ((-1, 1), (0.1, 2.0)))
    up = [s for s in st if s.half_plane.value == "upper"]
    lo = [s for s in st if s.half_plane.value == "lower"]
    p = so.soliton_potential(up, lo, x_grid=X)
    assert np.max(np.abs(p.q - 2 / np.cosh(X))) < 1e-6


def test_determinants_tend_to_one_on_the_right():
    up, lo = so.sech_soliton(0.5)
    dp, dq = so.determinants([up], [lo], X)
    assert abs(dp[-1] - 1) < 1e-8 and abs(dq[-1] - 1) < 1e-8
    assert np.all(np.abs(dp) > 0)


def test_empty_spectrum():
    p = so.soliton_potential([], [], x_grid=X)
    assert not np.any(p.q)
    with pytest.raises(EmptySpectrum):
        so.asymptotic_envelope([], [])


def test_asymptotic_envelope_is_slowest_rate():
    a = so.sech_soliton(0.5)
    b = so.sech_soliton(1.2, x0=2.0)
    assert so.asymptotic_envelope([a[0], b[0]], [a[1], b[1]]) == 1.0
    p = so.soliton_potential([a[0]], [a[1]], x_grid=X)
    tail = X > 5
    rate = -np.polyfit(X[tail], np.log(np.abs(p.q[tail])), 1)[0]
    assert abs(rate - 1.0) < 1e-3


def test_kdv_reflectionless_one_and_two_states():
    x = np.linspace(-8, 8, 161)
    q1 = so.kdv_reflectionless([BoundState.upper(1j, 2.0)], x)
    assert np.max(np.abs(q1.q.real - oracles.kdv_one_soliton(x, 0.0))) < 1e-9
    states = [BoundState.upper(1j, 6.0), BoundState.upper(2j, 12.0)]
    q2 = so.kdv_reflectionless(states, x)
    ref = oracles.kdv_n_soliton(x, [1, 2], [6, 12])
    assert np.max(np.abs(q2.q.real - ref)) < 1e-8
    # 6 sech² x
    assert np.max(np.abs(ref - 6 / np.cosh(x) ** 2)) < 1e-12


def test_kdv_closed_form_matches_oracle_in_time():
    x = np.linspace(-8, 8, 161)
    states = [(1.0, 2.0), (1.5, 1.0)]
    got = so.kdv_closed_form(states, x, t=0.2)
    assert np.max(np.abs(got - oracles.kdv_n_soliton(x, [1.0, 1.5], [2.0, 1.0], t=0.2))) < 1e-12


def test_custom_dispersion_changes_flow():
    up, lo = so.sech_soliton(0.5)
    p = so.soliton_potential([up], [lo], DispersionSpec.preset("transport1"), X, t=1.0)
    # A0 = -iλ moves the norming constant by e^{-2 A0 t} at λ = i/2, a shift only
    assert abs(np.max(np.abs(p.q)) - 1.0) < 1e-10
