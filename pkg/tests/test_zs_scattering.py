import numpy as np
import pytest

import oracles
from akns_ist import SampledPotential
from akns_ist import zs_scattering as zs
from akns_ist.errors import EnvelopeInsufficient, ValidationError

X20 = np.linspace(-20.0, 20.0, 4001)


def _sech(A, x=X20):
    return SampledPotential.focusing(x, A / np.cosh(x))


@pytest.mark.parametrize("A", [0.7, 1.3])
def test_coefficients_match_shooting(A):
    lams = np.array([-1.1, -0.2, 0.37, 2.0])
    sd = zs.scattering_coefficients(_sech(A), lams)
    for j, lam in enumerate(lams):
        a, b = oracles.zs_shoot(lambda s: A / np.cosh(s), lambda s: -A / np.cosh(s), lam, L=20.0)
        assert abs(sd.a[j] - a) < 1e-8
        assert abs(sd.b[j] - b) < 1e-8


def test_a_matches_closed_form_off_axis():
    lams = np.array([0.3 + 0.2j, -1.0 + 0.6j, 0.5j])
    got = zs.a_of(_sech(1.3), lams)
    assert np.max(np.abs(got - oracles.sech_a(1.3, lams))) < 1e-7


def test_abs_b_matches_closed_form():
    lams = np.linspace(-2, 2, 9)
    sd = zs.scattering_coefficients(_sech(0.7), lams)
    assert np.max(np.abs(np.abs(sd.b) - oracles.sech_abs_b(0.7, lams))) < 1e-7


def test_unitarity_and_unit_determinant():
    p = SampledPotential.focusing(X20, 0.8 * np.exp(-X20 ** 2) * np.exp(0.5j * X20))
    lams = np.linspace(-4, 4, 64)
    sd = zs.scattering_coefficients(p, lams)
    assert np.max(np.abs(sd.unitarity_defect())) < 1e-9
    U = zs.transfer_matrix(p, lams)
    det = U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]
    assert np.max(np.abs(det - 1)) < 1e-9


def test_zero_potential_is_trivial():
    p = SampledPotential.focusing(X20, np.zeros_like(X20))
    sd = zs.forward(p, [-1.0, 0.5, 2.0])
    assert np.allclose(sd.a, 1) and np.allclose(sd.b, 0)
    assert sd.bound_states == ()
    assert zs.extend_b(p, 3j) == 0


def test_bound_states_of_two_sech_match_shooting():
    states = zs.find_bound_states(_sech(2.0), ((-1.0, 1.0), (0.1, 2.0)))
    up = sorted(s.lam.imag for s in states if s.half_plane.value == "upper")
    lo = sorted(-s.lam.imag for s in states if s.half_plane.value == "lower")
    ref = oracles.zs_bound_states_imag(lambda s: 2 / np.cosh(s), lambda s: -2 / np.cosh(s),
                                       2.0, n_scan=40, L=20.0)
    assert np.allclose(up, ref, atol=1e-8)
    assert np.allclose(lo, ref, atol=1e-8)
    for s in states:
        assert abs(s.lam.real) < 1e-9


def test_single_soliton_norming_constant():
    # 2η sech(2η x) with η = 1/2 has m = -i and m̄ = i
    states = zs.find_bound_states(_sech(1.0), ((-1.0, 1.0), (0.1, 1.5)))
    by_half = {s.half_plane.value: s for s in states}
    assert abs(by_half["upper"].norming - (-1j)) < 1e-7
    assert abs(by_half["lower"].norming - 1j) < 1e-7


def test_extend_b_agrees_with_real_axis_b():
    p = _sech(0.7)
    lam = 0.4
    b = zs.scattering_coefficients(p, [lam]).b[0]
    assert abs(zs.extend_b(p, lam, tol=1e-8) - b) < 1e-8


def test_extend_b_refuses_when_tail_has_not_decayed():
    with pytest.raises(EnvelopeInsufficient):
        zs.extend_b(_sech(0.7), 5j)
    with pytest.raises(ValidationError):
        zs.extend_b(_sech(0.7), -1j)


def test_winding_number_counts_zeros():
    f = lambda z: (z - 0.3j) * (z - (0.5 + 1j))
    assert zs.winding_number(f, ((-1, 1), (0.1, 2))) == 2
    assert zs.winding_number(f, ((-1, 1), (1.5, 2))) == 0


def test_rejects_kdv_potential(kdv_sech2):
    with pytest.raises(ValidationError):
        zs.scattering_coefficients(kdv_sech2, [0.5])
