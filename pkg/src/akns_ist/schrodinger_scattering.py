"""Forward scattering for the Schrödinger reduction (r = -1).

The equation is v'' + (λ² + q) v = 0.  We use the Jost functions f1 ~ e^{iλx}
at +∞ and f2 ~ e^{-iλx} at -∞ and the Faddeev functions
m1 = e^{-iλx} f1, m2 = e^{iλx} f2.  Both are marched in the
variation-of-parameters variables (A, B) of
:func:`akns_ist._numerics.rk4_schrodinger`, whose edge values are exactly
the integral formulas

    1/T  = 1 + (1/2iλ) ∫ q m1 = 1 + (1/2iλ) ∫ q m2
    R1/T = -(1/2iλ) ∫ e^{-2iλt} q m2
    R2/T = -(1/2iλ) ∫ e^{+2iλt} q m1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _numerics as nm
from .errors import (BracketFailure, DivergedIntegration, NoConvergence,
                     SingularLambda, ValidationError)
from .model import (BoundState, CaseTag, DispersionSpec, SampledPotential,
                    ScatteringData, require_valid)
from .zs_scattering import winding_number

MIN_LAMBDA = 1e-8
CROSS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FaddeevPair:
    lam: complex
    m1: np.ndarray
    m2: np.ndarray


def _check(p):
    require_valid(p, CaseTag.KDV)


def _check_lambda(lam):
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if np.any(np.abs(lam) < MIN_LAMBDA):
        raise SingularLambda("lambda = 0 is excluded (1/(2i lambda) kernel)")
    if np.any(lam.imag < 0):
        raise ValidationError("Faddeev functions need Im(lambda) >= 0")
    return lam


def _small_cutoff(p) -> float:
    # below this |λ| the coefficient q/(2iλ) of the (A, B) form makes RK4
    # steps too coarse; the (m, m') form is used instead
    return max(0.5, 10.0 * float(np.max(np.abs(p.q))) * p.dx)


def _march(p, lam, from_right, store=False):
    """(A, B) with f = A e^{iλx} + B e^{-iλx}; m1 from the right or m2 from the left."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    small = np.abs(lam) < _small_cutoff(p)
    n = len(p.x)
    shape = (n, 2, len(lam)) if store else (2, len(lam))
    out = np.empty(shape, dtype=complex)
    if np.any(~small):
        u0 = (1, 0) if from_right else (0, 1)
        res = nm.rk4_schrodinger(p.x, p.q, lam[~small], u0, forward=not from_right,
                                 store=store)
        if res is None:
            raise DivergedIntegration("Schrödinger march overflowed")
        out[..., ~small] = res
    if np.any(small):
        ls = lam[small]
        res = nm.rk4_faddeev(p.x, p.q, ls, (1, 0), -1 if from_right else 1,
                             forward=not from_right, store=store)
        if res is None:
            raise DivergedIntegration("Faddeev march overflowed")
        m, mp = res[..., 0, :], res[..., 1, :]
        if store:
            e = np.exp(2j * np.outer(p.x, ls))
        else:
            e = np.exp(2j * (p.x[0] if from_right else p.x[-1]) * ls)
        if from_right:
            A = m + mp / (2j * ls)
            B = -mp * e / (2j * ls)
        else:
            A = mp / (2j * ls) / e
            B = m - mp / (2j * ls)
        out[..., 0, small] = A
        out[..., 1, small] = B
    return out


def faddeev_solve(p: SampledPotential, lam: complex) -> FaddeevPair:
    """m1 and m2 on the grid at one λ with Im λ >= 0."""
    _check(p)
    lam = complex(_check_lambda(lam)[0])
    x = p.x
    t1 = _march(p, [lam], True, store=True)[:, :, 0]
    t2 = _march(p, [lam], False, store=True)[:, :, 0]
    e = np.exp(2j * lam * x)
    m1 = t1[:, 0] + t1[:, 1] / e
    m2 = t2[:, 0] * e + t2[:, 1]
    if not (np.all(np.isfinite(m1)) and np.all(np.isfinite(m2))):
        raise NoConvergence(f"Faddeev functions not finite at lambda={lam}")
    return FaddeevPair(lam, m1, m2)


def jost_f1(p: SampledPotential, lam: complex) -> np.ndarray:
    """f1(x, λ) on the grid (decays at +∞ when Im λ > 0)."""
    _check(p)
    lam = complex(np.atleast_1d(lam)[0])
    if abs(lam) < MIN_LAMBDA:
        raise SingularLambda("lambda = 0 is excluded")
    t = _march(p, [lam], True, store=True)[:, :, 0]
    x = p.x
    return t[:, 0] * np.exp(1j * lam * x) + t[:, 1] * np.exp(-1j * lam * x)


def jost_f1_derivative(p: SampledPotential, lam: complex) -> np.ndarray:
    lam = complex(lam)
    t = _march(p, [lam], True, store=True)[:, :, 0]
    x = p.x
    return 1j * lam * (t[:, 0] * np.exp(1j * lam * x) - t[:, 1] * np.exp(-1j * lam * x))


def wronskian_f1(p: SampledPotential, lam: float) -> np.ndarray:
    """[f1(·,λ), f1(·,-λ)] = f' g - f g' on the grid; equals 2iλ exactly."""
    f, fp = jost_f1(p, lam), jost_f1_derivative(p, lam)
    g, gp = jost_f1(p, -lam), jost_f1_derivative(p, -lam)
    return fp * g - f * gp


def inverse_transmission(p: SampledPotential, lams) -> np.ndarray:
    """1/T(λ) via the m1 march, vectorized over λ in the closed upper half plane."""
    lams = _check_lambda(lams)
    return _march(p, lams, True)[0]


def kdv_coefficients(p: SampledPotential, lambda_grid,
                     dispersion: DispersionSpec | None = None,
                     cross_tol: float | None = CROSS_TOL) -> ScatteringData:
    """1/T and R1/T on a real grid, stored in the a and b slots.

    The m1 and m2 routes to 1/T are compared; a gap above ``cross_tol``
    raises NoConvergence (pass None to skip the check).
    """
    _check(p)
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValidationError("lambda_grid must be strictly increasing")
    lam = _check_lambda(grid)
    right = _march(p, lam, True)   # (1/T, R2/T) at the left edge
    left = _march(p, lam, False)   # (R1/T, 1/T) at the right edge
    inv_t, r1_t = right[0], left[0]
    gap = np.max(np.abs(inv_t - left[1])) if len(grid) else 0.0
    if cross_tol is not None and gap > cross_tol:
        raise NoConvergence(f"two 1/T formulas disagree by {gap:.3g}")
    return ScatteringData(
        grid, inv_t, r1_t, np.conj(inv_t), np.conj(r1_t), (), p.t,
        dispersion or DispersionSpec.preset("kdv3"), CaseTag.KDV,
    )


def kdv_r2_over_t(p: SampledPotential, lambda_grid) -> np.ndarray:
    lam = _check_lambda(np.asarray(lambda_grid, dtype=float))
    return _march(p, lam, True)[1]


def norming_constant(p: SampledPotential, beta: float) -> float:
    f1 = jost_f1(p, 1j * beta).real
    return float(1.0 / nm.simpson(f1 * f1, p.dx))


def kdv_bound_states(p: SampledPotential, beta_max: float = 4.0,
                     n_scan: int = 400) -> list[BoundState]:
    """Zeros iβ of 1/T on (0, i·beta_max], with norming constants c_n.

    1/T(iβ) is real for real q, so zeros are bracketed by sign changes on a
    scan and refined with brentq.  The count is cross-checked against the
    argument principle on a thin box around the segment.
    """
    _check(p)
    if not beta_max > 0:
        raise ValidationError("beta_max must be positive")
    if not np.any(p.q):
        return []
    if np.any(p.q.imag != 0):
        raise ValidationError("KdV bound-state search needs a real potential")
    lo = beta_max * 1e-3

    def g(beta):
        return inverse_transmission(p, 1j * np.atleast_1d(beta)).real

    betas = np.linspace(lo, beta_max, n_scan)
    vals = g(betas)
    roots = []
    for k in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(brentq(lambda b: g(b)[0], betas[k], betas[k + 1],
                            xtol=1e-14, rtol=1e-14))
    roots += [b for b, v in zip(betas, vals) if v == 0.0]

    half = 0.5 * beta_max
    count = winding_number(lambda z: inverse_transmission(p, z),
                           ((-half, half), (lo, beta_max)), per_side=128)
    if count != len(roots):
        raise BracketFailure(
            f"argument principle counts {count} zeros but {len(roots)} were bracketed")
    return [BoundState.upper(1j * b, norming_constant(p, b)) for b in sorted(roots)]


def forward(p: SampledPotential, lambda_grid, beta_max: float = 4.0,
            dispersion: DispersionSpec | None = None) -> ScatteringData:
    sd = kdv_coefficients(p, lambda_grid, dispersion)
    return sd.with_(bound_states=tuple(kdv_bound_states(p, beta_max)))
