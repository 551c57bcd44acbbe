"""Exact time evolution of scattering data.

Under the flow generated by A0, a and ā are conserved while

    b(λ, t)  = b(λ, 0) e^{-2 A0(λ) t},     b̄(λ, t) = b̄(λ, 0) e^{+2 A0(λ) t}.

Norming constants follow the same rule: upper-half-plane constants pick up
e^{-2 A0(λ_k) Δt}, lower ones e^{+2 A0(λ̄_k) Δt}.  In the KdV case the b slot
holds R1/T and the norming constant is c_n, both scaled by e^{-2 A0 Δt}; with
A0 = -4iz³ and λ = iβ that is e^{+8β³Δt}.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NotPolynomial, Overflow, ValidationError
from .model import BoundState, DispersionSpec, HalfPlane, ScatteringData

EXPONENT_CAP = 700.0


def growth_exponent(dispersion: DispersionSpec, lam, dt: float):
    """-2 A0(λ) Δt, the log of the b-slot multiplier."""
    return -2.0 * np.asarray(dispersion(lam)) * dt


def evolve_norming(state: BoundState, dispersion: DispersionSpec, dt: float,
                   cap: float = EXPONENT_CAP) -> BoundState:
    e = complex(growth_exponent(dispersion, state.lam, dt))
    if state.half_plane is HalfPlane.LOWER:
        e = -e
    if abs(e) > cap:
        raise Overflow(
            f"|2 A0(lambda) dt| = {abs(e):.4g} exceeds cap {cap:g} at lambda={state.lam}")
    return BoundState(state.lam, state.norming * np.exp(e), state.half_plane)


def evolve(sd: ScatteringData, t1: float, cap: float = EXPONENT_CAP,
           dispersion: DispersionSpec | None = None) -> ScatteringData:
    """Scattering data at time ``t1``; ``dispersion`` overrides ``sd.dispersion``."""
    disp = dispersion or sd.dispersion
    if not disp.is_polynomial:
        raise NotPolynomial("evolution factors need a polynomial A0")
    if disp.effective_degree < 1:
        raise ValidationError("dispersion must have effective degree >= 1")
    dt = float(t1) - sd.t
    if not math.isfinite(dt):
        raise ValidationError("time step must be finite")
    if dt == 0.0:
        return sd.with_(dispersion=disp)
    states = tuple(evolve_norming(s, disp, dt, cap) for s in sd.bound_states)
    e = growth_exponent(disp, sd.lambda_grid.astype(complex), dt)
    big = np.abs(e.real) > cap
    if np.any(big):
        raise Overflow(f"real-axis exponent reaches {np.max(np.abs(e.real)):.4g}")
    b = sd.b * np.exp(e)
    b_bar = sd.b_bar * np.exp(-e)
    return ScatteringData(sd.lambda_grid, sd.a, b, sd.a_bar, b_bar, states,
                          float(t1), disp, sd.case_tag)
