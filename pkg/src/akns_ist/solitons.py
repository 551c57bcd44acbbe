"""Reflectionless potentials in closed form.

With F(z) = -i Σ m_l e^{iλ_l z} and F̄(z) = i Σ m̄_k e^{-iλ̄_k z} the Marchenko
kernels are finite sums, K = Σ P_k e^{-iλ̄_k y}, K̄ = Σ Q_l e^{iλ_l y}.  In the
scaled unknowns P̃_k = P_k e^{-iλ̄_k x}, Q̃_l = Q_l e^{iλ_l x}::

    P̃ = Γ̄ (e1 + C Q̃),    Q̃ = Γ (e2 + Cᵀ P̃),

    γ̄_k = i m̄_k e^{-2iλ̄_k x},  γ_l = i m_l e^{2iλ_l x},  C_kl = 1/(i(λ̄_k - λ_l)),

and q = -2 Σ P̃_k⁽¹⁾, r = -2 Σ Q̃_l⁽²⁾.  Eliminating Q̃ gives
Δ_P = det(δ_kj - Σ_l m̄_k m_l e^{i(2λ_l-λ̄_k-λ̄_j)x} / ((λ_l-λ̄_k)(λ_l-λ̄_j))).

Rows with |γ| > 1 are divided through by γ before solving; this keeps the
linear system well scaled on both half-lines.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptySpectrum, SingularDeterminant, ValidationError
from .evolution import evolve_norming
from .model import (BoundState, CaseTag, DispersionSpec, HalfPlane,
                    SampledPotential, ScatteringData)

COND_MAX = 1e12


def _prepare(upper, lower, dispersion, t):
    upper = [s if isinstance(s, BoundState) else BoundState.upper(*s) for s in upper]
    lower = [s if isinstance(s, BoundState) else BoundState.lower(*s) for s in lower]
    for s in upper:
        if s.half_plane is not HalfPlane.UPPER:
            raise ValidationError("upper list holds a lower-half-plane state")
    for s in lower:
        if s.half_plane is not HalfPlane.LOWER:
            raise ValidationError("lower list holds an upper-half-plane state")
    for s in upper:
        for sb in lower:
            if s.lam == sb.lam:
                raise ValidationError("lambda_l must differ from every lambda_bar_k")
    if t != 0.0:
        upper = [evolve_norming(s, dispersion, t) for s in upper]
        lower = [evolve_norming(s, dispersion, t) for s in lower]
    return upper, lower


def _system(upper, lower, x):
    lam = np.array([s.lam for s in upper], dtype=complex)
    m = np.array([s.norming for s in upper], dtype=complex)
    lamb = np.array([s.lam for s in lower], dtype=complex)
    mb = np.array([s.norming for s in lower], dtype=complex)
    C = 1.0 / (1j * (lamb[:, None] - lam[None, :]))            # (Nb, N)
    gb = 1j * mb[None, :] * np.exp(-2j * np.outer(x, lamb))    # (nx, Nb)
    g = 1j * m[None, :] * np.exp(2j * np.outer(x, lam))        # (nx, N)
    return C, gb, g


def _solve(upper, lower, x):
    C, gb, g = _system(upper, lower, x)
    nb, n = C.shape
    nx = len(x)
    size = nb + n
    A = np.zeros((nx, size, size), dtype=complex)
    rhs = np.zeros((nx, size, 2), dtype=complex)
    A[:, :nb, :nb] = np.eye(nb)
    A[:, nb:, nb:] = np.eye(n)
    A[:, :nb, nb:] = -gb[:, :, None] * C[None, :, :]
    A[:, nb:, :nb] = -g[:, :, None] * C.T[None, :, :]
    rhs[:, :nb, 0] = gb
    rhs[:, nb:, 1] = g
    # equilibrate rows whose γ is large
    scale = np.ones((nx, size), dtype=complex)
    gam = np.concatenate((gb, g), axis=1)
    big = np.abs(gam) > 1.0
    scale[big] = 1.0 / gam[big]
    A *= scale[:, :, None]
    rhs *= scale[:, :, None]
    cond = np.linalg.cond(A) if size else np.ones(nx)
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_MAX):
        i = int(np.nanargmax(np.where(np.isfinite(cond), cond, np.inf)))
        raise SingularDeterminant(
            f"reflectionless system condition {cond[i]:.3g} at x={x[i]:.6g}")
    sol = np.linalg.solve(A, rhs)
    P, Q = sol[:, :nb, :], sol[:, nb:, :]
    return P, Q, cond


def soliton_potential(upper, lower, dispersion: DispersionSpec | None = None,
                      x_grid=None, t: float = 0.0) -> SampledPotential:
    """q and r of the reflectionless data, norming constants given at t = 0."""
    dispersion = dispersion or DispersionSpec.preset("nls2")
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValidationError("x_grid needs at least two points")
    upper, lower = _prepare(upper, lower, dispersion, float(t))
    if not upper and not lower:
        z = np.zeros(len(x), dtype=complex)
        return SampledPotential(x[0], x[1] - x[0], z, z.copy(), t, CaseTag.NLS)
    P, Q, _ = _solve(upper, lower, x)
    q = -2.0 * P[:, :, 0].sum(axis=1)
    r = -2.0 * Q[:, :, 1].sum(axis=1)
    return SampledPotential(x[0], x[1] - x[0], q, r, t, CaseTag.NLS)


def determinants(upper, lower, x_grid, dispersion: DispersionSpec | None = None,
                 t: float = 0.0):
    """Δ_P(x) and Δ_Q(x) on the grid (both tend to 1 as x → +∞)."""
    dispersion = dispersion or DispersionSpec.preset("nls2")
    upper, lower = _prepare(upper, lower, dispersion, float(t))
    x = np.asarray(x_grid, dtype=float)
    C, gb, g = _system(upper, lower, x)
    nb, n = C.shape
    # Γ̄ C Γ Cᵀ and Γ Cᵀ Γ̄ C per x
    MP = np.eye(nb)[None] - np.einsum("xk,kl,xl,jl->xkj", gb, C, g, C)
    MQ = np.eye(n)[None] - np.einsum("xl,kl,xk,kj->xlj", g, C, gb, C)
    return np.linalg.det(MP), np.linalg.det(MQ)


def asymptotic_envelope(upper, lower) -> float:
    """Slowest exponential tail rate of the reflectionless potential.

    |q(x)| ~ e^{-2η x} with η the smallest |Im| over both half planes, so a
    single pair at ±i/2 gives 1.0.
    """
    ims = [abs(complex(s.lam if isinstance(s, BoundState) else s[0]).imag)
           for s in list(upper) + list(lower)]
    if not ims:
        raise EmptySpectrum("no bound states")
    up = [abs(complex(s.lam if isinstance(s, BoundState) else s[0]).imag) for s in upper]
    lo = [abs(complex(s.lam if isinstance(s, BoundState) else s[0]).imag) for s in lower]
    return 2.0 * min(min(up, default=np.inf), min(lo, default=np.inf))


def focusing_pair(lam: complex, norming: complex):
    """Upper state and its mirror under r = -q*: λ̄ = conj(λ), m̄ = conj(m)."""
    return (BoundState.upper(lam, norming),
            BoundState.lower(np.conj(lam), np.conj(norming)))


def sech_soliton(eta: float = 0.5, x0: float = 0.0, phase: float = 0.0):
    """Norming data of q = 2η sech(2η(x - x0)) e^{i phase} at t = 0."""
    mbar = 1j * 2 * eta * np.exp(2 * eta * x0) * np.exp(1j * phase)
    return focusing_pair(1j * eta, np.conj(mbar))


def kdv_reflectionless(states, x_grid, t: float = 0.0,
                       dispersion: DispersionSpec | None = None) -> SampledPotential:
    """KdV multi-soliton by Marchenko inversion of (R1 ≡ 0, {β_n, c_n})."""
    from .evolution import evolve
    from .marchenko import inverse

    dispersion = dispersion or DispersionSpec.preset("kdv3")
    states = [s if isinstance(s, BoundState) else BoundState.upper(1j * s[0], s[1])
              for s in states]
    grid = np.array([-1.0, 1.0])
    one = np.ones(2, dtype=complex)
    zero = np.zeros(2, dtype=complex)
    sd = ScatteringData(grid, one, zero, one, zero, tuple(states), 0.0, dispersion,
                        CaseTag.KDV)
    if t != 0.0:
        sd = evolve(sd, t)
    return inverse(sd, x_grid)


def kdv_closed_form(states, x_grid, t: float = 0.0) -> np.ndarray:
    """2 d²/dx² log det(I + A) with A_mn = √(c_m c_n) e^{-(β_m+β_n)x}/(β_m+β_n).

    Independent of the Marchenko code; used as a reference.  Time enters as
    c_n(t) = c_n e^{8β_n³ t}.
    """
    x = np.asarray(x_grid, dtype=float)
    beta = np.array([complex(s.lam).imag if isinstance(s, BoundState) else s[0]
                     for s in states])
    c = np.array([complex(s.norming).real if isinstance(s, BoundState) else s[1]
                  for s in states]) * np.exp(8 * beta ** 3 * t)
    S = np.add.outer(beta, beta)
    e = np.exp(-np.outer(x, beta))
    A = np.sqrt(np.outer(c, c))[None] * e[:, :, None] * e[:, None, :] / S[None]
    M = np.eye(len(beta))[None] + A
    Minv = np.linalg.inv(M)
    d1 = Minv @ (-S[None] * A)
    d2 = Minv @ (S[None] ** 2 * A)
    # (log det M)'' = tr(M⁻¹M'') - tr((M⁻¹M')²)
    return 2 * (np.trace(d2, axis1=1, axis2=2)
                - np.einsum("xij,xji->x", d1, d1)).real
