"""Forward scattering for the Zakharov-Shabat system

    v1_x + iλ v1 = q v2,    v2_x - iλ v2 = r v1.

The oscillating factors are removed before integration: with
u1 = v1 e^{iλx}, u2 = v2 e^{-iλx} the system becomes purely off-diagonal and
is marched by RK4 (see :func:`akns_ist._numerics.rk4_offdiag`).  Starting
from the left edge with the identity, the fundamental matrix U at the right
edge gives all four coefficients at once::

    a = U11,  b = U21,  b̄ = -U12,  ā = U22.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _numerics as nm
from .errors import DivergedIntegration, ValidationError, WindingMismatch
from .model import (BoundState, CaseTag, DispersionSpec, HalfPlane,
                    SampledPotential, ScatteringData, require_valid)

DERIV_STEP = 1e-5
NEWTON_TOL = 1e-10


class Which(str, Enum):
    PHI = "Phi"
    PHI_BAR = "PhiBar"
    PSI = "Psi"
    PSI_BAR = "PsiBar"


# (start vector in u-variables, integrate from left?, allowed half plane sign)
_JOST = {
    Which.PHI: ((1, 0), True, +1),
    Which.PHI_BAR: ((0, -1), True, -1),
    Which.PSI: ((0, 1), False, +1),
    Which.PSI_BAR: ((1, 0), False, -1),
}


@dataclass(frozen=True, eq=False)
class JostSolution:
    lam: complex
    phi1: np.ndarray
    phi2: np.ndarray
    which: Which


def _check_nls(p: SampledPotential):
    require_valid(p, CaseTag.NLS)


def jost_solve(p: SampledPotential, lam: complex, which="Phi",
               bound: float = nm.OVERFLOW_BOUND) -> JostSolution:
    """One Jost solution on the whole grid, in the original v-variables."""
    _check_nls(p)
    which = Which(which)
    u0, from_left, sign = _JOST[which]
    lam = complex(lam)
    if sign * lam.imag < 0:
        raise ValidationError(
            f"{which.value} continues only into Im(lambda) {'>=' if sign > 0 else '<='} 0")
    x = p.x
    traj = nm.rk4_offdiag(x, p.q, p.r, [lam], u0, forward=from_left,
                          store=True, bound=bound)
    if traj is None:
        raise DivergedIntegration(f"Jost solution blew up at lambda={lam}")
    u1, u2 = traj[:, 0, 0], traj[:, 1, 0]
    return JostSolution(lam, u1 * np.exp(-1j * lam * x), u2 * np.exp(1j * lam * x), which)


def transfer_matrix(p: SampledPotential, lams, bound: float = nm.OVERFLOW_BOUND):
    """U(x_max) for each λ, shape (2, 2, m), starting from the identity."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    x = p.x
    out = np.empty((2, 2, len(lams)), dtype=complex)
    for col, u0 in enumerate(((1, 0), (0, 1))):
        u = nm.rk4_offdiag(x, p.q, p.r, lams, u0, bound=bound)
        if u is None:
            raise DivergedIntegration("transfer matrix overflowed")
        out[:, col, :] = u
    return out


def a_of(p: SampledPotential, lams) -> np.ndarray:
    """a(λ) for Im λ >= 0 (first column only)."""
    u = nm.rk4_offdiag(p.x, p.q, p.r, np.atleast_1d(lams), (1, 0))
    if u is None:
        raise DivergedIntegration("a(lambda) integration overflowed")
    return u[0]


def a_bar_of(p: SampledPotential, lams) -> np.ndarray:
    """ā(λ) for Im λ <= 0."""
    u = nm.rk4_offdiag(p.x, p.q, p.r, np.atleast_1d(lams), (0, -1))
    if u is None:
        raise DivergedIntegration("a_bar(lambda) integration overflowed")
    return -u[1]


def scattering_coefficients(p: SampledPotential, lambda_grid,
                            dispersion: DispersionSpec | None = None) -> ScatteringData:
    """a, b, ā, b̄ on a real grid; bound states left empty."""
    _check_nls(p)
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValidationError("lambda_grid must be strictly increasing")
    U = transfer_matrix(p, grid)
    return ScatteringData(
        grid, U[0, 0], U[1, 0], U[1, 1], -U[0, 1], (), p.t,
        dispersion or DispersionSpec.preset("nls2"), CaseTag.NLS,
    )


def _edge_decay_ok(p: SampledPotential, eta: float, tol: float) -> bool:
    # the neglected tail of ∫ e^{-iλy} r φ1 grows like |r| e^{2 Im λ y}
    x = p.x
    tail = np.abs(p.r) * np.exp(2 * eta * x)
    edge = max(tail[-1], tail[-2])
    return edge <= tol * max(1.0, float(np.max(tail)))


def extend_b(p: SampledPotential, lam: complex, tol: float = 1e-10) -> complex:
    """b(λ) = ∫ e^{-iλy} r(y) φ1(y, λ) dy for Im λ >= 0.

    Raises EnvelopeInsufficient when the integrand has not decayed at the
    right edge, since the truncated integral then misrepresents b.
    """
    from .errors import EnvelopeInsufficient

    _check_nls(p)
    lam = complex(lam)
    if lam.imag < 0:
        raise ValidationError("extend_b needs Im(lambda) >= 0")
    if not np.any(p.r):
        return 0j
    if not _edge_decay_ok(p, lam.imag, tol):
        raise EnvelopeInsufficient(
            f"r does not decay fast enough to continue b to Im(lambda)={lam.imag:g}")
    traj = nm.rk4_offdiag(p.x, p.q, p.r, [lam], (1, 0), store=True)
    if traj is None:
        raise DivergedIntegration(f"Jost solution blew up at lambda={lam}")
    # e^{-iλy} φ1 = e^{-2iλy} u1
    integrand = p.r * np.exp(-2j * lam * p.x) * traj[:, 0, 0]
    return complex(nm.simpson(integrand, p.dx))


# ---------------------------------------------------------------------------
# bound states
# ---------------------------------------------------------------------------


def _box_boundary(box, per_side):
    (x0, x1), (y0, y1) = box
    s = np.linspace(0.0, 1.0, per_side, endpoint=False)
    bottom = x0 + (x1 - x0) * s + 1j * y0
    right = x1 + 1j * (y0 + (y1 - y0) * s)
    top = x1 - (x1 - x0) * s + 1j * y1
    left = x0 + 1j * (y1 - (y1 - y0) * s)
    return np.concatenate((bottom, right, top, left))


def winding_number(f, box, per_side=512, max_doublings=4):
    """Zero count of analytic ``f`` inside ``box`` by the argument principle.

    Doubles the boundary sampling until the phase steps are small and the
    count repeats.
    """
    last = None
    for _ in range(max_doublings + 1):
        z = _box_boundary(box, per_side)
        vals = f(z)
        if np.any(vals == 0):
            raise WindingMismatch("a zero lies on the search box boundary")
        dphi = np.angle(np.roll(vals, -1) / vals)
        count = int(round(dphi.sum() / (2 * np.pi)))
        if np.max(np.abs(dphi)) < np.pi / 4 and count == last:
            return count
        last = count
        per_side *= 2
    if np.max(np.abs(dphi)) >= np.pi / 2:
        raise WindingMismatch("phase of a varies too fast along the box boundary")
    return last


def _newton(f, z0, box, tol=NEWTON_TOL, maxit=40):
    (x0, x1), (y0, y1) = box
    z = complex(z0)
    h = DERIV_STEP
    for _ in range(maxit):
        v = f(np.array([z, z + h, z - h]))
        fz = v[0]
        if abs(fz) < tol:
            return z, (v[1] - v[2]) / (2 * h)
        dz = fz / ((v[1] - v[2]) / (2 * h))
        z = z - dz
        if not (x0 - 0.5 <= z.real <= x1 + 0.5 and y0 - 0.5 <= z.imag <= y1 + 0.5):
            return None
    v = f(np.array([z, z + h, z - h]))
    if abs(v[0]) < 100 * tol:
        return z, (v[1] - v[2]) / (2 * h)
    return None


def _local_minima(absf):
    m = absf
    inner = m[1:-1, 1:-1]
    mask = np.ones_like(inner, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                mask &= inner <= m[1 + di:m.shape[0] - 1 + di, 1 + dj:m.shape[1] - 1 + dj]
    ii, jj = np.nonzero(mask)
    return ii + 1, jj + 1


def _zeros_in_box(f, box, count, seeds_per_axis=24):
    (x0, x1), (y0, y1) = box
    found = []
    n = seeds_per_axis
    while n <= 4 * seeds_per_axis and len(found) < count:
        xs = np.linspace(x0, x1, n)
        ys = np.linspace(y0, y1, n)
        Z = xs[None, :] + 1j * ys[:, None]
        vals = np.abs(f(Z.ravel())).reshape(Z.shape)
        # pad so edge minima count too
        pad = np.pad(vals, 1, mode="constant", constant_values=np.inf)
        ii, jj = _local_minima(pad)
        seeds = Z[ii - 1, jj - 1]
        seeds = seeds[np.argsort(vals[ii - 1, jj - 1])]
        for s in seeds:
            res = _newton(f, s, box)
            if res is None:
                continue
            z, d = res
            inside = x0 < z.real < x1 and y0 < z.imag < y1
            if inside and all(abs(z - w) > 1e-7 for w, _ in found):
                found.append((z, d))
            if len(found) >= count:
                break
        n *= 2
    return found


def _norming_ratio(p: SampledPotential, lam: complex, upper: bool) -> complex:
    """b_k with φ = b_k ψ (upper) or b̄_k with φ̄ = b̄_k ψ̄ (lower)."""
    if upper:
        left, right = jost_solve(p, lam, Which.PHI), jost_solve(p, lam, Which.PSI)
    else:
        left, right = jost_solve(p, lam, Which.PHI_BAR), jost_solve(p, lam, Which.PSI_BAR)
    # both sides are accurate where the potential lives; fit there
    w = np.abs(p.q) + np.abs(p.r)
    sel = w >= 0.5 * w.max()
    num = np.sum(np.conj(right.phi1[sel]) * left.phi1[sel] + np.conj(right.phi2[sel]) * left.phi2[sel])
    den = np.sum(np.abs(right.phi1[sel]) ** 2 + np.abs(right.phi2[sel]) ** 2)
    return num / den


def find_bound_states(p: SampledPotential, search_box=((-2.0, 2.0), (0.05, 3.0)),
                      lower: bool = True, per_side: int = 512) -> list[BoundState]:
    """Zeros of a in the box (and of ā in its mirror image if ``lower``).

    ``search_box`` is ((re_min, re_max), (im_min, im_max)) with im_min > 0.
    """
    _check_nls(p)
    (x0, x1), (y0, y1) = search_box
    if not (y0 > 0 and y1 > y0 and x1 > x0):
        raise ValidationError("search box must lie strictly in the upper half plane")
    if not (np.any(p.q) or np.any(p.r)):
        return []

    states = []
    for half in (HalfPlane.UPPER, HalfPlane.LOWER) if lower else (HalfPlane.UPPER,):
        if half is HalfPlane.UPPER:
            f = lambda z: a_of(p, z)
            box = search_box
        else:
            f = lambda z: a_bar_of(p, z)
            box = ((x0, x1), (-y1, -y0))
        count = winding_number(f, box, per_side)
        if count < 0:
            raise WindingMismatch(f"negative winding {count} in the {half.value} box")
        if count == 0:
            continue
        zeros = _zeros_in_box(f, box, count)
        if len(zeros) != count:
            raise WindingMismatch(
                f"winding count {count} but {len(zeros)} refined zeros in the {half.value} box")
        for z, dz in sorted(zeros, key=lambda t: (t[0].imag, t[0].real)):
            ratio = _norming_ratio(p, z, half is HalfPlane.UPPER)
            if half is HalfPlane.UPPER:
                states.append(BoundState.upper(z, ratio / dz))
            else:
                states.append(BoundState.lower(z, ratio / dz))
    return states


def forward(p: SampledPotential, lambda_grid, search_box=((-2.0, 2.0), (0.05, 3.0)),
            dispersion: DispersionSpec | None = None) -> ScatteringData:
    """Coefficients on the grid plus the discrete spectrum in both half planes."""
    sd = scattering_coefficients(p, lambda_grid, dispersion)
    states = find_bound_states(p, search_box)
    return sd.with_(bound_states=tuple(states))
