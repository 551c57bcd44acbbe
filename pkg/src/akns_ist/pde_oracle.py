"""Direct PDE integrators used as ground truth for the IST pipeline.

Equations, in the normalization that matches the scattering-data flow:

* NLS (A0 = -2iz², r = -q*):   q_t = i q_xx + 2i |q|² q
* mKdV (A0 = -4iz³, r = q):    q_t = -q_xxx + 6 q² q_x
* KdV (A0 = -4iz³, r = -1):    q_t = -6 q q_x - q_xxx

The KdV coefficients are fixed by the one-soliton 2β² sech²(β(x - 4β²t - x0)),
which is what the IST evolution produces.  All solvers work on a zero-padded
periodic box and crop back to the input grid.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as sfft

from ._threads import get_threads
from .errors import CFLViolation, ValidationError
from .model import CaseTag, SampledPotential

NLS_PHASE_MAX = np.pi / 4
RK4_STABILITY = 2.8
# Strang splitting is only second order; stability alone allows far too big a step
NLS_DT_MAX = 1e-3


def _padded(p: SampledPotential, pad: float):
    if pad < 0:
        raise ValidationError("pad must be non-negative")
    extra = int(np.ceil(pad * p.n))
    m = sfft.next_fast_len(p.n + 2 * extra)
    left = (m - p.n) // 2
    k = 2 * np.pi * sfft.fftfreq(m, p.dx)
    return m, left, k


def _embed(v, m, left):
    out = np.zeros(m, dtype=v.dtype)
    out[left:left + len(v)] = v
    return out


def _check_steps(dt, n_steps):
    if not (np.isfinite(dt) and dt > 0):
        raise ValidationError("dt must be positive")
    if int(n_steps) != n_steps or n_steps < 0:
        raise ValidationError("n_steps must be a non-negative integer")


def step_nls(p: SampledPotential, dt: float, n_steps: int, reduction: str = "nls",
             pad: float = 0.5) -> SampledPotential:
    """Strang split-step Fourier for focusing NLS, or mKdV with ``reduction='mkdv'``.

    NLS: the nonlinear substep is the exact phase rotation e^{2i|q|²dt}.
    mKdV: the nonlinear substep q_t = 2 (q³)_x is one RK4 step with a
    spectral derivative.  ``pad`` is the zero margin on each side as a
    fraction of the grid length.
    """
    _check_steps(dt, n_steps)
    if p.case_tag is not CaseTag.NLS:
        raise ValidationError("step_nls needs an NLS-case potential")
    if reduction == "nls":
        if not np.allclose(p.r, -np.conj(p.q), atol=1e-12, rtol=0):
            raise ValidationError("NLS oracle needs r = -conj(q)")
    elif reduction == "mkdv":
        if not np.allclose(p.r, p.q, atol=1e-12, rtol=0):
            raise ValidationError("mKdV oracle needs r = q")
    else:
        raise ValidationError(f"unknown reduction {reduction!r}")
    m, left, k = _padded(p, pad)
    w = get_threads()
    u = _embed(np.array(p.q), m, left)
    amp = float(np.max(np.abs(u))) if m else 0.0
    if reduction == "nls":
        if 2 * amp ** 2 * dt > NLS_PHASE_MAX:
            raise CFLViolation(
                f"nonlinear phase per step {2 * amp ** 2 * dt:.3g} exceeds pi/4")
        half = np.exp(-1j * k ** 2 * dt / 2)
    else:
        if 6 * amp ** 2 * np.max(np.abs(k)) * dt > RK4_STABILITY:
            raise CFLViolation("mKdV step exceeds the RK4 stability heuristic")
        half = np.exp(1j * k ** 3 * dt / 2)
    ik = 1j * k
    ik[np.abs(k) > (2.0 / 3.0) * np.max(np.abs(k))] = 0.0

    def nonlinear(v):
        if reduction == "nls":
            return v * np.exp(2j * np.abs(v) ** 2 * dt)

        def f(z):
            return 2 * sfft.ifft(ik * sfft.fft(z ** 3, workers=w), workers=w)

        k1 = f(v)
        k2 = f(v + 0.5 * dt * k1)
        k3 = f(v + 0.5 * dt * k2)
        k4 = f(v + dt * k3)
        return v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    for _ in range(int(n_steps)):
        u = sfft.ifft(half * sfft.fft(u, workers=w), workers=w)
        u = nonlinear(u)
        u = sfft.ifft(half * sfft.fft(u, workers=w), workers=w)
    q = u[left:left + p.n]
    r = -np.conj(q) if reduction == "nls" else q.copy()
    return SampledPotential(p.x0, p.dx, q, r, p.t + dt * n_steps, CaseTag.NLS)


def step_kdv(p: SampledPotential, dt: float, n_steps: int,
             pad: float = 0.5) -> SampledPotential:
    """Integrating-factor RK4 for q_t + 6 q q_x + q_xxx = 0 in Fourier space."""
    _check_steps(dt, n_steps)
    if p.case_tag is not CaseTag.KDV:
        raise ValidationError("step_kdv needs a KdV-case potential")
    if np.any(np.abs(p.q.imag) > 1e-12):
        raise ValidationError("KdV oracle needs a real potential")
    m, left, k = _padded(p, pad)
    w = get_threads()
    u = _embed(np.array(p.q.real), m, left)
    amp = float(np.max(np.abs(u))) if m else 0.0
    if 6 * amp * np.max(np.abs(k)) * dt > RK4_STABILITY:
        raise CFLViolation(
            f"KdV step {dt:g} exceeds the RK4 stability heuristic "
            f"(limit about {RK4_STABILITY / (6 * amp * np.max(np.abs(k))):.3g})")
    E = np.exp(1j * k ** 3 * dt / 2)
    E2 = E * E
    g = -3j * k
    # 2/3 rule: aliased products otherwise seed a slow high-k instability
    g[np.abs(k) > (2.0 / 3.0) * np.max(np.abs(k))] = 0.0

    def N(v):
        return g * sfft.fft(sfft.ifft(v, workers=w).real ** 2, workers=w)

    v = sfft.fft(u, workers=w)
    for _ in range(int(n_steps)):
        a = N(v)
        b = N(E * (v + 0.5 * dt * a))
        c = N(E * v + 0.5 * dt * b)
        d = N(E2 * v + E * c * dt)
        v = E2 * v + dt / 6 * (E2 * a + 2 * E * (b + c) + d)
    q = sfft.ifft(v, workers=w).real[left:left + p.n]
    return SampledPotential(p.x0, p.dx, q.astype(complex), -np.ones(p.n, dtype=complex),
                            p.t + dt * n_steps, CaseTag.KDV)


def stable_dt(p: SampledPotential, reduction: str | None = None, safety: float = 0.5) -> float:
    """A step comfortably inside the CFL heuristic of the matching stepper."""
    amp = max(float(np.max(np.abs(p.q))), 1e-12)
    kmax = np.pi / p.dx
    if p.case_tag is CaseTag.KDV:
        return safety * RK4_STABILITY / (6 * amp * kmax)
    if (reduction or "nls") == "mkdv":
        return safety * RK4_STABILITY / (6 * amp ** 2 * kmax)
    return min(NLS_DT_MAX, safety * NLS_PHASE_MAX / (2 * amp ** 2))


def evolve_to(p: SampledPotential, t1: float, dt: float | None = None,
              reduction: str = "nls", pad: float = 0.5) -> SampledPotential:
    """Run the matching stepper from p.t to t1 with a whole number of steps."""
    span = float(t1) - p.t
    if span < 0:
        raise ValidationError("t1 must not precede p.t")
    if span == 0:
        return p
    h = dt if dt is not None else stable_dt(p, reduction)
    n = max(1, int(np.ceil(span / h)))
    h = span / n
    if p.case_tag is CaseTag.KDV:
        out = step_kdv(p, h, n, pad)
    else:
        out = step_nls(p, h, n, reduction, pad)
    return out.with_time(float(t1))
