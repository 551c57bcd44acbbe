"""Finite-data check of the two-time decay uniqueness theorem.

If q and r decay like exp(-c x^{1+δ}) at two distinct times and A0 is a
polynomial of degree d, the theorem forces q = r = 0 whenever some order
ρ lies in the window (1 + 1/δ, d).  Here we

* fit decay envelopes to sampled data (:func:`fit_envelope`),
* form the window in exact rational arithmetic (:func:`rho_window`),
* estimate the indicator of the continued b(λ) along rays at finite radii
  (:func:`indicator_estimate`),

and combine them in :func:`certify`.  The envelope fit is a heuristic: a
fit counts only when its sup-norm log residual stays under
``RESIDUAL_MAX``.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import (CaseMismatch, EnvelopeInsufficient, ISTError, NoDecay,
                     NotPolynomial, ValidationError)
from .model import (CaseTag, CertificateReport, DecayEnvelope, DispersionSpec,
                    SampledPotential, Side, Verdict)
from .zs_scattering import _edge_decay_ok, extend_b

RESIDUAL_MAX = 0.05
DELTA_MIN = 1e-3
DELTA_MAX = 4.0
MIN_SAMPLES = 16
# relative level below which samples count as numerical noise
NOISE_REL = 1e-13
# absolute level under which a potential is taken to vanish
NOISE_FLOOR = 1e-10


class Field(str, Enum):
    Q = "q"
    R = "r"


class IndicatorSample(NamedTuple):
    angle: float
    h: float
    radius_cap: float


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------


def _tail(p: SampledPotential, field, side):
    field, side = Field(field), Side(side)
    f = np.abs(p.q if field is Field.Q else p.r)
    x = p.x
    if side is Side.LEFT:
        x, f = -x[::-1], f[::-1]
    keep = x >= 1.0
    x, f = x[keep], f[keep]
    peak = float(np.max(np.abs(p.q if field is Field.Q else p.r)))
    floor = max(NOISE_REL * peak, np.finfo(float).tiny)
    below = np.nonzero(f <= floor)[0]
    if len(below):
        x, f = x[:below[0]], f[:below[0]]
    if len(x) < MIN_SAMPLES:
        raise NoDecay(
            f"only {len(x)} usable samples of |{field.value}| with |x| >= 1 on the "
            f"{side.value} side (need {MIN_SAMPLES})")
    y = np.log(f)
    slope = np.polyfit(x, y, 1)[0]
    if not slope < 0:
        raise NoDecay(f"log|{field.value}| is not decreasing on the {side.value} side")
    return x, y


def _fit(x, y, delta):
    X = x ** (1.0 + delta)
    A = np.column_stack((np.ones_like(X), -X))
    (a, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    dev = y - (a - c * X)
    res = float(np.max(np.abs(dev))) if c > 0 else math.inf
    return a, c, res, float(np.max(dev))


def envelope_residual(p: SampledPotential, field, side, delta: float) -> float:
    """Sup-norm log residual of the best fit log C - c|x|^{1+δ} at a fixed δ."""
    x, y = _tail(p, field, side)
    return _fit(x, y, float(delta))[2]


def fit_envelope(p: SampledPotential, field=Field.Q, side=Side.RIGHT,
                 residual_max: float = RESIDUAL_MAX) -> DecayEnvelope:
    """Largest δ whose fitted envelope has residual <= ``residual_max``.

    When no δ in [DELTA_MIN, DELTA_MAX] qualifies, the best-residual fit is
    returned and its ``residual`` field shows the failure.  The amplitude is
    raised by the largest violation so the envelope bounds every sample.
    """
    x, y = _tail(p, field, side)
    deltas = np.linspace(DELTA_MIN, DELTA_MAX, 800)
    res = np.array([_fit(x, y, d)[2] for d in deltas])
    ok = np.nonzero(res <= residual_max)[0]
    if len(ok):
        i = ok[-1]
        delta = deltas[i]
        if i + 1 < len(deltas):
            # bisection keeping the feasible end, so the bound holds exactly
            lo, hi = deltas[i], deltas[i + 1]
            while hi - lo > 1e-12:
                mid = 0.5 * (lo + hi)
                if _fit(x, y, mid)[2] <= residual_max:
                    lo = mid
                else:
                    hi = mid
            delta = lo
    else:
        delta = deltas[int(np.argmin(res))]
    a, c, r, viol = _fit(x, y, delta)
    if not c > 0:
        raise NoDecay("fitted decay rate is not positive")
    return DecayEnvelope(math.exp(a + max(viol, 0.0)), float(c), float(delta),
                         Side(side), float(r))


# ---------------------------------------------------------------------------
# ρ window
# ---------------------------------------------------------------------------


def _exact(v) -> Fraction:
    # shortest decimal form, so 0.6 becomes 3/5 rather than its binary neighbour
    return v if isinstance(v, Fraction) else Fraction(repr(float(v)))


def window_from(delta, degree: int) -> tuple[Fraction, Fraction]:
    """(1 + 1/δ, d) exactly; δ = inf gives (1, d)."""
    if isinstance(delta, float) and math.isinf(delta):
        lo = Fraction(1)
    else:
        d = _exact(delta)
        if d <= 0:
            raise ValidationError("delta must be positive")
        lo = 1 + 1 / d
    return lo, Fraction(int(degree))


def _degree(dispersion: DispersionSpec) -> int:
    if not dispersion.is_polynomial:
        raise NotPolynomial(
            f"A0 {dispersion.label or ''} has a denominator; the window needs a polynomial")
    return int(dispersion.effective_degree)


def rho_window(env_q: DecayEnvelope, env_r: DecayEnvelope | None,
               dispersion: DispersionSpec) -> CertificateReport:
    """Window (1 + 1/min(δ, β), d) for polynomial A0 of degree d.

    ``env_r`` may be None (KdV case, where only q is constrained).
    """
    d = _degree(dispersion)
    delta = env_q.exponent_excess
    if env_r is not None:
        delta = min(delta, env_r.exponent_excess)
    lo, hi = window_from(delta, d)
    nonempty = lo < hi
    verdict = Verdict.CONDITIONS_MET if nonempty else Verdict.CONDITIONS_FAILED
    notes = f"delta={float(delta)!r} degree={d}"
    return CertificateReport((lo, hi), nonempty, (), verdict, notes)


# ---------------------------------------------------------------------------
# indicator
# ---------------------------------------------------------------------------


def radius_cap(p: SampledPotential, angle: float, r_max: float = 10.0,
               tol: float = 1e-10) -> float:
    """Largest radius along the ray at which extend_b passes its edge check."""
    s = math.sin(angle)
    if s <= 0 or _edge_decay_ok(p, r_max * s, tol):
        return r_max
    if not _edge_decay_ok(p, 0.0, tol):
        return 0.0
    lo, hi = 0.0, r_max * s
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _edge_decay_ok(p, mid, tol):
            lo = mid
        else:
            hi = mid
    return lo / s


def indicator_estimate(p0: SampledPotential, rho: float, angles,
                       r_max: float = 10.0, r_min: float = 0.5, n_radii: int = 12,
                       dropped: list | None = None) -> list[IndicatorSample]:
    """max log|b(r e^{iφ})| / r^ρ over the largest attainable radius decade.

    The decade is [cap/10, cap] with cap from :func:`radius_cap`.  Rays whose
    cap is below ``r_min`` are dropped; pass a list as ``dropped`` to collect
    (angle, reason) for them.  b ≡ 0 along a ray gives h = -inf.
    """
    if p0.case_tag is not CaseTag.NLS:
        raise ValidationError("indicator_estimate needs an NLS-case potential")
    if not rho > 0:
        raise ValidationError("rho must be positive")
    out = []
    for phi in angles:
        phi = float(phi)
        if not 0.0 < phi < math.pi:
            raise ValidationError("angles must lie in (0, pi)")
        cap = radius_cap(p0, phi, r_max)
        if cap < r_min:
            msg = f"radius cap {cap:.3g} below {r_min:g}"
            if dropped is not None:
                dropped.append((phi, msg))
            continue
        radii = np.geomspace(max(cap / 10.0, r_min), cap, n_radii)
        best = -math.inf
        try:
            for r in radii:
                b = extend_b(p0, r * np.exp(1j * phi))
                if b != 0:
                    best = max(best, math.log(abs(b)) / r ** rho)
        except EnvelopeInsufficient as e:
            if dropped is not None:
                dropped.append((phi, str(e)))
            continue
        out.append(IndicatorSample(phi, best, float(cap)))
    return out


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------


def _vanishes(p: SampledPotential, floor: float) -> bool:
    if p.case_tag is CaseTag.KDV:
        return float(np.max(np.abs(p.q))) <= floor
    return max(float(np.max(np.abs(p.q))), float(np.max(np.abs(p.r)))) <= floor


def certify(p0: SampledPotential, p1: SampledPotential,
            dispersion: DispersionSpec | None = None, side=Side.RIGHT,
            noise_floor: float = NOISE_FLOOR, n_angles: int = 5,
            r_max: float = 10.0) -> CertificateReport:
    """Check the theorem's hypotheses on data at two times and report.

    ConditionsMet means the window is nonempty and every envelope fit has
    residual within bound.  In that case the data should vanish; if they do
    not, the notes flag a counterexample candidate (a numerical artifact,
    since the theorem holds).
    """
    if p0.case_tag is not p1.case_tag:
        raise CaseMismatch(f"case tags differ: {p0.case_tag.value} vs {p1.case_tag.value}")
    if not p0.t < p1.t:
        raise ValidationError("certify needs p0.t < p1.t")
    kdv = p0.case_tag is CaseTag.KDV
    if dispersion is None:
        dispersion = DispersionSpec.preset("kdv3" if kdv else "nls2")
    notes = []
    try:
        degree = _degree(dispersion)
    except NotPolynomial as e:
        return CertificateReport(None, False, (), Verdict.INCONCLUSIVE, str(e))

    fields = [Field.Q] if kdv else [Field.Q, Field.R]
    deltas = {f: math.inf for f in fields}
    fits_ok = True
    for label, p in (("t0", p0), ("t1", p1)):
        if _vanishes(p, noise_floor):
            notes.append(f"{label}: potential below noise floor")
            continue
        for f in fields:
            try:
                env = fit_envelope(p, f, side)
            except NoDecay as e:
                notes.append(f"{label} {f.value}: {e}")
                fits_ok = False
                continue
            notes.append(f"{label} {f.value}: delta={env.exponent_excess:.6g} "
                         f"residual={env.residual:.3g}")
            if env.residual > RESIDUAL_MAX:
                fits_ok = False
            deltas[f] = min(deltas[f], env.exponent_excess)

    delta = min(deltas.values())
    lo, hi = window_from(delta, degree)
    nonempty = lo < hi
    met = nonempty and fits_ok
    samples = ()
    if not kdv and nonempty:
        rho = float((lo + hi) / 2) if hi != math.inf else float(lo + 1)
        angles = np.linspace(math.pi / 6, 5 * math.pi / 6, max(1, min(5, n_angles)))
        dropped = []
        try:
            est = indicator_estimate(p0, rho, angles, r_max=r_max, dropped=dropped)
            samples = tuple((s.angle, s.h) for s in est)
            notes.append(f"indicator rho={rho:.6g}")
        except ISTError as e:
            notes.append(f"indicator failed: {e}")
        for phi, msg in dropped:
            notes.append(f"ray {phi:.4g} dropped: {msg}")
    if met:
        if _vanishes(p0, noise_floor) and _vanishes(p1, noise_floor):
            notes.append("data vanish, as the theorem requires")
        else:
            notes.append("counterexample candidate: hypotheses pass but data do not "
                         "vanish; this indicates a numerical artifact")
    verdict = Verdict.CONDITIONS_MET if met else Verdict.CONDITIONS_FAILED
    return CertificateReport((lo, hi), nonempty, samples, verdict, "; ".join(notes))
