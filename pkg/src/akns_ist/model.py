"""Core value types and their serialized forms.

All types are immutable once built: array fields are copied and flagged
read-only, so instances can be shared freely between threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ValidationError

MIN_NODES = 8


class CaseTag(str, Enum):
    NLS = "nls"
    KDV = "kdv"


class HalfPlane(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


class Side(str, Enum):
    RIGHT = "right"
    LEFT = "left"


class Verdict(str, Enum):
    CONDITIONS_MET = "ConditionsMet"
    CONDITIONS_FAILED = "ConditionsFailed"
    INCONCLUSIVE = "Inconclusive"


def _frozen(a, dtype=complex) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _cplx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _uncplx(v) -> complex:
    return complex(v[0], v[1])


# ---------------------------------------------------------------------------
# SampledPotential
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledPotential:
    """The pair (q, r) on a uniform grid ``x0 + j*dx`` at time ``t``."""

    x0: float
    dx: float
    q: np.ndarray
    r: np.ndarray
    t: float = 0.0
    case_tag: CaseTag = CaseTag.NLS

    def __post_init__(self):
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "case_tag", CaseTag(self.case_tag))
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "r", _frozen(self.r))

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def x_max(self) -> float:
        return self.x0 + self.dx * (self.n - 1)

    def with_time(self, t: float) -> "SampledPotential":
        return replace(self, t=t)

    def __eq__(self, other):
        if not isinstance(other, SampledPotential):
            return NotImplemented
        return (
            self.x0 == other.x0
            and self.dx == other.dx
            and self.t == other.t
            and self.case_tag == other.case_tag
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.r, other.r)
        )

    __hash__ = None

    @classmethod
    def focusing(cls, x: np.ndarray, q, t: float = 0.0) -> "SampledPotential":
        """NLS-case potential with the focusing reduction r = -conj(q)."""
        x = np.asarray(x, dtype=float)
        q = np.asarray(q, dtype=complex)
        return cls(x[0], x[1] - x[0], q, -np.conj(q), t, CaseTag.NLS)

    @classmethod
    def kdv(cls, x: np.ndarray, q, t: float = 0.0) -> "SampledPotential":
        x = np.asarray(x, dtype=float)
        q = np.asarray(q, dtype=complex)
        return cls(x[0], x[1] - x[0], q, -np.ones_like(q), t, CaseTag.KDV)

    @classmethod
    def from_samples(cls, x, q, r, t=0.0, case_tag=CaseTag.NLS) -> "SampledPotential":
        """Build from possibly non-uniform samples, resampling by cubic spline."""
        x = np.asarray(x, dtype=float)
        q = np.asarray(q, dtype=complex)
        r = np.asarray(r, dtype=complex)
        if len(x) < 2:
            raise ValidationError("grid too short")
        steps = np.diff(x)
        if np.any(steps <= 0):
            raise ValidationError("x must be strictly increasing")
        if np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            return cls(x[0], steps[0], q, r, t, case_tag)
        xu = np.linspace(x[0], x[-1], len(x))
        qu = CubicSpline(x, q)(xu)
        ru = CubicSpline(x, r)(xu)
        if CaseTag(case_tag) is CaseTag.KDV:
            ru = -np.ones_like(qu)
        return cls(xu[0], xu[1] - xu[0], qu, ru, t, case_tag)

    def weighted_l1(self) -> tuple[float, float]:
        """Trapezoid estimates of the integrals of (1+|x|)|q| and (1+|x|)|r|."""
        w = 1.0 + np.abs(self.x)
        return (
            float(np.trapezoid(w * np.abs(self.q), dx=self.dx)),
            float(np.trapezoid(w * np.abs(self.r), dx=self.dx)),
        )

    # -- serialization --------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# t={self.t!r} case={self.case_tag.value}\n")
        buf.write("# columns: x,re_q,im_q,re_r,im_r\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re_q", "im_q", "re_r", "im_r"])
        for xj, qj, rj in zip(self.x, self.q, self.r):
            w.writerow([repr(float(v)) for v in (xj, qj.real, qj.imag, rj.real, rj.imag)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampledPotential":
        t, case = 0.0, CaseTag.NLS
        rows = []
        for line in text.splitlines():
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                for tok in s[1:].split():
                    if tok.startswith("t="):
                        t = float(tok[2:])
                    elif tok.startswith("case="):
                        case = CaseTag(tok[5:])
                continue
            rows.append(s)
        reader = csv.reader(rows)
        header = next(reader, None)
        if header != ["x", "re_q", "im_q", "re_r", "im_r"]:
            raise ValidationError(f"unexpected CSV header {header!r}")
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
        if data.ndim != 2 or data.shape[0] < 2:
            raise ValidationError("grid too short")
        x = data[:, 0]
        q = data[:, 1] + 1j * data[:, 2]
        r = data[:, 3] + 1j * data[:, 4]
        if np.all(np.diff(x) > 0):
            # Exact uniform grids keep their stored nodes bit-for-bit.
            steps = np.diff(x)
            dx = (x[-1] - x[0]) / (len(x) - 1)
            if np.allclose(steps, dx, rtol=1e-9, atol=0.0):
                p = cls(x[0], dx, q, r, t, case)
                if np.array_equal(p.x, x):
                    return p
                return cls(x[0], steps[0], q, r, t, case)
        return cls.from_samples(x, q, r, t, case)

    def save_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def load_csv(cls, path) -> "SampledPotential":
        return cls.from_csv(Path(path).read_text())


def validate(p: SampledPotential, edge_tol: float | None = None) -> list[str]:
    """List every invariant ``p`` violates; an empty list means valid.

    ``edge_tol``, when given, also flags potentials whose boundary values are
    too large for the finite grid to stand in for the whole line.
    """
    out = []
    if not (math.isfinite(p.dx) and p.dx > 0):
        out.append("dx must be a positive finite number")
    if len(p.q) != len(p.r):
        out.append("q and r must have equal length")
    if min(len(p.q), len(p.r)) < MIN_NODES:
        out.append("grid too short")
    if not np.all(np.isfinite(p.q)):
        out.append("q must be finite at every node")
    if not np.all(np.isfinite(p.r)):
        out.append("r must be finite at every node")
    if p.case_tag is CaseTag.KDV and not np.all(p.r == -1):
        out.append("r must equal −1 in KdV case")
    if edge_tol is not None and len(p.q) > 0:
        edge = max(abs(p.q[0]), abs(p.q[-1]))
        if p.case_tag is CaseTag.NLS and len(p.r) > 0:
            edge = max(edge, abs(p.r[0]), abs(p.r[-1]))
        if edge > edge_tol:
            out.append(f"boundary values {edge:.3g} exceed truncation tolerance {edge_tol:.3g}")
    return out


def require_valid(p: SampledPotential, case: CaseTag | None = None) -> None:
    problems = validate(p)
    if problems:
        raise ValidationError("; ".join(problems))
    if case is not None and p.case_tag is not CaseTag(case):
        raise ValidationError(f"expected a {CaseTag(case).value} potential, got {p.case_tag.value}")


# ---------------------------------------------------------------------------
# DispersionSpec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DispersionSpec:
    """A0(z) = numerator(z) / denominator(z), coefficients in ascending degree."""

    numerator: tuple
    denominator: tuple = (1.0 + 0j,)
    label: str = ""

    def __post_init__(self):
        num = tuple(complex(c) for c in self.numerator)
        den = tuple(complex(c) for c in self.denominator)
        if not num or num[-1] == 0:
            raise ValidationError("leading coefficient of numerator must be nonzero")
        if not any(c != 0 for c in den):
            raise ValidationError("denominator must not be the zero polynomial")
        while den[-1] == 0:
            den = den[:-1]
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @property
    def numerator_degree(self) -> int:
        return len(self.numerator) - 1

    @property
    def denominator_degree(self) -> int:
        return len(self.denominator) - 1

    @property
    def effective_degree(self) -> int:
        return self.numerator_degree - self.denominator_degree

    @property
    def is_polynomial(self) -> bool:
        return self.denominator_degree == 0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        num = np.polyval(self.numerator[::-1], z)
        den = np.polyval(self.denominator[::-1], z)
        out = num / den
        return out if out.ndim else complex(out)

    @classmethod
    def preset(cls, name: str) -> "DispersionSpec":
        try:
            num = PRESETS[name]
        except KeyError:
            raise ValidationError(
                f"unknown dispersion preset {name!r}; choose from {sorted(PRESETS)}"
            ) from None
        return cls(num, (1.0,), name)

    def to_dict(self) -> dict:
        return {
            "numerator": [_cplx(c) for c in self.numerator],
            "denominator": [_cplx(c) for c in self.denominator],
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DispersionSpec":
        return cls(
            tuple(_uncplx(c) for c in d["numerator"]),
            tuple(_uncplx(c) for c in d.get("denominator", [[1.0, 0.0]])),
            d.get("label", ""),
        )


# kdv3 and mkdv3 share A0; the reduction (r = -1 vs r = q) lives in the potential.
PRESETS = {
    "kdv3": (0, 0, 0, -4j),
    "nls2": (0, 0, -2j),
    "mkdv3": (0, 0, 0, -4j),
    "transport1": (0, -1j),
}


# ---------------------------------------------------------------------------
# Scattering data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundState:
    """A discrete eigenvalue with its norming constant.

    NLS case: ``norming`` is the residue-derived m_k (upper) or m̄_k (lower)
    that enters the Marchenko kernels directly.  KdV case: ``lam`` = iβ and
    ``norming`` = c_n = (∫ f1(x, iβ)² dx)^{-1}.
    """

    lam: complex
    norming: complex
    half_plane: HalfPlane

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))
        object.__setattr__(self, "norming", complex(self.norming))
        object.__setattr__(self, "half_plane", HalfPlane(self.half_plane))
        im = self.lam.imag
        if self.half_plane is HalfPlane.UPPER and not im > 0:
            raise ValidationError("upper-half-plane bound state needs Im(lambda) > 0")
        if self.half_plane is HalfPlane.LOWER and not im < 0:
            raise ValidationError("lower-half-plane bound state needs Im(lambda) < 0")

    @classmethod
    def upper(cls, lam, norming) -> "BoundState":
        return cls(lam, norming, HalfPlane.UPPER)

    @classmethod
    def lower(cls, lam, norming) -> "BoundState":
        return cls(lam, norming, HalfPlane.LOWER)

    def to_dict(self) -> dict:
        return {"lambda": _cplx(self.lam), "norming": _cplx(self.norming),
                "half_plane": self.half_plane.value}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundState":
        return cls(_uncplx(d["lambda"]), _uncplx(d["norming"]), d["half_plane"])


def kdv_state_problems(s: BoundState) -> list[str]:
    out = []
    if s.half_plane is not HalfPlane.UPPER or s.lam.real != 0 or not s.lam.imag > 0:
        out.append("KdV bound state must be purely imaginary in the upper half plane")
    if s.norming.imag != 0 or not s.norming.real > 0:
        out.append("KdV norming constant must be real and positive")
    return out


@dataclass(frozen=True, eq=False)
class ScatteringData:
    """Scattering coefficients on a real grid plus the discrete spectrum.

    In the KdV case ``a`` holds 1/T and ``b`` holds R1/T; for a real
    potential ``a_bar`` and ``b_bar`` are their complex conjugates
    (the values 1/T(-λ), R1(-λ)/T(-λ)).
    """

    lambda_grid: np.ndarray
    a: np.ndarray
    b: np.ndarray
    a_bar: np.ndarray
    b_bar: np.ndarray
    bound_states: tuple = ()
    t: float = 0.0
    dispersion: DispersionSpec = field(default_factory=lambda: DispersionSpec.preset("nls2"))
    case_tag: CaseTag = CaseTag.NLS

    def __post_init__(self):
        grid = _frozen(self.lambda_grid, float)
        if grid.ndim != 1 or (len(grid) > 1 and np.any(np.diff(grid) <= 0)):
            raise ValidationError("lambda_grid must be strictly increasing")
        object.__setattr__(self, "lambda_grid", grid)
        for name in ("a", "b", "a_bar", "b_bar"):
            arr = _frozen(getattr(self, name))
            if arr.shape != grid.shape:
                raise ValidationError(f"{name} must share lambda_grid's length")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "bound_states", tuple(self.bound_states))
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "case_tag", CaseTag(self.case_tag))

    @property
    def upper_states(self) -> list[BoundState]:
        return [s for s in self.bound_states if s.half_plane is HalfPlane.UPPER]

    @property
    def lower_states(self) -> list[BoundState]:
        return [s for s in self.bound_states if s.half_plane is HalfPlane.LOWER]

    def reflection(self) -> np.ndarray:
        """b/a on the grid (R1 in the KdV case)."""
        return self.b / self.a

    def unitarity_defect(self) -> np.ndarray:
        """|a|²+|b|²-1 (NLS focusing) or |T|²+|R1|²-1 (KdV) on the grid."""
        if self.case_tag is CaseTag.KDV:
            T = 1.0 / self.a
            return np.abs(T) ** 2 + np.abs(self.b * T) ** 2 - 1.0
        return np.abs(self.a) ** 2 + np.abs(self.b) ** 2 - 1.0

    def with_(self, **kw) -> "ScatteringData":
        return replace(self, **kw)

    def __eq__(self, other):
        if not isinstance(other, ScatteringData):
            return NotImplemented
        return (
            all(np.array_equal(getattr(self, n), getattr(other, n))
                for n in ("lambda_grid", "a", "b", "a_bar", "b_bar"))
            and self.bound_states == other.bound_states
            and self.t == other.t
            and self.dispersion == other.dispersion
            and self.case_tag == other.case_tag
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "lambda_grid": [float(v) for v in self.lambda_grid],
            "a": [_cplx(v) for v in self.a],
            "b": [_cplx(v) for v in self.b],
            "a_bar": [_cplx(v) for v in self.a_bar],
            "b_bar": [_cplx(v) for v in self.b_bar],
            "bound_states": [s.to_dict() for s in self.bound_states],
            "t": self.t,
            "dispersion": self.dispersion.to_dict(),
            "case_tag": self.case_tag.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScatteringData":
        def arr(key):
            return np.array([_uncplx(v) for v in d[key]], dtype=complex)

        return cls(
            np.array(d["lambda_grid"], dtype=float),
            arr("a"), arr("b"), arr("a_bar"), arr("b_bar"),
            tuple(BoundState.from_dict(s) for s in d["bound_states"]),
            d["t"],
            DispersionSpec.from_dict(d["dispersion"]),
            d["case_tag"],
        )

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ScatteringData":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Certifier results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayEnvelope:
    """Fitted bound |f(x)| <= amplitude * exp(-rate * |x|**(1 + exponent_excess))."""

    amplitude: float
    rate: float
    exponent_excess: float
    side: Side = Side.RIGHT
    residual: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))
        for name in ("amplitude", "rate", "exponent_excess"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be finite and positive, got {v!r}")
        if not self.residual >= 0:
            raise ValidationError("residual must be >= 0")

    def __call__(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return self.amplitude * np.exp(-self.rate * x ** (1.0 + self.exponent_excess))

    def to_dict(self) -> dict:
        return {
            "amplitude": float(self.amplitude),
            "rate": float(self.rate),
            "exponent_excess": _number_out(self.exponent_excess),
            "side": self.side.value,
            "residual": float(self.residual),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecayEnvelope":
        return cls(d["amplitude"], d["rate"], _number_in(d["exponent_excess"]),
                   d["side"], d["residual"])


def _number_out(v):
    return str(v) if isinstance(v, Fraction) else float(v)


def _number_in(v):
    return Fraction(v) if isinstance(v, str) else v


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of checking the two-time decay hypotheses against A0.

    ``rho_window`` is the open interval (lo, hi) held as exact fractions;
    ``None`` when the window could not be formed (non-polynomial A0).
    Indicator values of ``-inf`` mark b ≡ 0 along the ray.
    """

    rho_window: tuple | None
    window_nonempty: bool
    indicator_samples: tuple = ()
    verdict: Verdict = Verdict.INCONCLUSIVE
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "verdict", Verdict(self.verdict))
        if self.rho_window is not None:
            lo, hi = self.rho_window
            object.__setattr__(self, "rho_window", (_as_fraction(lo), _as_fraction(hi)))
            if self.window_nonempty != (self.rho_window[0] < self.rho_window[1]):
                raise ValidationError("window_nonempty disagrees with rho_window")
        samples = tuple((float(a), float(h)) for a, h in self.indicator_samples)
        for a, _ in samples:
            if not 0.0 <= a <= math.pi:
                raise ValidationError("indicator angles must lie in [0, pi]")
        object.__setattr__(self, "indicator_samples", samples)

    def to_dict(self) -> dict:
        return {
            "rho_window": None if self.rho_window is None
            else [_fraction_str(v) for v in self.rho_window],
            "window_nonempty": self.window_nonempty,
            "indicator_samples": [[a, _float_str(h)] for a, h in self.indicator_samples],
            "verdict": self.verdict.value,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CertificateReport":
        win = d["rho_window"]
        return cls(
            None if win is None else (_as_fraction(win[0]), _as_fraction(win[1])),
            d["window_nonempty"],
            tuple((a, _float_in(h)) for a, h in d["indicator_samples"]),
            d["verdict"],
            d["notes"],
        )

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CertificateReport":
        return cls.from_dict(json.loads(text))


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(v)


def _fraction_str(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)


def _float_str(h: float):
    # Strict JSON has no infinities; the -inf marker travels as a string.
    if math.isinf(h):
        return "-inf" if h < 0 else "inf"
    return h


def _float_in(h) -> float:
    return float(h)


def dumps(obj) -> str:
    """Deterministic JSON: fixed key order, shortest round-trip float repr."""
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def complex_array(values: Iterable) -> np.ndarray:
    return np.fromiter((complex(v) for v in values), dtype=complex)


def uniform_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


def symmetric_gap_grid(half_width: float, n: int) -> np.ndarray:
    """n points symmetric about 0 with spacing 2*half_width/n and no node at 0."""
    if n % 2:
        raise ValidationError("symmetric gap grid needs an even number of points")
    h = 2.0 * half_width / n
    return (np.arange(n) - n / 2 + 0.5) * h


def sequence_to_array(seq: Sequence, dtype=complex) -> np.ndarray:
    return np.asarray(seq, dtype=dtype)
