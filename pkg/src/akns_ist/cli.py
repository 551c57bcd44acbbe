"""Command-line front end.

Every subcommand reads and writes the formats of :mod:`akns_ist.model`:
potentials as CSV, scattering data and reports as JSON.  Exit status is 0
on success, 2 for invalid input and 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import _threads
from .errors import ISTError, ValidationError
from .model import (BoundState, CaseTag, DispersionSpec, SampledPotential,
                    ScatteringData)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    """``a:b:n`` → n equally spaced points from a to b inclusive."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise ValidationError(f"grid must look like a:b:n, got {text!r}") from None
    if n < 2 or not b > a:
        raise ValidationError("grid needs b > a and n >= 2")
    return np.linspace(a, b, n)


def parse_box(text: str):
    try:
        x0, x1, y0, y1 = map(float, text.split(":"))
    except ValueError:
        raise ValidationError(f"box must look like x0:x1:y0:y1, got {text!r}") from None
    return ((x0, x1), (y0, y1))


def load_dispersion(value) -> DispersionSpec | None:
    """Preset name, a JSON file holding a DispersionSpec, or inline JSON."""
    if value is None:
        return None
    if isinstance(value, dict):
        return DispersionSpec.from_dict(value)
    text = str(value).strip()
    if text.startswith("{"):
        return DispersionSpec.from_dict(json.loads(text))
    path = Path(text)
    if path.suffix == ".json" or path.exists():
        return DispersionSpec.from_dict(json.loads(path.read_text()))
    return DispersionSpec.preset(text)


def _write(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise ValidationError(f"--{n.replace('_', '-')} is required")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_forward(args) -> int:
    from .marchenko import forward_any

    _need(args, "input")
    p = SampledPotential.load_csv(args.input)
    grid = parse_grid(args.grid) if args.grid else None
    box = parse_box(args.search_box) if args.search_box else None
    sd = forward_any(p, grid, search_box=box, beta_max=args.beta_max,
                     dispersion=load_dispersion(args.dispersion))
    _write(sd.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_evolve(args) -> int:
    from .evolution import evolve

    _need(args, "input", "t1")
    sd = ScatteringData.from_json(Path(args.input).read_text())
    out = evolve(sd, args.t1, dispersion=load_dispersion(args.dispersion))
    _write(out.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_inverse(args) -> int:
    from .marchenko import inverse

    _need(args, "input", "x")
    sd = ScatteringData.from_json(Path(args.input).read_text())
    p = inverse(sd, parse_grid(args.x))
    _write(p.to_csv(), args.out)
    return EXIT_OK


def soliton_from_spec(spec: dict) -> SampledPotential:
    """Build a reflectionless potential from a JSON-style spec dict.

    NLS keys: ``upper``/``lower`` lists of BoundState dicts, or ``pairs`` of
    {"eta", "x0", "phase"} focusing solitons.  KdV keys: ``states`` of
    {"beta", "c"}.  Both take ``x`` = [a, b, n], ``t`` and ``dispersion``.
    """
    from . import solitons as so

    try:
        a, b, n = spec["x"]
    except (KeyError, ValueError, TypeError):
        raise ValidationError("soliton spec needs x = [a, b, n]") from None
    x = np.linspace(float(a), float(b), int(n))
    t = float(spec.get("t", 0.0))
    disp = load_dispersion(spec.get("dispersion"))
    case = CaseTag(spec.get("case", "nls"))
    if case is CaseTag.KDV:
        states = [BoundState.upper(1j * float(s["beta"]), float(s["c"]))
                  for s in spec.get("states", [])]
        return so.kdv_reflectionless(states, x, t, disp)
    upper, lower = [], []
    for d in spec.get("pairs", []):
        u, lo = so.sech_soliton(float(d.get("eta", 0.5)), float(d.get("x0", 0.0)),
                                float(d.get("phase", 0.0)))
        upper.append(u)
        lower.append(lo)
    for d in spec.get("upper", []):
        upper.append(BoundState.from_dict({**d, "half_plane": "upper"}))
    for d in spec.get("lower", []):
        lower.append(BoundState.from_dict({**d, "half_plane": "lower"}))
    return so.soliton_potential(upper, lower, disp, x, t)


def cmd_soliton(args) -> int:
    _need(args, "input")
    spec = json.loads(Path(args.input).read_text())
    _write(soliton_from_spec(spec).to_csv(), args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    from .certifier import certify

    _need(args, "t0", "t1")
    p0 = SampledPotential.load_csv(args.t0)
    p1 = SampledPotential.load_csv(args.t1)
    rep = certify(p0, p1, load_dispersion(args.dispersion), side=args.side or "right")
    _write(rep.to_json() + "\n", args.out)
    return EXIT_OK


def _reduction(disp: DispersionSpec | None, flag: str | None) -> str:
    if flag:
        return flag
    return "mkdv" if disp is not None and disp.label == "mkdv3" else "nls"


def cmd_roundtrip(args) -> int:
    from .marchenko import roundtrip
    from .pde_oracle import evolve_to

    _need(args, "input", "t1")
    p = SampledPotential.load_csv(args.input)
    disp = load_dispersion(args.dispersion)
    grid = parse_grid(args.grid) if args.grid else None
    out = roundtrip(p, args.t1, dispersion=disp, lambda_grid=grid)
    if args.out is not None:
        _write(out.to_csv(), args.out)
    if args.t1 == p.t:
        ref, label = p, "input"
    else:
        ref, label = evolve_to(p, args.t1, reduction=_reduction(disp, None)), "oracle"
    diff = np.abs(out.q - ref.q)
    summary = {"reference": label, "max_error": float(np.max(diff)),
               "l2_error": float(np.sqrt(np.sum(diff ** 2) * p.dx))}
    sys.stdout.write(json.dumps(summary) + "\n")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .pde_oracle import step_kdv, step_nls

    _need(args, "input", "steps", "dt")
    p = SampledPotential.load_csv(args.input)
    if p.case_tag is CaseTag.KDV:
        out = step_kdv(p, args.dt, args.steps)
    else:
        out = step_nls(p, args.dt, args.steps, reduction=args.reduction or "nls")
    _write(out.to_csv(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (overrides ${_threads.ENV_VAR})")
    common.add_argument("--config", default=None,
                        help="JSON file whose keys mirror the long flags")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    ap = argparse.ArgumentParser(prog="akns-ist", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("forward", cmd_forward, "potential CSV -> scattering JSON")
    sp.add_argument("--in", dest="input")
    sp.add_argument("--grid", help="lambda grid a:b:n (default: automatic)")
    sp.add_argument("--dispersion")
    sp.add_argument("--search-box", help="bound-state box x0:x1:y0:y1 (NLS)")
    sp.add_argument("--beta-max", type=float)

    sp = add("evolve", cmd_evolve, "scattering JSON -> scattering JSON at t1")
    sp.add_argument("--in", dest="input")
    sp.add_argument("--t1", type=float)
    sp.add_argument("--dispersion")

    sp = add("inverse", cmd_inverse, "scattering JSON -> potential CSV")
    sp.add_argument("--in", dest="input")
    sp.add_argument("--x", help="output grid a:b:n")

    sp = add("soliton", cmd_soliton, "soliton spec JSON -> potential CSV")
    sp.add_argument("--in", dest="input")

    sp = add("certify", cmd_certify, "two potential CSVs -> certificate JSON")
    sp.add_argument("--t0")
    sp.add_argument("--t1")
    sp.add_argument("--dispersion")
    sp.add_argument("--side", choices=["right", "left"])

    sp = add("roundtrip", cmd_roundtrip, "forward, evolve, inverse; prints errors")
    sp.add_argument("--in", dest="input")
    sp.add_argument("--t1", type=float)
    sp.add_argument("--dispersion")
    sp.add_argument("--grid")

    sp = add("oracle", cmd_oracle, "direct PDE integration")
    sp.add_argument("--in", dest="input")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--reduction", choices=["nls", "mkdv"])
    return ap


def _apply_config(args) -> None:
    if not args.config:
        return
    cfg = json.loads(Path(args.config).read_text())
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    for key, value in cfg.items():
        dest = {"in": "input"}.get(key, key.replace("-", "_"))
        if not hasattr(args, dest) or dest in ("func", "command", "config"):
            raise ValidationError(f"unknown config key {key!r}")
        if getattr(args, dest) is None:
            setattr(args, dest, value)


# options whose values may start with '-' (negative grid ends)
_RANGE_FLAGS = ("--grid", "--x", "--search-box")


def _join_ranges(argv):
    out, it = [], iter(argv)
    for tok in it:
        if tok in _RANGE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    ap = build_parser()
    argv = _join_ranges(sys.argv[1:] if argv is None else list(argv))
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    try:
        _apply_config(args)
        for name in ("t1", "dt", "beta_max"):
            v = getattr(args, name, None)
            if isinstance(v, str) and args.command != "certify":
                setattr(args, name, float(v))
        _threads.set_threads(args.threads)
        return args.func(args)
    except ValidationError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ISTError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError, KeyError, TypeError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID
    finally:
        _threads.set_threads(None)


if __name__ == "__main__":
    sys.exit(main())
