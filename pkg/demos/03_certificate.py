"""Decay envelopes, the admissible rho window and the indicator proxy.

A Gaussian decays faster than any exponential (delta = 1); a soliton only
exponentially, so no super-exponential envelope fits it.

Run: python3 demos/03_certificate.py
"""

import math

import numpy as np

from akns_ist import DispersionSpec, SampledPotential
from akns_ist import certifier as ce
from akns_ist import solitons as so

x = np.linspace(-15.0, 15.0, 3001)
g = SampledPotential.focusing(x, np.exp(-x ** 2))
env = ce.fit_envelope(g)
print(f"Gaussian: delta = {env.exponent_excess:.4f}, residual {env.residual:.3f}")
for preset in ("nls2", "kdv3", "transport1"):
    rep = ce.rho_window(env, env, DispersionSpec.preset(preset))
    lo, hi = rep.rho_window
    print(f"  {preset:10s} window ({float(lo):.4f}, {float(hi):g}), "
          f"nonempty: {rep.window_nonempty}")

up, lo = so.sech_soliton(0.5)
s = so.soliton_potential([up], [lo], x_grid=np.linspace(-30, 30, 3001))
print(f"soliton: best residual at delta = 0.5 is {ce.envelope_residual(s, 'q', 'right', 0.5):.3f}")

z = SampledPotential.focusing(x, np.zeros_like(x))
print("zero potential indicator:",
      [s.h for s in ce.indicator_estimate(z, 2.5, [math.pi / 4, math.pi / 2])])
print("full certificate for the zero potential:",
      ce.certify(z, z.with_time(1.0)).verdict.value)
