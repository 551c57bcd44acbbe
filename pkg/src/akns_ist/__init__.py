"""Numerical inverse scattering for the AKNS system and its KdV reduction."""

from .errors import *  # noqa: F401,F403
from .model import (BoundState, CaseTag, CertificateReport, DecayEnvelope,  # noqa: F401
                    DispersionSpec, HalfPlane, SampledPotential, ScatteringData,
                    Side, Verdict, validate)

__version__ = "0.1.0"
