"""Driven harmonic modes across a gapless point: exact Ermakov evolution,
closed-form references, scaling scans and a self-consistent O(N) chain."""
from .analytic import asymptotic_fidelity, asymptotic_n_exc, kzm_heat_exponent, xi_glued
from .ermakov import IntegrationError, Trajectory, WidthState, adiabatic_init, integrate
from .observables import fidelity, heat, n_exc, plateau
from .protocols import DriveKind, DriveSpec, ProtocolError, rescale_to_unit_rate
from .specfun import DomainError, airy_gen, bessel_j

__version__ = "0.1.0"
