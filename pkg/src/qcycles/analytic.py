"""Closed-form solution of the power-law problem.

On each side of the crossing the width is built from the two real solutions
``x1 = Ai_p(-|t|)``, ``x2 = Bi_p(-|t|)`` of the classical oscillator:

    xi**2 = (a x1 + b_re x2)**2 + b_im**2 x2**2

Before the crossing the coefficients select the adiabatic ground state at
``t -> -inf``; after it they are fixed by continuity of ``xi`` and ``xi_dot``
at ``t = 0``.  Everything here is for unit rate; :func:`xi_glued` maps to any
``delta`` through the rescaling of :mod:`qcycles.protocols`.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .protocols import DriveSpec, rescale_to_unit_rate
from .specfun import DomainError, airy_gen, airy_wronskian, gamma_fn

DEGENERATE_EPS = 1e-9


class Branch(enum.Enum):
    BEFORE_CROSSING = "before"
    AFTER_CROSSING = "after"


class NearDegenerateWarning(RuntimeWarning):
    pass


def p_of(znu: float) -> float:
    if not znu > 0:
        raise DomainError(f"znu must be positive, got {znu!r}")
    return 1.0 / (2.0 + 2.0 * znu)


def _check_p(p):
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 1/2], got {p!r}")
    if p < DEGENERATE_EPS or 0.5 - p < DEGENERATE_EPS:
        warnings.warn(f"p={p!r} is within {DEGENERATE_EPS} of a degenerate end point", NearDegenerateWarning, stacklevel=3)


@dataclass(frozen=True)
class ClassicalSolutionPair:
    """Coefficients of ``w = a x1 + b x2`` with complex ``b = b_re + i b_im``."""

    p: float
    a: float
    b_re: float
    b_im: float
    branch: Branch

    def __post_init__(self):
        if self.branch is Branch.BEFORE_CROSSING and self.b_re != 0.0:
            raise ValueError("before the crossing Re(b) must vanish")

    def wronskian_condition(self) -> float:
        """``2 a b_im W[Ai_p, Bi_p]``, equal to one for a normalised pair."""
        return 2.0 * self.a * self.b_im * airy_wronskian(self.p)


def half_cycle_coeffs(p: float) -> ClassicalSolutionPair:
    _check_p(p)
    a = math.sqrt(math.pi / (2.0 * p)) / (2.0 * math.cos(0.5 * p * math.pi))
    b = math.sqrt(math.pi / 2.0) / (2.0 * math.sin(0.5 * p * math.pi))
    return ClassicalSolutionPair(p, a, 0.0, b, Branch.BEFORE_CROSSING)


def full_cycle_coeffs(p: float) -> ClassicalSolutionPair:
    _check_p(p)
    a = math.sqrt(math.pi / (2.0 * p)) / (2.0 * math.sin(0.5 * p * math.pi))
    b = math.sqrt(math.pi / 2.0) / (2.0 * math.cos(0.5 * p * math.pi))
    return ClassicalSolutionPair(p, a, 0.0, b, Branch.AFTER_CROSSING)


def xi_analytic(pair: ClassicalSolutionPair, t: float) -> tuple[float, float]:
    """Exact ``(xi, xi_dot)`` at unit rate on the pair's branch."""
    t = float(t)
    if pair.branch is Branch.BEFORE_CROSSING and t > 0:
        raise DomainError(f"t={t} lies after the crossing but the pair is for t <= 0")
    if pair.branch is Branch.AFTER_CROSSING and t < 0:
        raise DomainError(f"t={t} lies before the crossing but the pair is for t >= 0")
    r = airy_gen(pair.p, abs(t))
    # the Airy argument is -|t|: equal to t before the crossing, -t after
    sgn = 1.0 if pair.branch is Branch.BEFORE_CROSSING else -1.0
    dx1, dx2 = sgn * r.ai_deriv, sgn * r.bi_deriv
    u = pair.a * r.ai + pair.b_re * r.bi
    du = pair.a * dx1 + pair.b_re * dx2
    v = pair.b_im * r.bi
    dv = pair.b_im * dx2
    xi = math.hypot(u, v)
    return xi, (u * du + v * dv) / xi


def xi_glued(znu: float, t, delta: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Full-cycle width from the ground state at ``t = -inf``, any rate.

    Uses the before-crossing pair for ``t <= 0`` and the after-crossing pair
    for ``t > 0``; returns arrays ``(xi, xi_dot)`` shaped like ``t``.
    """
    sc = rescale_to_unit_rate(DriveSpec.power_law(znu, delta))
    p = p_of(znu)
    before, after = half_cycle_coeffs(p), full_cycle_coeffs(p)
    t = np.asarray(t, dtype=float)
    xi = np.empty(t.shape)
    xd = np.empty(t.shape)
    for idx, tv in np.ndenumerate(t):
        s = tv / sc.time_scale
        x, d = xi_analytic(before if s <= 0 else after, s)
        xi[idx] = sc.width_scale * x
        xd[idx] = sc.width_scale / sc.time_scale * d
    return xi, xd


def xi_at_zero(p: float) -> float:
    """``xi(0)**2 = Gamma(p) Gamma(p+1) / (2 pi p**(2p))`` at unit rate."""
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 1/2], got {p!r}")
    return gamma_fn(p) * gamma_fn(p + 1.0) / (2.0 * math.pi * p ** (2.0 * p))


def xixidot_at_zero(p: float, side: str = "-") -> float:
    """``2 xi xi_dot`` at ``t -> 0`` from either side, at unit rate.

    The width grows through the crossing (``xi_dot`` is continuous and
    positive), so both one-sided limits equal ``+cot(p pi)``.  ``side`` is
    accepted for symmetry of the interface.
    """
    if side not in ("-", "+"):
        raise ValueError(f"side must be '-' or '+', got {side!r}")
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 1/2], got {p!r}")
    if 0.5 - p < DEGENERATE_EPS:
        # cot(p pi) ~ pi (1/2 - p)
        return math.pi * (0.5 - p)
    return 1.0 / math.tan(p * math.pi)


def xi_squared_large_t(p: float, t):
    """Leading large-``t`` form of ``xi**2`` after the crossing (unit rate).

        xi**2 ~ t**(-znu) (1 + cos(p pi)**2 + 2 cos(p pi) sin(2 zeta)) / (2 sin(p pi)**2)

    with ``zeta = 2p t**(1/(2p))``; the width shrinks like ``1/sqrt(omega)``.
    """
    znu = (1.0 - 2.0 * p) / (2.0 * p)
    t = np.asarray(t, dtype=float)
    zeta = 2.0 * p * t ** (0.5 / p)
    c, s = math.cos(p * math.pi), math.sin(p * math.pi)
    return t ** (-znu) * (1.0 + c * c + 2.0 * c * np.sin(2.0 * zeta)) / (2.0 * s * s)


def asymptotic_n_exc(znu: float) -> float:
    """Plateau excitation ``cot(pi/(2+2 znu))**2``."""
    p = p_of(znu)
    if 0.5 - p < DEGENERATE_EPS:
        return (math.pi * (0.5 - p)) ** 2
    return 1.0 / math.tan(p * math.pi) ** 2


def asymptotic_fidelity(znu: float) -> float:
    """Plateau fidelity ``sin(pi/(2+2 znu))``."""
    return math.sin(p_of(znu) * math.pi)


def kzm_heat_exponent(znu: float) -> float:
    """Exponent of the half-cycle heat, ``Q ~ delta**(znu/(1+znu))``."""
    if not znu > 0:
        raise DomainError(f"znu must be positive, got {znu!r}")
    return znu / (1.0 + znu)
