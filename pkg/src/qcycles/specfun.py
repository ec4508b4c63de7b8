"""Gamma, fractional-order Bessel J and the generalised Airy functions.

Bessel J of order ``-1 < nu < 1`` is evaluated in three regimes:

* ``x <= 2``: ascending power series (no cancellation problem there),
* ``2 < x < X_SWITCH``: Miller backward recurrence normalised with the
  Neumann sum ``(x/2)**nu = sum_k (nu+2k) Gamma(nu+k)/k! J_{nu+2k}(x)``,
* ``x >= X_SWITCH``: Hankel asymptotic expansion truncated at its smallest term.

Every routine returns the pair ``(J_nu, J_{nu+1})`` internally because the
derivatives of the generalised Airy functions need the next order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

X_SWITCH = 15.0
SERIES_MAX = 2.0


class DomainError(ValueError):
    """Argument outside the supported domain of a special function."""


def gamma_fn(x: float) -> float:
    """Gamma function for positive finite arguments."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma_fn requires a finite x > 0, got {x!r}")
    return math.gamma(x)


def _series_scaled(nu: float, x: float) -> float:
    """``J_nu(x) / (x/2)**nu`` from the ascending series (small x only)."""
    q = -0.25 * x * x
    term = 1.0 / math.gamma(nu + 1.0)
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (nu + k))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            return total


def _hankel(nu: float, x: float) -> float:
    mu = 4.0 * nu * nu
    p_sum = 1.0
    q_sum = 0.0
    a = 1.0
    prev = math.inf
    k = 0
    while True:
        k += 1
        a *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(a) >= prev or abs(a) < 1e-18:
            break
        prev = abs(a)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p_sum += sign * a
        else:
            q_sum += sign * a
    # angle addition keeps the large-x phase identical across orders
    phi = (0.5 * nu + 0.25) * math.pi
    cx, sx = math.cos(x), math.sin(x)
    cos_chi = cx * math.cos(phi) + sx * math.sin(phi)
    sin_chi = sx * math.cos(phi) - cx * math.sin(phi)
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * cos_chi - q_sum * sin_chi)


def _miller(nu: float, x: float) -> tuple[float, float]:
    n_top = int(x + 30 + 6 * x ** (1.0 / 3.0))
    f_next = 0.0          # ~ J_{nu+n+1}
    f = 1e-300            # ~ J_{nu+n}
    vals = [0.0] * (n_top + 2)
    vals[n_top + 1] = f_next
    vals[n_top] = f
    for k in range(n_top, 0, -1):
        f_prev = 2.0 * (nu + k) / x * f - f_next
        f_next, f = f, f_prev
        vals[k - 1] = f
        if abs(f) > 1e250:
            vals = [v * 1e-250 for v in vals]
            f *= 1e-250
            f_next *= 1e-250
    # Neumann normalisation, coefficients c_k = (nu+2k) Gamma(nu+k)/k!
    norm = math.gamma(nu + 1.0) * vals[0]
    g = math.gamma(nu + 1.0)  # Gamma(nu+k)/k! at k=1
    for k in range(1, n_top // 2 + 1):
        if k > 1:
            g *= (nu + k - 1) / k
        norm += (nu + 2 * k) * g * vals[2 * k]
    scale = (0.5 * x) ** nu / norm
    return vals[0] * scale, vals[1] * scale


def _bessel_pair(nu: float, x: float) -> tuple[float, float]:
    """``(J_nu(x), J_{nu+1}(x))`` for ``-1 < nu < 1`` and ``x > 0``."""
    if x <= SERIES_MAX:
        h = 0.5 * x
        return (h ** nu * _series_scaled(nu, x), h ** (nu + 1.0) * _series_scaled(nu + 1.0, x))
    if x < X_SWITCH:
        return _miller(nu, x)
    return _hankel(nu, x), _hankel(nu + 1.0, x)


def _scaled_pair(nu: float, x: float) -> tuple[float, float]:
    """``(J_nu/(x/2)**nu, J_{nu+1}/(x/2)**(nu+1))``, regular at ``x = 0``."""
    if x <= SERIES_MAX:
        return _series_scaled(nu, x), _series_scaled(nu + 1.0, x)
    j0, j1 = _bessel_pair(nu, x)
    h = 0.5 * x
    return j0 / h ** nu, j1 / h ** (nu + 1.0)


def bessel_j(nu: float, x: float) -> float:
    """Bessel function of the first kind J_nu(x) for ``0 < |nu| < 1``.

    Negative orders are allowed so that the pair ``J_{+p}``, ``J_{-p}`` needed
    by the generalised Airy functions is reachable; they diverge at ``x = 0``
    and raise there.
    """
    nu = float(nu)
    x = float(x)
    if not (-1.0 < nu < 1.0) or nu == 0.0:
        raise DomainError(f"order {nu!r} outside the supported band 0 < |nu| < 1")
    if not math.isfinite(x) or x < 0.0:
        raise DomainError(f"bessel_j requires a finite x >= 0, got {x!r}")
    if x == 0.0:
        if nu > 0:
            return 0.0
        raise DomainError("J_nu(0) diverges for negative order")
    return _bessel_pair(nu, x)[0]


def bessel_j_asymptotic(nu: float, x: float) -> float:
    """Hankel expansion of J_nu(x), exposed for seam checks."""
    return _hankel(float(nu), float(x))


@dataclass(frozen=True)
class AiryPair:
    """Values of Ai_p(-t), Bi_p(-t) and their derivatives.

    The derivatives are taken with respect to the function argument ``z = -t``,
    which is the physical time on the branch before the crossing.
    """

    ai: float
    bi: float
    ai_deriv: float
    bi_deriv: float


def airy_gen(p: float, t: float) -> AiryPair:
    """Generalised Airy functions ``Ai_p(-t)``, ``Bi_p(-t)`` for ``t >= 0``.

    With ``zeta = 2p t**(1/(2p))``::

        Ai_p(-t) = p sqrt(t) (J_{-p}(zeta) + J_p(zeta))
        Bi_p(-t) = sqrt(p t) (J_{-p}(zeta) - J_p(zeta))

    Both solve ``x'' + t**(2 znu) x = 0`` with ``znu = (1 - 2p)/(2p)``.  At
    ``p = 1/3`` they are the ordinary Airy functions.  The computation goes
    through ``J_nu/(zeta/2)**nu`` so ``t = 0`` needs no special casing.
    """
    p = float(p)
    t = float(t)
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 1/2], got {p!r}")
    if not math.isfinite(t) or t < 0.0:
        raise DomainError(f"airy_gen requires a finite t >= 0, got {t!r}")
    # t**(1/p) appears in the derivatives
    if t > 0.0 and math.log(t) / p > 700.0:
        raise DomainError(f"zeta overflows for p={p!r}, t={t!r}")
    zeta = 2.0 * p * t ** (0.5 / p)
    sm, sm1 = _scaled_pair(-p, zeta)   # J_{-p}, J_{1-p}
    sp, sp1 = _scaled_pair(p, zeta)    # J_{p},  J_{1+p}
    # u = sqrt(t) J_{-p}(zeta), v = sqrt(t) J_p(zeta) and their t-derivatives
    u = p ** (-p) * sm
    v = p ** p * t * sp
    du = -(p ** (1.0 - p)) * t ** (1.0 / p - 1.0) * sm1
    dv = p ** p * (sp - p * t ** (1.0 / p) * sp1)
    rp = math.sqrt(p)
    ai = p * (u + v)
    bi = rp * (u - v)
    # d/dz = -d/dt
    return AiryPair(ai, bi, -p * (du + dv), -rp * (du - dv))


def airy_wronskian(p: float) -> float:
    """Constant Wronskian ``Ai_p Bi_p' - Ai_p' Bi_p = (2/pi) sqrt(p) sin(p pi)``."""
    return 2.0 / math.pi * math.sqrt(p) * math.sin(p * math.pi)


def airy_gen_array(p: float, t) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised :func:`airy_gen` returning ``(ai, bi, ai', bi')`` arrays."""
    t = np.asarray(t, dtype=float)
    out = np.empty((4,) + t.shape)
    for idx, tv in np.ndenumerate(t):
        r = airy_gen(p, tv)
        out[(slice(None),) + idx] = (r.ai, r.bi, r.ai_deriv, r.bi_deriv)
    return out[0], out[1], out[2], out[3]
