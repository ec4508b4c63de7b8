"""Observables of the evolved Gaussian state.

With the effective frequency ``Omega = 1/(2 xi**2) - i xi_dot/xi``:

* excitations   ``n = (xi**2/(2w)) [(1/(2 xi**2) - w)**2 + (xi_dot/xi)**2]``
* fidelity      ``f = sqrt(2w) / (xi |Omega + w|)``, equal to ``(1+n)**-1/2``
* heat          ``Q = w n``, equal to ``<H> - w/2``
* distribution  ``P_n = f (n-1)!!/n!! r**n`` over even ``n``, ``r = |(Omega-w)/(Omega+w)|``

``fidelity`` is the ground-state probability ``|c_00|**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.special import gammaln

from .ermakov import Trajectory, WidthState
from .protocols import DriveKind, DriveSpec, freezing_time, omega

QUANTITIES = ("n_exc", "fidelity", "heat", "xi2")


class InsufficientDataError(ValueError):
    """Trajectory too short or too coarse for a plateau estimate."""


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    omega: float
    n_exc: float          # math.inf at a gapless instant
    fidelity: float
    heat: float
    phase: float
    eff_freq_re: float
    eff_freq_im: float

    @property
    def divergent(self) -> bool:
        return math.isinf(self.n_exc)


def _check_omega(w):
    if not (w >= 0 and math.isfinite(w)):
        raise ValueError(f"omega must be finite and >= 0, got {w!r}")


def n_exc(state: WidthState, w: float) -> float:
    """Mean number of excitations; ``inf`` at ``w = 0`` (use :func:`heat` there)."""
    w = float(w)
    _check_omega(w)
    if w == 0.0:
        return math.inf
    x2 = state.xi * state.xi
    g = state.xi_dot / state.xi
    return x2 / (2.0 * w) * ((0.5 / x2 - w) ** 2 + g * g)


def fidelity(state: WidthState, w: float) -> float:
    """Ground-state probability; tends to zero like ``sqrt(w)`` as ``w -> 0``."""
    w = float(w)
    _check_omega(w)
    if w == 0.0:
        return 0.0
    x2 = state.xi * state.xi
    g = state.xi_dot / state.xi
    mod = math.hypot(0.5 / x2 + w, g)
    return math.sqrt(2.0 * w) / (state.xi * mod)


def heat(state: WidthState, w: float) -> float:
    """Excess energy over the instantaneous ground state, ``<H> - w/2``.

    Evaluated from the energy form, which stays finite at ``w = 0``.
    """
    w = float(w)
    _check_omega(w)
    x2 = state.xi * state.xi
    return 0.5 * (state.xi_dot ** 2 + w * w * x2 + 0.25 / x2) - 0.5 * w


def heat_from_n(state: WidthState, w: float) -> float:
    """``w * n_exc``; the finite limit ``1/(8 xi**2) + xi_dot**2/2`` at ``w = 0``."""
    w = float(w)
    _check_omega(w)
    if w == 0.0:
        return 0.125 / state.xi ** 2 + 0.5 * state.xi_dot ** 2
    return w * n_exc(state, w)


def effective_frequency(state: WidthState) -> complex:
    return complex(0.5 / state.xi ** 2, -state.xi_dot / state.xi)


def record(state: WidthState, w: float, phase: float = 0.0) -> ObservableRecord:
    om = effective_frequency(state)
    return ObservableRecord(
        t=state.t, omega=float(w), n_exc=n_exc(state, w), fidelity=fidelity(state, w),
        heat=heat(state, w), phase=float(phase), eff_freq_re=om.real, eff_freq_im=om.imag,
    )


def records(traj: Trajectory) -> list[ObservableRecord]:
    w = traj.omega
    return [record(traj.state(i), w[i], traj.phase[i]) for i in range(len(traj))]


def series(traj: Trajectory, quantity: str) -> np.ndarray:
    """Vectorised observable along a trajectory (``n_exc`` is ``inf`` where ``w = 0``)."""
    w = traj.omega
    x2 = traj.xi ** 2
    g = traj.xi_dot / traj.xi
    if quantity == "xi2":
        return x2
    if quantity == "heat":
        return 0.5 * (traj.xi_dot ** 2 + w * w * x2 + 0.25 / x2) - 0.5 * w
    with np.errstate(divide="ignore"):
        if quantity == "n_exc":
            return np.where(w > 0, x2 / (2.0 * w) * ((0.5 / x2 - w) ** 2 + g * g), np.inf)
        if quantity == "fidelity":
            return np.sqrt(2.0 * w) / (traj.xi * np.hypot(0.5 / x2 + w, g))
    raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")


@dataclass(frozen=True)
class ExcitationDistribution:
    """Probabilities of the even levels ``0, 2, ..., n_max``.

    ``tail_bound`` bounds the missing probability above ``n_max`` and
    ``moment_tail_bound`` the missing part of ``sum n P_n``.
    """

    levels: np.ndarray
    probs: np.ndarray
    tail_bound: float
    moment_tail_bound: float

    def prob(self, n: int) -> float:
        if n < 0:
            raise ValueError("levels are non-negative")
        if n % 2:
            return 0.0
        if n > self.levels[-1]:
            raise ValueError(f"level {n} beyond n_max={self.levels[-1]}")
        return float(self.probs[n // 2])

    def mean(self) -> float:
        return float(np.dot(self.levels, self.probs))


def _ratio(state: WidthState, w: float) -> tuple[float, float]:
    """``(r**2, prefactor)`` of the level distribution."""
    om = effective_frequency(state)
    r = abs((om - w) / (om + w))
    pref = math.sqrt(2.0 * w) / (state.xi * abs(om + w))
    return r * r, pref


def excitation_distribution(state: WidthState, w: float, n_max: int | None = None, eps: float = 1e-12) -> ExcitationDistribution:
    """Even-level occupation probabilities.

    ``(n-1)!!/n!! = C(n, n/2)/2**n`` is evaluated in log space.  With
    ``n_max=None`` the cut is chosen so that the first-moment tail bound is
    below ``eps`` relative to ``n_exc``.
    """
    w = float(w)
    if not w > 0:
        raise ValueError(f"omega must be > 0, got {w!r}")
    x, pref = _ratio(state, w)
    if n_max is None:
        target = eps * n_exc(state, w)
        n_max = 2
        while _tails(x, pref, n_max // 2)[1] > target:
            n_max *= 2
    if n_max < 0 or n_max % 2:
        raise ValueError(f"n_max must be a non-negative even integer, got {n_max!r}")
    m = np.arange(n_max // 2 + 1)
    if x == 0.0:
        probs = np.where(m == 0, pref, 0.0)
    else:
        log_c = gammaln(2 * m + 1) - 2 * gammaln(m + 1) - 2 * m * math.log(2.0)
        probs = pref * np.exp(log_c + m * math.log(x))
    tail, mtail = _tails(x, pref, int(m[-1]))
    return ExcitationDistribution(2 * m, probs, tail, mtail)


def _tails(x: float, pref: float, M: int) -> tuple[float, float]:
    """Bounds on ``sum_{m>M} P_2m`` and ``sum_{m>M} 2m P_2m``.

    Successive coefficients ``C(2m,m)/4**m`` decrease, so each tail term is
    at most ``P_2M x**(m-M)``; summing the geometric series gives the bounds.
    """
    if x == 0.0:
        return 0.0, 0.0
    if x >= 1.0:
        return math.inf, math.inf
    log_c = math.lgamma(2 * M + 1) - 2 * math.lgamma(M + 1) - 2 * M * math.log(2.0)
    p_M = pref * math.exp(log_c + M * math.log(x))
    q = x / (1.0 - x)
    return p_M * q, p_M * 2.0 * (M * q + q / (1.0 - x))


def phase_increment(traj: Trajectory, t_start: float | None = None, t_end: float | None = None) -> float:
    """Accumulated ``int dt/(2 xi**2)`` between two sample times (default: whole run)."""
    i = 0 if t_start is None else int(np.flatnonzero(traj.t == t_start)[0])
    j = len(traj) - 1 if t_end is None else int(np.flatnonzero(traj.t == t_end)[0])
    return float(traj.phase[j] - traj.phase[i])


@dataclass(frozen=True)
class Plateau:
    mean: float
    amplitude: float
    t_from: float
    t_to: float
    n_samples: int


def plateau(traj: Trajectory, quantity: str = "n_exc", window: float = 0.25, per_period: int = 4) -> Plateau:
    """Time average and half peak-to-peak spread over the trailing window.

    The average is a trapezoid integral divided by the window length.  The
    observables oscillate at ``2 omega``; the samples must resolve that
    (at least ``per_period`` samples per period), otherwise the estimate is
    refused.  Use :func:`oscillation_grid` to build a suitable sample grid.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")
    d = traj.drive
    if d.kind is DriveKind.POWER_LAW and not d.offset:
        t_cut = traj.t[-1] - window * (traj.t[-1] - traj.t[0])
        if t_cut <= freezing_time(d):
            raise InsufficientDataError("plateau window starts before the freezing time")
    return window_average(traj.t, series(traj, quantity), traj.omega, window, per_period)


def window_average(t, y, w, window: float = 0.25, per_period: int = 4) -> Plateau:
    """Trailing-window time average of samples ``y(t)`` oscillating at ``2 w(t)``."""
    if not (0.0 < window <= 0.5):
        raise ValueError(f"window must lie in (0, 1/2], got {window!r}")
    t = np.asarray(t, dtype=float)
    t_cut = t[-1] - window * (t[-1] - t[0])
    m = t >= t_cut
    if m.sum() < 2 * per_period:
        raise InsufficientDataError(f"only {int(m.sum())} samples in the plateau window")
    tw = t[m]
    w = np.asarray(w, dtype=float)[m]
    # oscillation period pi/w; require dt <= period/per_period
    dt = np.diff(tw)
    if np.any(dt * np.maximum(w[1:], w[:-1]) > math.pi / per_period):
        raise InsufficientDataError("samples do not resolve the oscillation in the plateau window")
    if (tw[-1] - tw[0]) * w.min() < 2.0 * math.pi:
        raise InsufficientDataError("plateau window spans less than two oscillations")
    y = np.asarray(y, dtype=float)[m]
    mean = trapezoid(y, tw) / (tw[-1] - tw[0])
    return Plateau(float(mean), 0.5 * float(y.max() - y.min()), float(tw[0]), float(tw[-1]), int(m.sum()))


def oscillation_grid(drive, t_a: float, t_b: float, per_period: int = 8, n_fine: int = 20001) -> np.ndarray:
    """Times on ``[t_a, t_b]`` spaced uniformly in the adiabatic phase ``int w dt``.

    Gives ``per_period`` samples per period of the ``2 w`` oscillation of the
    observables (and at least two samples overall).  ``drive`` is a
    :class:`DriveSpec` or any callable ``t -> omega(t)``.
    """
    if not t_a < t_b:
        raise ValueError("need t_a < t_b")
    tf = np.linspace(t_a, t_b, n_fine)
    w = drive(tf) if callable(drive) else omega(drive, tf)
    theta = cumulative_trapezoid(w, tf, initial=0.0)
    n = max(2, int(math.ceil(theta[-1] * per_period / math.pi)) + 1)
    grid = np.interp(np.linspace(0.0, theta[-1], n), theta, tf)
    grid[0], grid[-1] = t_a, t_b
    return grid
