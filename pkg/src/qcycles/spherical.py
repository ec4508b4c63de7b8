"""Large-N O(N) chain with long-range couplings ``J_r ~ r**-alpha``.

Every momentum mode is an Ermakov oscillator with

    omega_q**2 = E_q + mu_eff,   E_q = J_max - J(q),
    mu_eff     = mu(t) + (g/6) sum_q xi_q**2 / L,   mu(t) = mu_c + drive(t)

in the ``1/(4 xi**3)`` width convention used throughout the package (a width
``xi_D`` normalised to a ``1/xi**3`` barrier is ``sqrt(2) xi``; the fluctuation
sum above is written for ``xi``).  ``E_q`` vanishes at ``q = 0``, so the zero
mode is the one that becomes gapless at the critical point.

The critical mass ``mu_c`` is fixed by ``mu_eff = 0`` with the nonzero modes
in equilibrium.  The zero mode is left out of that sum: its equilibrium width
``1/(2 omega_0)`` diverges at ``mu_eff = 0``, and its actual contribution
``(g/6) xi_0**2 / L`` is finite at all times and vanishes as ``1/L``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _rk
from .ermakov import DEFAULT_TOL, MAX_STEPS, IntegrationError
from .observables import Plateau, window_average
from .protocols import DriveSpec, omega_dot, omega_squared

L_DEFAULT = 256
L_MAX = 4096


class SolverError(RuntimeError):
    pass


class SymmetricPhaseViolation(RuntimeError):
    """``mu_eff`` went negative: the run left the symmetric phase."""


def build_dispersion(L: int, alpha: float, coupling: float = 1.0) -> np.ndarray:
    """``J(q) = N_K**-1 sum_{r=1}^{L/2-1} coupling r**-alpha cos(q r)`` on ``q = 2 pi k / L``.

    ``N_K = sum_r r**-alpha`` (Kac normalisation) for ``alpha <= 1``, else 1.
    """
    L = int(L)
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    r = np.arange(1, L // 2)
    jr = coupling * r ** (-float(alpha))
    if alpha <= 1 and r.size:
        jr = jr / np.sum(r ** (-float(alpha)))
    q = 2.0 * np.pi * np.arange(L) / L
    return np.cos(np.outer(q, r)) @ jr


def mode_energies(J: np.ndarray) -> np.ndarray:
    """``J_max - J(q)``, zero at the maximum (``q = 0`` for ferromagnetic couplings)."""
    J = np.asarray(J, dtype=float)
    e = J.max() - J
    e[np.argmax(J)] = 0.0
    return e


def solve_mu_c(energies: np.ndarray, g: float, tol: float = 1e-10, max_iter: int = 200, damping: float = 0.5) -> float:
    """Critical bare mass: ``mu_c + (g/6) sum_{q != 0} 1/(2 omega_q L) = 0`` at ``mu_eff = 0``.

    Damped fixed-point iteration; the map is a constant here (the widths
    are evaluated at ``mu_eff = 0``), so it converges geometrically.
    """
    if g < 0:
        raise ValueError(f"g must be >= 0, got {g!r}")
    e = np.asarray(energies, dtype=float)
    L = e.size
    nz = e > 0
    target = -g / 6.0 * np.sum(0.5 / np.sqrt(e[nz])) / L
    mu_c = 0.0
    for _ in range(max_iter):
        new = (1.0 - damping) * mu_c + damping * target
        # |new - target| = (1 - damping)/damping * |new - mu_c|
        if abs(new - mu_c) * (1.0 - damping) / damping <= tol:
            return float(new)
        mu_c = new
    raise SolverError(f"mu_c iteration did not converge in {max_iter} steps")


def equilibrium_mass(mu_bare: float, energies: np.ndarray, g: float) -> float:
    """Self-consistent ``mu_eff > 0`` with every mode in its ground state."""
    e = np.asarray(energies, dtype=float)
    L = e.size

    def f(m):
        return mu_bare + g / 6.0 * np.sum(0.5 / np.sqrt(e + m)) / L - m

    lo = 1e-300
    if f(lo) <= 0:
        raise SymmetricPhaseViolation(f"no symmetric equilibrium at bare mass {mu_bare!r}")
    hi = max(1.0, 2.0 * abs(mu_bare))
    while f(hi) > 0:
        hi *= 2.0
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


@dataclass
class SphericalSystem:
    L: int
    alpha: float
    g: float
    drive: DriveSpec            # mu(t) - mu_c
    coupling: float = 1.0
    dispersion: np.ndarray = field(init=False)
    energies: np.ndarray = field(init=False)
    mu_c: float = field(init=False)

    def __post_init__(self):
        if not (2 <= self.L <= L_MAX):
            raise ValueError(f"L must lie in [2, {L_MAX}], got {self.L}")
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g!r}")
        if self.drive.offset:
            raise ValueError("the mass drive carries no offset; mu_c plays that role")
        self.dispersion = build_dispersion(self.L, self.alpha, self.coupling)
        self.energies = mode_energies(self.dispersion)
        self.mu_c = solve_mu_c(self.energies, self.g)

    def mu(self, t):
        return self.mu_c + omega_squared(self.drive, t)

    def params(self) -> np.ndarray:
        return np.concatenate((self.drive.as_params(), [self.mu_c, self.g]))

    def initial_state(self, t_start: float, order: int = 1) -> tuple[np.ndarray, np.ndarray, float]:
        """Ground state of every mode at ``t_start``: ``(xi, xi_dot, mu_eff)``.

        ``order=1`` adds the first adiabatic correction with the
        self-consistent rate ``mu_eff_dot = mu_dot / (1 + (g/6) sum 1/(4 omega_q**3) / L)``.
        """
        m = equilibrium_mass(self.mu(t_start), self.energies, self.g)
        w = np.sqrt(self.energies + m)
        xi = (2.0 * w) ** -0.5
        xi_dot = np.zeros(self.L)
        if order == 1:
            mu_dot = 2.0 * float(omega_squared(self.drive, t_start)) ** 0.5 * float(omega_dot(self.drive, t_start))
            m_dot = mu_dot / (1.0 + self.g / 6.0 * np.sum(0.25 / w ** 3) / self.L)
            w_dot = m_dot / (2.0 * w)
            xi_dot = -w_dot * xi / (2.0 * w)
        elif order != 0:
            raise ValueError(f"order must be 0 or 1, got {order!r}")
        return xi, xi_dot, m


@dataclass
class SphericalRun:
    system: SphericalSystem
    t: np.ndarray
    xi: np.ndarray          # (n_t, L)
    xi_dot: np.ndarray
    mu_eff: np.ndarray
    n_steps: int = 0

    def omega(self) -> np.ndarray:
        """Mode frequencies, ``(n_t, L)``."""
        return np.sqrt(np.maximum(self.system.energies[None, :] + self.mu_eff[:, None], 0.0))

    def n_exc(self) -> np.ndarray:
        w = self.omega()
        x2 = self.xi ** 2
        g = self.xi_dot / self.xi
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(w > 0, x2 / (2.0 * w) * ((0.5 / x2 - w) ** 2 + g * g), np.inf)

    def fidelity(self) -> np.ndarray:
        w = self.omega()
        x2 = self.xi ** 2
        return np.sqrt(2.0 * w) / (self.xi * np.hypot(0.5 / x2 + w, self.xi_dot / self.xi))

    def nonzero_mode_deviation(self) -> np.ndarray:
        """``(g/6) sum_{q != 0} (xi_q**2 - 1/(2 omega_q)) / L``: the part of
        ``mu_eff`` due to nonzero modes being out of their instantaneous
        ground state."""
        e = self.system.energies
        nz = e > 0
        w = self.omega()[:, nz]
        return self.system.g / 6.0 * np.sum(self.xi[:, nz] ** 2 - 0.5 / w, axis=1) / self.system.L

    def self_consistency_residual(self) -> np.ndarray:
        s = self.system
        return self.mu_eff - s.mu(self.t) - s.g / 6.0 * np.sum(self.xi ** 2, axis=1) / s.L

    def zero_mode_plateau(self, quantity: str = "n_exc", window: float = 0.25, per_period: int = 4) -> Plateau:
        k = int(np.argmin(self.system.energies))
        y = self.n_exc()[:, k] if quantity == "n_exc" else self.fidelity()[:, k]
        m = self.t >= 0
        return window_average(self.t[m], y[m], self.omega()[m, k], window, per_period)


def evolve(system: SphericalSystem, t_start: float, t_end: float, tol: float = DEFAULT_TOL,
           samples=None, n_samples: int = 1001, init_order: int = 1, max_steps: int = MAX_STEPS) -> SphericalRun:
    """Co-integrate all modes; ``mu_eff`` is recomputed inside every stage.

    Sampled at ``t_start``, the requested times, ``t = 0`` (always a step
    boundary) and ``t_end``.
    """
    if not t_start < t_end:
        raise ValueError("need t_start < t_end")
    xi0, xd0, _ = system.initial_state(t_start, init_order)
    if samples is None:
        samples = np.linspace(t_start, t_end, n_samples)
    samples = np.asarray(samples, dtype=float)
    pts = np.append(samples[(samples > t_start) & (samples <= t_end)], t_end)
    if t_start < 0.0 < t_end:
        pts = np.append(pts, 0.0)
    stops = np.unique(pts)
    y0 = np.concatenate((xi0, xd0))
    out = np.empty((stops.size, y0.size))
    w_max = math.sqrt(system.energies.max() + system.mu(t_start) + 1.0)
    status, _, t_last, _, n_acc, _, _ = _rk.dop853_run(
        _rk.MODEL_SPHERICAL, system.params(), system.energies, float(t_start), y0, stops,
        float(tol), 1e-3 / w_max, int(max_steps), out, True,
    )
    if status != _rk.STATUS_OK:
        raise IntegrationError(f"spherical evolution failed at t={t_last!r}")
    t = np.concatenate(([t_start], stops))
    y = np.vstack((y0, out))
    L = system.L
    xi, xd = y[:, :L], y[:, L:]
    mu_eff = system.mu(t) + system.g / 6.0 * np.sum(xi ** 2, axis=1) / L
    if np.any(mu_eff < -tol):
        i = int(np.argmax(mu_eff < -tol))
        raise SymmetricPhaseViolation(f"mu_eff = {mu_eff[i]:.3e} < 0 at t = {t[i]:.6g}")
    return SphericalRun(system, t, xi, xd, mu_eff, int(n_acc))
