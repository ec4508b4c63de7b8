"""Numerical integration of the Ermakov-Milne equation.

    xi'' + omega(t)**2 xi = 1 / (4 xi**3)

and of the associated classical oscillator ``x'' + omega(t)**2 x = 0``.
A step boundary is always placed at ``t = 0`` where ``omega**2`` has a kink;
``(xi, xi_dot)`` are carried across it unchanged.

Two equivalent formulations are offered.  ``method="ermakov"`` steps the
nonlinear equation directly.  ``method="linear"`` steps the complex classical
solution ``x = xi exp(i lambda)`` of ``x'' + omega**2 x = 0`` and recovers
``xi = |x|``, ``xi_dot = Re(conj(x) x')/|x|`` and ``lambda = arg x``.  For
strongly excited states the width has sharp minima that force the direct
stepper to resolve a time scale ``~ xi_min**2``, far below ``1/omega``; the
linear form only has to resolve ``1/omega`` and is much cheaper there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rk
from .protocols import DriveKind, DriveSpec, freezing_time, omega, omega_dot, omega_squared

DEFAULT_TOL = 1e-10
DEFAULT_SAMPLES = 1001
MAX_STEPS = 2_000_000_000


class DegenerateStartError(ValueError):
    """Adiabatic initialisation requested at a gapless instant."""


class IntegrationError(RuntimeError):
    """Step-size underflow or step budget exhausted.

    ``last_state`` holds the last accepted :class:`WidthState` (or raw state
    vector for the classical pair).
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


@dataclass(frozen=True)
class WidthState:
    t: float
    xi: float
    xi_dot: float

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError(f"width must be positive, got {self.xi!r}")


@dataclass
class Trajectory:
    """Sampled solution; ``phase`` is the accumulated ``int dt / (2 xi**2)``."""

    t: np.ndarray
    xi: np.ndarray
    xi_dot: np.ndarray
    phase: np.ndarray
    drive: DriveSpec
    n_steps: int = 0
    n_rejected: int = 0

    def __len__(self):
        return self.t.size

    @property
    def samples(self) -> list[WidthState]:
        return [WidthState(float(a), float(b), float(c)) for a, b, c in zip(self.t, self.xi, self.xi_dot)]

    def state(self, i: int) -> WidthState:
        return WidthState(float(self.t[i]), float(self.xi[i]), float(self.xi_dot[i]))

    @property
    def final(self) -> WidthState:
        return self.state(-1)

    @property
    def omega(self) -> np.ndarray:
        return omega(self.drive, self.t)

    def at(self, t: float) -> WidthState:
        """Sample exactly at ``t`` (must be one of the stored times)."""
        idx = np.flatnonzero(self.t == t)
        if idx.size == 0:
            raise KeyError(f"t={t!r} is not a sample time")
        return self.state(int(idx[0]))

    def segment(self, t_a: float, t_b: float) -> "Trajectory":
        """Samples with ``t_a <= t <= t_b``."""
        m = (self.t >= t_a) & (self.t <= t_b)
        return Trajectory(self.t[m], self.xi[m], self.xi_dot[m], self.phase[m], self.drive)

    def window(self, fraction: float) -> "Trajectory":
        """Trailing ``fraction`` of the time span (by time, not by samples)."""
        t_cut = self.t[-1] - fraction * (self.t[-1] - self.t[0])
        m = self.t >= t_cut
        return Trajectory(self.t[m], self.xi[m], self.xi_dot[m], self.phase[m], self.drive)


@dataclass
class ClassicalPairTrajectory:
    t: np.ndarray
    x1: np.ndarray
    v1: np.ndarray
    x2: np.ndarray
    v2: np.ndarray
    drive: DriveSpec
    wronskian: np.ndarray = field(init=False)

    def __post_init__(self):
        self.wronskian = self.x1 * self.v2 - self.v1 * self.x2


def adiabatic_init(drive: DriveSpec, t_start: float, order: int = 0) -> WidthState:
    """Instantaneous ground state: ``xi**2 = 1/(2 omega)``, ``xi_dot = 0``.

    ``order=1`` adds the first adiabatic correction
    ``xi_dot = -omega_dot xi / (2 omega)`` (derivative of the equilibrium
    width), which suppresses the spurious excitation of a finite start time
    by one order in ``omega_dot / omega**2``.
    """
    w = float(omega(drive, t_start))
    if not w > 0:
        raise DegenerateStartError(f"omega({t_start}) = 0: no adiabatic ground state to start from")
    xi = (2.0 * w) ** -0.5
    xi_dot = 0.0
    if order == 1:
        xi_dot = -float(omega_dot(drive, t_start)) * xi / (2.0 * w)
    elif order != 0:
        raise ValueError(f"order must be 0 or 1, got {order!r}")
    return WidthState(float(t_start), xi, xi_dot)


def adiabaticity(drive: DriveSpec, t: float) -> float:
    """``|omega_dot| / omega**2``; small means the ground state is followed."""
    return abs(float(omega_dot(drive, t))) / float(omega_squared(drive, t))


def default_start_time(drive: DriveSpec, ratio: float = 1e3) -> float:
    """Finite stand-in for ``t -> -inf``.

    Chosen so that the adiabaticity parameter ``omega_dot/omega**2`` at the
    start is ``ratio`` times smaller than its value (one) at the freezing time.
    For a power law that is ``|t_start| = t_* ratio**(1/(1+znu))``.
    """
    z = drive.znu
    if drive.kind is DriveKind.POWER_LAW and not drive.offset:
        return -freezing_time(drive) * ratio ** (1.0 / (1.0 + z))
    t_star = z ** (1.0 / (1.0 + z)) * drive.delta ** (-z / (1.0 + z))
    t = -t_star
    while adiabaticity(drive, t) > 1.0 / ratio:
        t *= 1.5
    return t


def _check_tol(tol):
    if not (1e-14 < tol < 1e-3):
        raise ValueError(f"tol must lie in (1e-14, 1e-3), got {tol!r}")


def _stops(t_start, t_end, samples, n_samples):
    if samples is None:
        samples = np.linspace(t_start, t_end, n_samples)
    samples = np.asarray(samples, dtype=float)
    pts = samples[(samples > t_start) & (samples <= t_end)]
    pts = np.append(pts, t_end)
    if t_start < 0.0 < t_end:
        pts = np.append(pts, 0.0)
    return np.unique(pts)


def _initial_step(drive, t):
    w2 = float(omega_squared(drive, t))
    return 1e-3 / max(1.0, math.sqrt(w2))


def integrate(
    drive: DriveSpec,
    init: WidthState,
    t_end: float,
    tol: float = DEFAULT_TOL,
    samples=None,
    n_samples: int = DEFAULT_SAMPLES,
    max_steps: int = MAX_STEPS,
    method: str = "ermakov",
    error_norm: str = "unit",
) -> Trajectory:
    """Integrate the Ermakov equation from ``init`` to ``t_end``.

    The trajectory is sampled at ``init.t``, at every requested time in
    ``(init.t, t_end]`` (default: ``n_samples`` equally spaced points), at
    ``t_end`` and, whenever the interval contains it, at ``t = 0``.

    ``error_norm="unit"`` bounds the local error per unit time (tight global
    accuracy); ``"step"`` is the classical per-step control (faster on long
    runs).
    """
    if not init.t < t_end:
        raise ValueError(f"need init.t < t_end, got {init.t} >= {t_end}")
    _check_tol(tol)
    if method not in ("ermakov", "linear"):
        raise ValueError(f"unknown method {method!r}")
    per_unit = _per_unit(error_norm)
    stops = _stops(init.t, t_end, samples, n_samples)
    if method == "ermakov":
        model = _rk.MODEL_ERMAKOV
        y0 = np.array([init.xi, init.xi_dot, 0.0])
    else:
        model = _rk.MODEL_CLASSICAL_PAIR
        y0 = np.array([init.xi, init.xi_dot, 0.0, 0.5 / init.xi, 0.0])
    out = np.empty((stops.size, y0.size))
    status, reached, t_last, y_last, n_acc, n_rej, _ = _rk.dop853_run(
        model, drive.as_params(), np.zeros(1), float(init.t), y0, stops,
        float(tol), _initial_step(drive, init.t), int(max_steps), out, per_unit,
    )
    if status != _rk.STATUS_OK:
        y_last = _to_width(y_last[None, :], method)
        last = WidthState(t_last, y_last[0, 0], y_last[0, 1]) if y_last[0, 0] > 0 else None
        why = "step size underflow" if status == _rk.STATUS_UNDERFLOW else "step budget exhausted"
        raise IntegrationError(f"Ermakov integration failed at t={t_last!r}: {why}", last)
    t = np.concatenate(([init.t], stops))
    y = _to_width(np.vstack((y0, out)), method)
    if np.any(y[:, 0] <= 0):
        raise IntegrationError("width became non-positive", None)
    return Trajectory(t, y[:, 0], y[:, 1], y[:, 2], drive, int(n_acc), int(n_rej))


def _per_unit(error_norm):
    if error_norm not in ("unit", "step"):
        raise ValueError(f"error_norm must be 'unit' or 'step', got {error_norm!r}")
    return error_norm == "unit"


def _to_width(y, method):
    """Rows of solver state -> rows of ``(xi, xi_dot, phase)``."""
    if method == "ermakov":
        return y
    x1, v1, x2, v2, phase = y.T
    xi = np.hypot(x1, x2)
    with np.errstate(invalid="ignore", divide="ignore"):
        xi_dot = (x1 * v1 + x2 * v2) / xi
    return np.column_stack((xi, xi_dot, phase))


def integrate_classical_pair(
    drive: DriveSpec,
    init1: tuple[float, float],
    init2: tuple[float, float],
    t_start: float,
    t_end: float,
    tol: float = DEFAULT_TOL,
    samples=None,
    n_samples: int = DEFAULT_SAMPLES,
    error_norm: str = "unit",
) -> ClassicalPairTrajectory:
    """Two real solutions of ``x'' + omega**2 x = 0`` with the same stepper."""
    if not t_start < t_end:
        raise ValueError("need t_start < t_end")
    _check_tol(tol)
    w0 = init1[0] * init2[1] - init1[1] * init2[0]
    if w0 == 0:
        raise ValueError("initial conditions are linearly dependent (zero Wronskian)")
    stops = _stops(t_start, t_end, samples, n_samples)
    y0 = np.array([init1[0], init1[1], init2[0], init2[1]], dtype=float)
    out = np.empty((stops.size, 4))
    status, _, t_last, y_last, _, _, _ = _rk.dop853_run(
        _rk.MODEL_CLASSICAL_PAIR, drive.as_params(), np.zeros(1), float(t_start), y0, stops,
        float(tol), _initial_step(drive, t_start), MAX_STEPS, out, _per_unit(error_norm),
    )
    if status != _rk.STATUS_OK:
        raise IntegrationError(f"classical pair integration failed at t={t_last!r}", y_last)
    t = np.concatenate(([t_start], stops))
    y = np.vstack((y0, out))
    return ClassicalPairTrajectory(t, y[:, 0], y[:, 1], y[:, 2], y[:, 3], drive)
