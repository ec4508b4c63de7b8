"""Parameter scans: KZM heat exponents, full-cycle plateaus, gapped cycles.

Every scan runs one independent integration per parameter value, optionally
on a process pool; results are assembled in input order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .ermakov import (
    DEFAULT_TOL, IntegrationError, adiabatic_init, default_start_time, integrate,
)
from .observables import heat, oscillation_grid, plateau
from .protocols import DriveKind, DriveSpec, freezing_time, omega, rescale_to_unit_rate
from .specfun import DomainError

# adiabaticity ratio omega_dot/omega**2 (start) : 1 (freezing time)
START_RATIO = 1e3
WINDOW = 0.25
S_END = 40.0


class ScanError(RuntimeError):
    """An integration inside a scan failed; ``parameter`` names the point."""

    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter


@dataclass(frozen=True)
class FitResult:
    exponent: float
    prefactor: float
    residual: float
    points_used: int
    x: tuple = ()
    y: tuple = ()
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent, "prefactor": self.prefactor, "residual": self.residual,
            "points_used": self.points_used, "x": list(self.x), "y": list(self.y),
            "metadata": dict(self.metadata),
        }


@dataclass
class ScanResult:
    """One row per parameter value; ``means``/``amplitudes``/``references``
    map a quantity name to a sequence of the same length as ``values``."""

    parameter: str
    values: np.ndarray
    means: dict
    amplitudes: dict
    references: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.values.size
        for group in (self.means, self.amplitudes, self.references):
            for k in group:
                group[k] = np.asarray(group[k], dtype=float)
                if group[k].size != n:
                    raise ValueError(f"{k!r} has {group[k].size} entries, expected {n}")

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "values": self.values.tolist(),
            "means": {k: v.tolist() for k, v in self.means.items()},
            "amplitudes": {k: v.tolist() for k, v in self.amplitudes.items()},
            "references": {k: v.tolist() for k, v in self.references.items()},
            "metadata": dict(self.metadata),
        }

    def rows(self):
        """Flat records for tabular output."""
        for i, v in enumerate(self.values):
            row = {self.parameter: float(v)}
            for k, arr in self.means.items():
                row[f"{k}_mean"] = float(arr[i])
            for k, arr in self.amplitudes.items():
                row[f"{k}_amplitude"] = float(arr[i])
            for k, arr in self.references.items():
                row[f"{k}_reference"] = float(arr[i])
            yield row


def fit_power_law(x, y=None) -> FitResult:
    """Least squares of ``log y`` on ``log x``; accepts ``(x, y)`` or a point list."""
    if y is None:
        pts = np.asarray(x, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("expected a sequence of (x, y) points")
        x, y = pts[:, 0], pts[:, 1]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("x and y differ in length")
    if x.size < 3:
        raise ValueError(f"need at least 3 points for a power-law fit, got {x.size}")
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise DomainError("power-law fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    res = ly - (slope * lx + icpt)
    return FitResult(float(slope), float(math.exp(icpt)), float(np.sqrt(np.mean(res ** 2))),
                     int(x.size), tuple(x.tolist()), tuple(y.tolist()))


def _map(fn, args, workers):
    if workers is None or workers <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args))


# --- half cycle -----------------------------------------------------------

def half_cycle_constant(znu: float, delta_max: float, ratio: float = START_RATIO) -> float:
    """``C`` in ``t_i = C/delta``.

    Chosen so that at the fastest ramp the adiabaticity ``omega_dot/omega**2``
    at ``-t_i`` is ``1/ratio`` of its value at the freezing time; slower
    ramps then start even deeper in the adiabatic regime.
    """
    drive = DriveSpec.power_law(znu, delta_max)
    return -default_start_time(drive, ratio) * delta_max


def _half_cycle_point(args):
    znu, delta, C, tol = args
    drive = DriveSpec.power_law(znu, delta)
    t_i = C / delta
    try:
        tr = integrate(drive, adiabatic_init(drive, -t_i), 0.0, tol=tol, n_samples=2)
    except IntegrationError as exc:
        raise ScanError(f"half cycle failed at delta={delta}: {exc}", delta) from exc
    return heat(tr.final, 0.0)


def half_cycle_heats(znu, deltas, tol=DEFAULT_TOL, C=None, workers=1) -> tuple[np.ndarray, float]:
    deltas = np.asarray(deltas, dtype=float)
    if np.any(~(deltas > 0)):
        raise ValueError("all deltas must be positive")
    if C is None:
        C = half_cycle_constant(znu, float(deltas.max()))
    q = _map(_half_cycle_point, [(znu, float(d), C, tol) for d in deltas], workers)
    return np.array(q), C


def half_cycle_heat_scan(znu: float, deltas, tol: float = DEFAULT_TOL, C: float | None = None, workers: int = 1) -> FitResult:
    """Heat at the gapless endpoint of ``t in [-C/delta, 0]`` and its power-law fit."""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size and np.log10(deltas.max() / deltas.min()) < 1.5:
        raise ValueError("deltas must span at least 1.5 decades")
    q, C = half_cycle_heats(znu, deltas, tol, C, workers)
    fit = fit_power_law(deltas, q)
    meta = {"znu": znu, "C": C, "tol": tol, "expected_exponent": analytic.kzm_heat_exponent(znu)}
    return FitResult(fit.exponent, fit.prefactor, fit.residual, fit.points_used, fit.x, fit.y, meta)


def impulse_heat_estimate(znu: float, delta: float) -> float:
    """Heat at the gapless point if the state froze at ``t_*``: ``omega(t_*)/4``."""
    drive = DriveSpec.power_law(znu, delta)
    return float(omega(drive, freezing_time(drive))) / 4.0


# --- full cycles ----------------------------------------------------------

@dataclass(frozen=True)
class CycleSummary:
    n_mean: float
    n_amplitude: float
    f_mean: float
    f_amplitude: float
    heat_end: float
    t_start: float
    t_end: float
    n_steps: int


def run_full_cycle(drive: DriveSpec, s_end: float = S_END, tol: float = DEFAULT_TOL,
                   window: float = WINDOW, t_start: float | None = None, init_order: int = 1,
                   return_trajectory: bool = False):
    """Full cycle from the adiabatic ground state to rescaled time ``s_end``.

    The plateau window is the trailing ``window`` fraction of ``[0, t_end]``
    and is sampled uniformly in adiabatic phase so the oscillations are
    resolved.  Uses the linear formulation with per-step error control,
    which is an order of magnitude cheaper for strongly excited states.
    """
    sc = rescale_to_unit_rate(drive)
    t_end = s_end * sc.time_scale
    if t_start is None:
        t_start = default_start_time(drive, START_RATIO)
    t_w = (1.0 - window) * t_end
    grid = np.concatenate((np.linspace(t_start, t_w, 1001), oscillation_grid(drive, t_w, t_end)))
    tr = integrate(drive, adiabatic_init(drive, t_start, init_order), t_end, tol=tol, samples=grid,
                   method="linear", error_norm="step")
    seg = tr.segment(0.0, t_end)
    pn = plateau(seg, "n_exc", window)
    pf = plateau(seg, "fidelity", window)
    summary = CycleSummary(pn.mean, pn.amplitude, pf.mean, pf.amplitude,
                           float(omega(drive, t_end)) * pn.mean, float(t_start), float(t_end), tr.n_steps)
    return (summary, tr) if return_trajectory else summary


def _cycle_point(args):
    drive, s_end, tol, window, init_order = args
    try:
        return run_full_cycle(drive, s_end, tol, window, init_order=init_order)
    except IntegrationError as exc:
        raise ScanError(f"full cycle failed for {drive.to_dict()}: {exc}", drive) from exc


def _cycle_scan(parameter, values, drives, s_end, tol, window, workers, references, meta, init_order=1):
    res = _map(_cycle_point, [(d, s_end, tol, window, init_order) for d in drives], workers)
    return ScanResult(
        parameter, values,
        means={"n_exc": [r.n_mean for r in res], "fidelity": [r.f_mean for r in res],
               "heat": [r.heat_end for r in res]},
        amplitudes={"n_exc": [r.n_amplitude for r in res], "fidelity": [r.f_amplitude for r in res]},
        references=references,
        metadata=dict(meta, s_end=s_end, tol=tol, window=window,
                      t_start=[r.t_start for r in res], t_end=[r.t_end for r in res]),
    )


def full_cycle_scan(znus, s_end: float = S_END, tol: float = DEFAULT_TOL, window: float = WINDOW, workers: int = 1) -> ScanResult:
    """Unit-rate full cycles; plateaus against ``cot(p pi)**2`` and ``sin(p pi)``."""
    znus = [float(z) for z in znus]
    refs = {"n_exc": [analytic.asymptotic_n_exc(z) for z in znus],
            "fidelity": [analytic.asymptotic_fidelity(z) for z in znus]}
    return _cycle_scan("znu", znus, [DriveSpec.power_law(z) for z in znus], s_end, tol, window,
                       workers, refs, {})


def rate_invariance_scan(znu: float, deltas, s_end: float = S_END, tol: float = DEFAULT_TOL,
                         window: float = WINDOW, workers: int = 1) -> ScanResult:
    """Same cycle at several rates; the horizon is ``s_end`` in rescaled time."""
    deltas = [float(d) for d in deltas]
    refs = {"n_exc": [analytic.asymptotic_n_exc(znu)] * len(deltas),
            "fidelity": [analytic.asymptotic_fidelity(znu)] * len(deltas)}
    meta = {"znu": znu}
    res = _cycle_scan("delta", deltas, [DriveSpec.power_law(znu, d) for d in deltas], s_end, tol,
                      window, workers, refs, meta)
    n = res.means["n_exc"]
    res.metadata["relative_spread"] = float((n.max() - n.min()) / n.mean())
    return res


def gapped_cycle_scan(znu: float, s0_values, s_end: float = S_END, tol: float = DEFAULT_TOL,
                      window: float = WINDOW, workers: int = 1) -> ScanResult:
    """Unit-rate gapped cycles ``(s0 + |s|)**(2 znu)``.

    ``heat`` is the end-of-cycle heat with the oscillation averaged out,
    ``omega(s_end) <n_exc>``.
    """
    s0 = [float(v) for v in s0_values]
    if any(v < 0 for v in s0):
        raise ValueError("s0 values must be >= 0")
    refs = {"n_exc": [analytic.asymptotic_n_exc(znu) if v == 0 else 0.0 for v in s0]}
    return _cycle_scan("s0", s0, [DriveSpec.gapped(znu, 1.0, v) for v in s0], s_end, tol, window,
                       workers, refs, {"znu": znu})


def _gapped_delta_point(args):
    znu, t0, delta, u_end, tol, window = args
    drive = DriveSpec.gapped(znu, delta, t0)
    t_end = u_end / delta
    try:
        tr = integrate(drive, adiabatic_init(drive, -t_end, order=1), t_end, tol=tol,
                       samples=np.concatenate((np.linspace(-t_end, (1 - window) * t_end, 201),
                                               oscillation_grid(drive, (1 - window) * t_end, t_end))),
                       method="linear", error_norm="unit")
    except IntegrationError as exc:
        raise ScanError(f"gapped cycle failed at delta={delta}: {exc}", delta) from exc
    return plateau(tr.segment(0.0, t_end), "n_exc", window).mean


def gapped_delta_scan(znu: float, t0: float, deltas, u_end: float = 20.0, tol: float = 1e-12,
                      window: float = WINDOW, workers: int = 1) -> FitResult:
    """End-of-cycle excitations of a gapped cycle versus rate at fixed gap.

    The cycle runs over ``delta t in [-u_end, u_end]`` so the gap profile is
    the same for every rate.  The window average removes the interference
    between excitations created at the kink and the adiabatic dressing.
    """
    if not t0 > 0:
        raise ValueError("the rate scan needs a finite gap t0 > 0")
    deltas = np.asarray(deltas, dtype=float)
    n = _map(_gapped_delta_point, [(znu, t0, float(d), u_end, tol, window) for d in deltas], workers)
    fit = fit_power_law(deltas, n)
    meta = {"znu": znu, "t0": t0, "u_end": u_end, "tol": tol}
    return FitResult(fit.exponent, fit.prefactor, fit.residual, fit.points_used, fit.x, fit.y, meta)


def universality_scan(znu: float, gammas, n_corr: int = 2, s_end: float = S_END, tol: float = DEFAULT_TOL,
                      window: float = WINDOW, workers: int = 1) -> ScanResult:
    """Unit-rate cycles with a subleading term ``gamma |s|**n_corr`` added to the drive."""
    gammas = [float(g) for g in gammas]
    if not n_corr > 2 * znu:
        raise DomainError(f"n_corr={n_corr} must exceed 2*znu={2 * znu}")
    drives = [DriveSpec.corrected(znu, 1.0, g, n_corr) for g in gammas]
    refs = {"n_exc": [analytic.asymptotic_n_exc(znu)] * len(gammas),
            "fidelity": [analytic.asymptotic_fidelity(znu)] * len(gammas)}
    res = _cycle_scan("gamma", gammas, drives, s_end, tol, window, workers, refs,
                      {"znu": znu, "n_corr": n_corr})
    n = res.means["n_exc"]
    res.metadata["relative_spread"] = float((n.max() - n.min()) / n.mean())
    return res
