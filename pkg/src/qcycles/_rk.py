"""Compiled DOP853 stepper with mandatory stop times.

The Butcher tableau and error weights are Hairer's DOP853 coefficients, taken
from scipy's table.  Two error norms are available: the classical per-step
norm, and a per-unit-step norm (the ``|h|`` prefactor dropped) that bounds the
local error per unit time so the global drift of a run scales with its length
rather than with its step count.

The per-unit norm gets two safeguards.  Each component's scale includes a
roundoff allowance proportional to its largest stage derivative, since the
error combination cannot be resolved below that.  Steps shorter than
``H_FLOOR`` times the run length are controlled per step: at a point where
``omega**2`` is only Holder continuous (``t = 0`` for ``2 znu < 1``), the
per-unit estimate would otherwise force the step size down to zero.

The right-hand side is selected by an integer model id (see ``MODEL_*``)
rather than passed as a function, which keeps the compiled stepper cacheable.
"""
from __future__ import annotations

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dc

_NS = _dc.N_STAGES
A = np.ascontiguousarray(_dc.A[:_NS, :_NS])
B = np.ascontiguousarray(_dc.B)
C = np.ascontiguousarray(_dc.C[:_NS])
E3 = np.ascontiguousarray(_dc.E3)
E5 = np.ascontiguousarray(_dc.E5)

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2

MODEL_ERMAKOV = 0
MODEL_CLASSICAL_PAIR = 1
MODEL_SPHERICAL = 2

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ROUNDOFF = 100.0
H_FLOOR = 1e-8


@njit(cache=True)
def dop853_run(model, params, aux, t0, y0, stops, tol, h0, max_steps, out, per_unit):
    """Integrate from ``t0`` through every time in ``stops`` (increasing).

    ``out[k]`` receives the state at ``stops[k]``.  ``per_unit`` selects the
    per-unit-step error norm; otherwise the classical per-step norm is used.
    Returns
    ``(status, n_reached, t, y, n_accepted, n_rejected, h)``.
    """
    n = y0.size
    K = np.empty((_NS + 1, n))
    y = y0.copy()
    ys = np.empty(n)
    y_new = np.empty(n)
    t = t0
    rhs(model, t, y, params, aux, K[0])
    h = h0
    n_acc = 0
    n_rej = 0
    k_stop = 0
    rejected = False
    exponent = -1.0 / 8.0
    eps = 2.220446049250313e-16
    h_floor = H_FLOOR * max(1.0, abs(t0), abs(stops[stops.size - 1]))
    while k_stop < stops.size:
        target = stops[k_stop]
        if target <= t:
            out[k_stop, :] = y
            k_stop += 1
            continue
        if n_acc + n_rej >= max_steps:
            return STATUS_MAX_STEPS, k_stop, t, y, n_acc, n_rej, h
        remaining = target - t
        clipped = False
        h_try = h
        if h_try >= remaining or remaining - h_try < 1e-3 * h_try:
            h_try = remaining
            clipped = True
        if h_try < 10.0 * eps * max(abs(t), 1.0):
            return STATUS_UNDERFLOW, k_stop, t, y, n_acc, n_rej, h
        for s in range(1, _NS):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += A[s, j] * K[j, i]
                ys[i] = y[i] + h_try * acc
            rhs(model, t + C[s] * h_try, ys, params, aux, K[s])
        finite = True
        for i in range(n):
            acc = 0.0
            for j in range(_NS):
                acc += B[j] * K[j, i]
            y_new[i] = y[i] + h_try * acc
            if not np.isfinite(y_new[i]):
                finite = False
        t_new = target if clipped else t + h_try
        err = np.inf
        if finite:
            rhs(model, t_new, y_new, params, aux, K[_NS])
            e5 = 0.0
            e3 = 0.0
            for i in range(n):
                a5 = 0.0
                a3 = 0.0
                kmax = 0.0
                for j in range(_NS + 1):
                    a5 += E5[j] * K[j, i]
                    a3 += E3[j] * K[j, i]
                    kmax = max(kmax, abs(K[j, i]))
                sc = tol * (1.0 + max(abs(y[i]), abs(y_new[i])))
                if per_unit:
                    sc += ROUNDOFF * eps * kmax
                e5 += (a5 / sc) ** 2
                e3 += (a3 / sc) ** 2
            if e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                err = e5 / np.sqrt((e5 + 0.01 * e3) * n)
                if not per_unit:
                    err *= h_try
                elif h_try < h_floor:
                    err *= h_try / h_floor
                if not np.isfinite(err):
                    err = np.inf
        if err < 1.0:
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * err ** exponent)
            if rejected:
                factor = min(1.0, factor)
            rejected = False
            if model == MODEL_CLASSICAL_PAIR and n == 5:
                # winding of x1 + i x2 over the step; the arc is below pi
                # because a step never spans half an oscillation
                cross = y[0] * y_new[2] - y[2] * y_new[0]
                dot = y[0] * y_new[0] + y[2] * y_new[2]
                y_new[4] = y[4] + np.arctan2(cross, dot)
            t = t_new
            y[:] = y_new
            K[0, :] = K[_NS, :]
            n_acc += 1
            if clipped:
                h = max(h, h_try * factor)
                out[k_stop, :] = y
                k_stop += 1
            else:
                h = h_try * factor
        else:
            if np.isfinite(err):
                factor = max(MIN_FACTOR, SAFETY * err ** exponent)
            else:
                factor = MIN_FACTOR
            h = h_try * factor
            rejected = True
            n_rej += 1
    return STATUS_OK, k_stop, t, y, n_acc, n_rej, h


@njit(cache=True)
def omega_sq(t, params):
    """Compiled twin of :func:`qcycles.protocols.omega_squared`.

    ``params = [kind, znu, delta, t0, gamma, n_corr, offset]``.
    """
    kind = int(params[0])
    two_znu = 2.0 * params[1]
    u = params[2] * abs(t)
    if kind == 0:
        return u ** two_znu + params[6]
    if kind == 1:
        return (params[3] + u) ** two_znu + params[6]
    return u ** two_znu + params[4] * u ** params[5] + params[6]


@njit(cache=True)
def ermakov_rhs(t, y, params, aux, dy):
    """``y = (xi, xi_dot, phase)``."""
    xi = y[0]
    w2 = omega_sq(t, params)
    dy[0] = y[1]
    dy[1] = -w2 * xi + 0.25 / (xi * xi * xi)
    dy[2] = 0.5 / (xi * xi)


@njit(cache=True)
def classical_pair_rhs(t, y, params, aux, dy):
    """``y = (x1, v1, x2, v2[, arg])`` for ``x'' + omega(t)**2 x = 0``.

    The optional fifth slot is the unwrapped ``arg(x1 + i x2)``, updated by
    the stepper after each accepted step rather than integrated.
    """
    w2 = omega_sq(t, params)
    if y.size == 5:
        dy[4] = 0.0
    dy[0] = y[1]
    dy[1] = -w2 * y[0]
    dy[2] = y[3]
    dy[3] = -w2 * y[2]


@njit(cache=True)
def spherical_rhs(t, y, params, aux, dy):
    """Ermakov ensemble coupled through the self-consistent mass.

    ``y = (xi_0..xi_{L-1}, xi_dot_0..xi_dot_{L-1})``; ``aux`` holds the mode
    energies ``J_max - J(q)``; ``params = [kind, znu, delta, t0, gamma, n_corr,
    offset, mu_c, g]`` where the drive part gives ``mu(t) - mu_c``.
    """
    L = aux.size
    s = 0.0
    for q in range(L):
        s += y[q] * y[q]
    mu_eff = omega_sq(t, params) + params[7] + params[8] / 6.0 * s / L
    for q in range(L):
        xi = y[q]
        dy[q] = y[L + q]
        dy[L + q] = -(aux[q] + mu_eff) * xi + 0.25 / (xi * xi * xi)


@njit(cache=True)
def rhs(model, t, y, params, aux, dy):
    if model == MODEL_ERMAKOV:
        ermakov_rhs(t, y, params, aux, dy)
    elif model == MODEL_CLASSICAL_PAIR:
        classical_pair_rhs(t, y, params, aux, dy)
    else:
        spherical_rhs(t, y, params, aux, dy)
