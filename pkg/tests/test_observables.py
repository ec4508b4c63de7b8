import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcycles import observables as ob
from qcycles.ermakov import Trajectory, WidthState, adiabatic_init, integrate
from qcycles.protocols import DriveSpec, omega

states = st.builds(WidthState, st.just(0.0), st.floats(0.05, 5.0), st.floats(-5.0, 5.0))


def test_ground_state_values():
    w = 3.0
    s = WidthState(0.0, (2 * w) ** -0.5, 0.0)
    assert ob.n_exc(s, w) == pytest.approx(0.0, abs=1e-15)
    assert ob.fidelity(s, w) == pytest.approx(1.0)
    assert ob.heat(s, w) == pytest.approx(0.0, abs=1e-15)
    d = ob.excitation_distribution(s, w)
    assert d.prob(0) == pytest.approx(1.0) and d.prob(1) == 0.0


@settings(max_examples=200, deadline=None)
@given(states, st.floats(0.01, 50.0))
def test_identities(s, w):
    n = ob.n_exc(s, w)
    assert ob.fidelity(s, w) ** -2 == pytest.approx(1 + n, rel=1e-12)
    assert ob.heat(s, w) == pytest.approx(ob.heat_from_n(s, w), rel=1e-9, abs=1e-12 * w * (n + 1))


@settings(max_examples=100, deadline=None)
@given(states, st.floats(0.01, 50.0))
def test_distribution_moments(s, w):
    n = ob.n_exc(s, w)
    d = ob.excitation_distribution(s, w)
    assert d.probs.sum() + d.tail_bound >= 1 - 1e-12
    assert d.probs.sum() == pytest.approx(1.0, abs=max(d.tail_bound, 1e-12) * 2)
    assert d.mean() == pytest.approx(n, rel=1e-8)
    # tail bound plus summation roundoff over many levels
    assert abs(d.mean() - n) <= d.moment_tail_bound + 1e-11 * n


def test_distribution_fixed_cut_and_errors():
    s = WidthState(0.0, 1.0, 0.5)
    d = ob.excitation_distribution(s, 1.0, n_max=4)
    assert d.levels.tolist() == [0, 2, 4]
    assert d.tail_bound > 0
    with pytest.raises(ValueError):
        d.prob(6)
    with pytest.raises(ValueError):
        ob.excitation_distribution(s, 1.0, n_max=3)
    with pytest.raises(ValueError):
        ob.excitation_distribution(s, 0.0)


def test_gapless_point():
    s = WidthState(0.0, 0.8, 0.3)
    assert math.isinf(ob.n_exc(s, 0.0))
    assert ob.fidelity(s, 0.0) == 0.0
    assert ob.heat(s, 0.0) == pytest.approx(ob.heat_from_n(s, 0.0))
    assert ob.record(s, 0.0).divergent
    with pytest.raises(ValueError):
        ob.n_exc(s, -1.0)


def test_effective_frequency():
    om = ob.effective_frequency(WidthState(0.0, 0.5, 0.25))
    assert om == complex(2.0, -0.5)


def test_series_matches_scalar():
    d = DriveSpec.power_law(1.0)
    tr = integrate(d, adiabatic_init(d, -5.0), 3.0, n_samples=31)
    recs = ob.records(tr)
    for q in ("n_exc", "fidelity", "heat"):
        ser = ob.series(tr, q)
        ref = np.array([getattr(r, q) for r in recs])
        np.testing.assert_allclose(ser, ref, rtol=1e-13)
    assert np.isinf(ob.series(tr, "n_exc")[tr.t == 0.0]).all()
    with pytest.raises(ValueError):
        ob.series(tr, "entropy")


def test_phase_increment():
    d = DriveSpec(0, 1.0, delta=1e-12, offset=1.0)
    tr = integrate(d, adiabatic_init(d, -2.0), 2.0, samples=[-1.0, 1.0])
    assert ob.phase_increment(tr, -1.0, 1.0) == pytest.approx(2.0, rel=1e-9)


def _oscillating(n, t_end=50.0):
    t = np.linspace(0, t_end, n)
    w = np.full_like(t, 2.0)
    return t, 1.0 + 0.1 * np.sin(2 * w * t), w


def test_window_average():
    t, y, w = _oscillating(4001)
    p = ob.window_average(t, y, w, 0.25)
    assert p.mean == pytest.approx(1.0, abs=2e-3)
    assert p.amplitude == pytest.approx(0.1, rel=1e-3)
    assert p.t_from == pytest.approx(37.5, abs=0.02)


def test_window_average_refuses_bad_data():
    t, y, w = _oscillating(40)
    with pytest.raises(ob.InsufficientDataError):
        ob.window_average(t, y, w)
    t, y, w = _oscillating(2001, t_end=2.0)
    with pytest.raises(ob.InsufficientDataError):
        ob.window_average(t, y, w)
    with pytest.raises(ValueError):
        ob.window_average(t, y, w, window=0.8)


def test_plateau_before_freezing_rejected():
    d = DriveSpec.power_law(1.0)
    tr = integrate(d, adiabatic_init(d, -3.0), 0.5, n_samples=501)
    with pytest.raises(ob.InsufficientDataError):
        ob.plateau(tr.segment(0.0, 0.5))


def test_oscillation_grid():
    d = DriveSpec.power_law(1.0)
    g = ob.oscillation_grid(d, 10.0, 20.0, per_period=8)
    assert g[0] == 10.0 and g[-1] == 20.0
    theta = 0.5 * (g ** 2 - 100.0)
    np.testing.assert_allclose(np.diff(theta), np.pi / 8, rtol=2e-3)
    g2 = ob.oscillation_grid(lambda t: omega(d, t), 10.0, 20.0)
    np.testing.assert_array_equal(g, g2)
    with pytest.raises(ValueError):
        ob.oscillation_grid(d, 1.0, 1.0)
