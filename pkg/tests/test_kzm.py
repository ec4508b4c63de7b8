import math

import numpy as np
import pytest

from qcycles import analytic, kzm
from qcycles.protocols import DriveSpec
from qcycles.specfun import DomainError


def test_fit_exact_power_law():
    x = np.logspace(-3, 0, 7)
    fit = kzm.fit_power_law(x, 2.5 * x ** 0.75)
    assert fit.exponent == pytest.approx(0.75, abs=1e-12)
    assert fit.prefactor == pytest.approx(2.5, rel=1e-12)
    assert fit.residual < 1e-12 and fit.points_used == 7
    pts = kzm.fit_power_law(list(zip(x, x ** 2)))
    assert pts.exponent == pytest.approx(2.0)
    assert set(fit.to_dict()) >= {"exponent", "prefactor", "residual", "points_used"}


def test_fit_errors():
    with pytest.raises(ValueError):
        kzm.fit_power_law([1, 2], [1, 2])
    with pytest.raises(DomainError):
        kzm.fit_power_law([1, 2, 3], [1, 0, 2])
    with pytest.raises(ValueError):
        kzm.fit_power_law([1, 2, 3], [1, 2])


def test_scan_result_validation():
    with pytest.raises(ValueError):
        kzm.ScanResult("x", [1, 2], {"n": [1.0]}, {}, {})
    r = kzm.ScanResult("x", [1, 2], {"n": [1.0, 2.0]}, {"n": [0.1, 0.2]}, {"n": [1.0, 1.0]})
    rows = list(r.rows())
    assert rows[1] == {"x": 2.0, "n_mean": 2.0, "n_amplitude": 0.2, "n_reference": 1.0}
    assert r.to_dict()["means"]["n"] == [1.0, 2.0]


def test_half_cycle_constant_fixed_by_fastest_rate():
    C = kzm.half_cycle_constant(1.0, 0.1)
    assert C == pytest.approx(-kzm.default_start_time(DriveSpec.power_law(1.0, 0.1)) * 0.1)
    q, C2 = kzm.half_cycle_heats(1.0, [0.01, 0.1])
    assert C2 == pytest.approx(C)
    assert q[0] < q[1]


def test_half_cycle_scan_needs_range():
    with pytest.raises(ValueError):
        kzm.half_cycle_heat_scan(1.0, [0.05, 0.1, 0.2])


def test_half_cycle_heat_tracks_impulse_estimate():
    for d in (1e-3, 1e-2):
        q, _ = kzm.half_cycle_heats(1.0, [d])
        assert 0.5 < kzm.impulse_heat_estimate(1.0, d) / q[0] < 2.0


def test_half_cycle_heat_matches_closed_form():
    # heat at t = 0 from the closed-form width: (1/(8 xi**2) + xi_dot**2/2) scaled by delta
    znu, delta = 1.0, 0.01
    p = analytic.p_of(znu)
    x2 = analytic.xi_at_zero(p)
    xd = analytic.xixidot_at_zero(p) / (2 * math.sqrt(x2))
    unit = 0.125 / x2 + 0.5 * xd ** 2
    q, _ = kzm.half_cycle_heats(znu, [delta])
    assert q[0] == pytest.approx(unit * delta ** (znu / (1 + znu)), rel=1e-4)


def test_run_full_cycle_summary():
    s, tr = kzm.run_full_cycle(DriveSpec.power_law(1.0), return_trajectory=True)
    assert s.n_mean == pytest.approx(1.0, rel=1e-4)
    assert s.heat_end == pytest.approx(40.0 * s.n_mean)
    assert tr.t[0] == s.t_start and tr.t[-1] == s.t_end


def test_full_cycle_scan_and_workers():
    a = kzm.full_cycle_scan([0.5, 1.0])
    b = kzm.full_cycle_scan([0.5, 1.0], workers=2)
    np.testing.assert_array_equal(a.means["n_exc"], b.means["n_exc"])
    np.testing.assert_allclose(a.means["n_exc"], a.references["n_exc"], rtol=1e-3)


def test_gapped_scan_monotone():
    r = kzm.gapped_cycle_scan(1.0, [0.0, 1.0, 3.0])
    assert np.all(np.diff(r.means["heat"]) < 0)
    with pytest.raises(ValueError):
        kzm.gapped_cycle_scan(1.0, [-1.0])


def test_gapped_delta_scan_quadratic():
    fit = kzm.gapped_delta_scan(1.0, 1.0, [0.01, 0.02, 0.04])
    assert fit.exponent == pytest.approx(2.0, abs=0.01)
    with pytest.raises(ValueError):
        kzm.gapped_delta_scan(1.0, 0.0, [0.01, 0.02, 0.04])


def test_universality_domain():
    with pytest.raises(DomainError):
        kzm.universality_scan(1.0, [0.0], n_corr=2)


def test_universality_shift_linear_in_gamma():
    r = kzm.universality_scan(0.5, [0.0, 0.002, 0.004])
    shift = r.means["n_exc"] - r.means["n_exc"][0]
    assert shift[2] == pytest.approx(2 * shift[1], rel=0.05)
