import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcycles.protocols import (
    DriveKind, DriveSpec, ProtocolError, freezing_time, freezing_time_closed_form, omega, omega_dot,
    omega_squared, rescale_to_unit_rate,
)


def test_omega_squared_forms():
    assert omega_squared(DriveSpec.power_law(1.5, 0.5), -2.0) == pytest.approx(1.0)
    assert omega_squared(DriveSpec.gapped(1.0, 0.5, 1.0), 2.0) == pytest.approx(4.0)
    assert omega_squared(DriveSpec.corrected(0.5, 1.0, 0.01, 2), 3.0) == pytest.approx(3.09)
    assert omega_squared(DriveSpec(DriveKind.POWER_LAW, 1.0, offset=0.5), 1.0) == pytest.approx(1.5)
    assert omega(DriveSpec.power_law(1.0), 0.0) == 0.0


def test_vectorised_and_even():
    d = DriveSpec.corrected(1.0, 0.3, 0.2, 3)
    t = np.linspace(-5, 5, 11)
    w2 = omega_squared(d, t)
    assert w2.shape == t.shape
    np.testing.assert_array_equal(w2, w2[::-1])


@pytest.mark.parametrize("d", [DriveSpec.power_law(0.7, 0.3), DriveSpec.gapped(1.2, 2.0, 0.5),
                               DriveSpec.corrected(0.5, 0.8, 0.05, 2)])
def test_omega_dot_matches_differences(d):
    for t in (-3.0, -0.7, 0.4, 2.5):
        h = 1e-6
        num = (omega(d, t + h) - omega(d, t - h)) / (2 * h)
        assert omega_dot(d, t) == pytest.approx(num, rel=1e-7)


@pytest.mark.parametrize("kw", [
    dict(kind=DriveKind.POWER_LAW, znu=0.0), dict(kind=DriveKind.POWER_LAW, znu=1.0, delta=0.0),
    dict(kind=DriveKind.POWER_LAW, znu=1.0, delta=math.inf), dict(kind=DriveKind.GAPPED, znu=1.0, t0=-1.0),
    dict(kind=DriveKind.CORRECTED, znu=1.0, gamma=-0.1, n_corr=3),
    dict(kind=DriveKind.CORRECTED, znu=1.0, gamma=0.1, n_corr=2),
    dict(kind=DriveKind.POWER_LAW, znu=1.0, offset=-1.0),
])
def test_validation(kw):
    with pytest.raises(ProtocolError):
        DriveSpec(**kw)


def test_rescaling_factors():
    sc = rescale_to_unit_rate(DriveSpec.power_law(1.0, 0.01))
    assert sc.time_scale == pytest.approx(10.0)
    assert sc.width_scale == pytest.approx(math.sqrt(10.0))
    assert sc.drive.delta == 1.0
    g = rescale_to_unit_rate(DriveSpec.gapped(1.0, 0.01, 0.3))
    assert g.drive.t0 == pytest.approx(3.0)
    c = rescale_to_unit_rate(DriveSpec.corrected(1.0, 1e-4, 0.01, 4))
    assert c.drive.gamma == pytest.approx(0.01 * 1e-4)
    assert sc.to_unit_time(sc.to_physical_time(2.5)) == pytest.approx(2.5)


def test_corrected_gamma_vanishes_as_rate_drops():
    gs = [rescale_to_unit_rate(DriveSpec.corrected(1.0, d, 0.01, 4)).drive.gamma for d in (1e-1, 1e-2, 1e-3)]
    assert gs[0] > gs[1] > gs[2] > 0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 4.0), st.floats(1e-3, 1e2), st.floats(0.01, 5.0))
def test_rescaled_drive_equivalent(znu, delta, s):
    """omega**2(t) time_scale**2 equals the unit-rate omega**2(s)."""
    d = DriveSpec.gapped(znu, delta, 0.3)
    sc = rescale_to_unit_rate(d)
    lhs = omega_squared(d, s * sc.time_scale) * sc.time_scale ** 2
    assert lhs == pytest.approx(omega_squared(sc.drive, s), rel=1e-10)


@pytest.mark.parametrize("znu,delta", [(0.5, 1.0), (1.0, 0.01), (2.0, 3.0), (3.0, 1e-3)])
def test_freezing_time(znu, delta):
    d = DriveSpec.power_law(znu, delta)
    ts = freezing_time(d)
    assert ts == pytest.approx(freezing_time_closed_form(znu, delta), rel=1e-12)
    assert omega_dot(d, ts) == pytest.approx(omega(d, ts) ** 2, rel=1e-10)


def test_freezing_time_rejects_other_drives():
    with pytest.raises(ProtocolError):
        freezing_time(DriveSpec.gapped(1.0, 1.0, 1.0))


def test_as_params_and_dict():
    d = DriveSpec.corrected(0.5, 2.0, 0.1, 2)
    assert d.as_params().tolist() == [2.0, 0.5, 2.0, 0.0, 0.1, 2.0, 0.0]
    assert d.to_dict()["kind"] == "corrected"
    assert d.p == pytest.approx(1 / 3)
