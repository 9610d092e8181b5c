import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from thermolase.optics import (
    BeamSpec,
    UnreachableIntensity,
    equivalent_waist_from_na,
    focal_distance_for_intensity,
    peak_intensity_at,
    rayleigh_range,
    spot_radius_at,
)

CO2 = BeamSpec(wavelength=10.6e-6, waist=0.2e-3, power=3.0)

beams = st.builds(
    BeamSpec,
    wavelength=st.floats(0.2e-6, 20e-6),
    waist=st.floats(5e-6, 2e-3),
    power=st.floats(1e-3, 100.0),
)


def bisect_focal_distance(beam, target):
    # independent of the closed form: root-solve the forward map
    z_r = rayleigh_range(beam)
    hi = z_r
    while peak_intensity_at(beam, hi) > target:
        hi *= 2.0
    if peak_intensity_at(beam, 0.0) == target:
        return 0.0
    return optimize.brentq(lambda d: peak_intensity_at(beam, d) - target, 0.0, hi, xtol=1e-15 * hi, rtol=1e-15)


def test_rayleigh_range_co2():
    # pi * (2e-4)^2 / 1.06e-5
    assert rayleigh_range(CO2) == pytest.approx(11.855e-3, rel=1e-4)


def test_rayleigh_range_pi_cancels():
    beam = BeamSpec(wavelength=math.pi * 1e-6, waist=1e-6, power=1.0)
    assert rayleigh_range(beam) == pytest.approx(1e-6, rel=1e-12)


def test_rayleigh_range_quadratic_in_waist():
    doubled = BeamSpec(CO2.wavelength, 2 * CO2.waist, CO2.power)
    assert rayleigh_range(doubled) == pytest.approx(4 * rayleigh_range(CO2), rel=1e-12)


def test_spot_radius_landmarks():
    z_r = rayleigh_range(CO2)
    assert spot_radius_at(CO2, 0.0) == CO2.waist
    assert spot_radius_at(CO2, z_r) == pytest.approx(CO2.waist * math.sqrt(2), rel=1e-12)
    assert spot_radius_at(CO2, 2 * z_r) == pytest.approx(0.2e-3 * math.sqrt(5), rel=1e-12)
    assert spot_radius_at(CO2, 23.71e-3) == pytest.approx(0.4472e-3, rel=1e-4)


def test_spot_radius_rejects_negative_distance():
    with pytest.raises(ValueError):
        spot_radius_at(CO2, -1e-3)


def test_peak_intensity_at_focus():
    assert peak_intensity_at(CO2, 0.0) == pytest.approx(4.7746e7, rel=1e-4)
    assert peak_intensity_at(CO2, rayleigh_range(CO2)) == pytest.approx(0.5 * CO2.max_intensity, rel=1e-12)


@pytest.mark.parametrize("d_f", [0.0, 1e-3, 5e-3, 0.03])
def test_peak_intensity_linear_in_power(d_f):
    doubled = BeamSpec(CO2.wavelength, CO2.waist, 2 * CO2.power)
    assert peak_intensity_at(doubled, d_f) == pytest.approx(2 * peak_intensity_at(CO2, d_f), rel=1e-12)


def test_focal_distance_landmarks():
    i_max = CO2.max_intensity
    assert focal_distance_for_intensity(CO2, i_max) == 0.0
    assert focal_distance_for_intensity(CO2, 0.5 * i_max) == pytest.approx(rayleigh_range(CO2), rel=1e-12)


def test_focal_distance_fifth_of_max_matches_root_solve():
    target = CO2.max_intensity / 5
    assert target == pytest.approx(9.549e6, rel=1e-4)
    oracle = bisect_focal_distance(CO2, target)
    assert oracle == pytest.approx(23.71e-3, rel=1e-3)
    assert focal_distance_for_intensity(CO2, target) == pytest.approx(oracle, rel=1e-9)


def test_focal_distance_errors():
    with pytest.raises(UnreachableIntensity):
        focal_distance_for_intensity(CO2, 1.01 * CO2.max_intensity)
    with pytest.raises(ValueError):
        focal_distance_for_intensity(CO2, 0.0)
    with pytest.raises(ValueError):
        focal_distance_for_intensity(CO2, -5.0)


def test_equivalent_waist_inverse_construction():
    theta = CO2.wavelength / (math.pi * CO2.waist)
    assert theta == pytest.approx(0.01687, abs=1e-5)
    assert equivalent_waist_from_na(CO2.wavelength, math.sin(theta)) == pytest.approx(CO2.waist, rel=1e-12)


def test_equivalent_waist_na_point_one():
    assert math.asin(0.1) == pytest.approx(0.10017, rel=1e-4)
    assert equivalent_waist_from_na(10.6e-6, 0.1) == pytest.approx(33.68e-6, rel=1e-3)


def test_equivalent_waist_grows_as_na_shrinks():
    waists = [equivalent_waist_from_na(10.6e-6, na) for na in (0.3, 0.1, 0.03, 0.01)]
    assert all(a < b for a, b in zip(waists, waists[1:]))


@pytest.mark.parametrize("na", [0.0, 1.0, -0.1, 1.5])
def test_equivalent_waist_domain(na):
    with pytest.raises(ValueError):
        equivalent_waist_from_na(10.6e-6, na)


@pytest.mark.parametrize("field,value", [("wavelength", 0.0), ("waist", -1e-3), ("power", float("nan"))])
def test_beamspec_validation(field, value):
    kwargs = dict(wavelength=10.6e-6, waist=2e-4, power=3.0)
    kwargs[field] = value
    with pytest.raises(ValueError):
        BeamSpec(**kwargs)


@settings(max_examples=200, deadline=None)
@given(beam=beams, frac=st.floats(1e-6, 1.0))
def test_roundtrip(beam, frac):
    target = frac * beam.max_intensity
    d_f = focal_distance_for_intensity(beam, target)
    assert d_f >= 0
    assert peak_intensity_at(beam, d_f) == pytest.approx(target, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(beam=beams, a=st.floats(1e-4, 1.0), b=st.floats(1e-4, 1.0))
def test_monotonicity(beam, a, b):
    if a == b:
        return
    lo, hi = sorted((a, b))
    if hi / lo - 1 < 1e-9:
        return
    assert focal_distance_for_intensity(beam, hi * beam.max_intensity) < focal_distance_for_intensity(
        beam, lo * beam.max_intensity
    )
    z_r = rayleigh_range(beam)
    assert spot_radius_at(beam, lo * z_r) < spot_radius_at(beam, hi * z_r)


@pytest.mark.parametrize("d_f", [0.0, 5e-3, 11.855e-3, 40e-3])
def test_power_conservation(d_f):
    w = spot_radius_at(CO2, d_f)
    i0 = peak_intensity_at(CO2, d_f)
    total, _ = integrate.quad(lambda r: i0 * math.exp(-2 * r * r / (w * w)) * 2 * math.pi * r, 0.0, 6 * w, epsabs=0, epsrel=1e-12)
    assert total == pytest.approx(CO2.power, rel=1e-6)


def test_closed_form_agrees_with_bisection_sweep():
    rng = np.random.default_rng(7)
    for _ in range(200):
        beam = BeamSpec(rng.uniform(0.5e-6, 12e-6), rng.uniform(20e-6, 1e-3), rng.uniform(0.01, 50.0))
        target = rng.uniform(1e-4, 1.0) * beam.max_intensity
        assert focal_distance_for_intensity(beam, target) == pytest.approx(bisect_focal_distance(beam, target), rel=1e-9)
