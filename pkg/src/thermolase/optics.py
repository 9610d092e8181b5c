"""Gaussian beam geometry for focal-distance control.

All quantities are SI (m, W, W/m^2). Peak intensity uses the 1/e^2 power
relation I_peak = 2P / (pi w^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class UnreachableIntensity(ValueError):
    """Requested peak intensity exceeds what the focused beam delivers."""


@dataclass(frozen=True)
class BeamSpec:
    wavelength: float  # m
    waist: float  # m, beam radius at focus
    power: float  # W

    def __post_init__(self):
        for name in ("wavelength", "waist", "power"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"BeamSpec.{name} must be positive, got {value!r}")

    @property
    def max_intensity(self) -> float:
        return 2.0 * self.power / (math.pi * self.waist**2)


def rayleigh_range(beam: BeamSpec) -> float:
    return math.pi * beam.waist**2 / beam.wavelength


def spot_radius_at(beam: BeamSpec, z: float) -> float:
    """Beam radius a distance ``z`` from the focus."""
    if z < 0:
        raise ValueError(f"axial distance must be nonnegative, got {z!r}")
    return beam.waist * math.sqrt(1.0 + (z / rayleigh_range(beam)) ** 2)


def peak_intensity_at(beam: BeamSpec, d_f: float) -> float:
    """On-axis intensity at the tissue when the focus sits ``d_f`` away."""
    w = spot_radius_at(beam, d_f)
    return 2.0 * beam.power / (math.pi * w * w)


def focal_distance_for_intensity(beam: BeamSpec, target: float) -> float:
    """Invert :func:`peak_intensity_at`: the defocus giving ``target`` W/m^2.

    Closed form d_f = z_R * sqrt(2P / (I pi w^2) - 1).
    """
    if not (target > 0):
        raise ValueError(f"target intensity must be positive, got {target!r}")
    i_max = beam.max_intensity
    if target > i_max:
        raise UnreachableIntensity(
            f"target {target:.6g} W/m^2 exceeds focused intensity {i_max:.6g} W/m^2"
        )
    radicand = i_max / target - 1.0
    return rayleigh_range(beam) * math.sqrt(max(radicand, 0.0))


def equivalent_waist_from_na(wavelength: float, numerical_aperture: float) -> float:
    """Waist of the Gaussian beam whose far-field half-angle is asin(NA).

    Lets a fiber-delivered beam be described by the same :class:`BeamSpec`.
    """
    if not (0.0 < numerical_aperture < 1.0):
        raise ValueError(f"numerical aperture must lie in (0, 1), got {numerical_aperture!r}")
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength!r}")
    theta = math.asin(numerical_aperture)
    return wavelength / (math.pi * theta)
