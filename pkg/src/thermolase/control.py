"""Adaptive intensity control law with gradient adaptation and anti-windup.

The commanded peak intensity is a linear combination of three measured
regressors,

    I = a_T * T_peak + a_f * f(T_surf) + a_r * r(t),

and the coefficients follow the gradient (MIT) rule
a_i += gamma_i * e * phi_i * dt with e = r - T_peak, frozen whenever the
update would push a saturated command further past its limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .optics import BeamSpec, peak_intensity_at
from .thermal import SurfaceFrame

DEFAULT_COEFFICIENTS = (0.152, -0.288, 1.0)


class InsufficientSamples(ValueError):
    """A surface frame is too short to estimate conduction."""


@dataclass(frozen=True)
class ControllerState:
    a_T: float = DEFAULT_COEFFICIENTS[0]
    a_f: float = DEFAULT_COEFFICIENTS[1]
    a_r: float = DEFAULT_COEFFICIENTS[2]
    gains: tuple[float, float, float] = (1e-3, 2e-4, 1e-3)
    bounds: tuple[tuple[float, float], ...] = ((-10.0, 10.0),) * 3

    def __post_init__(self):
        if len(self.gains) != 3 or len(self.bounds) != 3:
            raise ValueError("ControllerState needs three gains and three bounds")
        if any(g < 0 for g in self.gains):
            raise ValueError(f"adaptation gains must be nonnegative, got {self.gains}")
        for value, (lo, hi) in zip(self.coefficients, self.bounds):
            if not lo <= hi:
                raise ValueError(f"bad coefficient bounds [{lo}, {hi}]")
            if not lo <= value <= hi:
                raise ValueError(f"coefficient {value} outside bounds [{lo}, {hi}]")

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.a_T, self.a_f, self.a_r)


@dataclass(frozen=True)
class ReferenceProfile:
    """Linear ramp from ``start`` to ``target`` followed by a hold."""

    start: float = 20.0
    target: float = 50.0
    ramp_rate: float = 2.0  # K/s
    hold_duration: float = 70.0  # s

    def __post_init__(self):
        if not self.ramp_rate > 0:
            raise ValueError("ramp_rate must be positive")
        if self.target < self.start:
            raise ValueError("target must not be below start")
        if self.hold_duration < 0:
            raise ValueError("hold_duration must be nonnegative")

    @property
    def ramp_duration(self) -> float:
        return (self.target - self.start) / self.ramp_rate

    @property
    def duration(self) -> float:
        return self.ramp_duration + self.hold_duration


def reference_value(profile: ReferenceProfile, t: float) -> float:
    if t < 0:
        raise ValueError("time must be nonnegative")
    return min(profile.start + profile.ramp_rate * t, profile.target)


def conduction_estimate(frame: SurfaceFrame) -> float:
    """Surface Laplacian on the beam axis, 4 (T(pitch) - T(0)) / pitch^2, in K/mm^2."""
    samples = frame.radial_samples
    if len(samples) < 3:
        raise InsufficientSamples(f"need at least 3 radial samples, got {len(samples)}")
    pitch_mm = frame.pixel_pitch * 1e3
    return 4.0 * (float(samples[1]) - float(samples[0])) / pitch_mm**2


def control_law(state: ControllerState, t_peak: float, f_value: float, r: float) -> float:
    return state.a_T * t_peak + state.a_f * f_value + state.a_r * r


def adapt(
    state: ControllerState,
    error: float,
    regressors: tuple[float, float, float],
    dt: float,
    saturated: int = 0,
) -> ControllerState:
    """One gradient step on the coefficients.

    ``saturated`` is +1 when the command was clipped at the upper limit, -1
    at the lower limit and 0 otherwise. The step raises the command exactly
    when ``error`` is positive, so it is skipped only when that would drive
    the command further into the active limit.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if error == 0 or (saturated > 0 and error > 0) or (saturated < 0 and error < 0):
        return state
    new = []
    for a, g, phi, (lo, hi) in zip(state.coefficients, state.gains, regressors, state.bounds):
        new.append(min(max(a + g * error * phi * dt, lo), hi))
    return replace(state, a_T=new[0], a_f=new[1], a_r=new[2])


@dataclass(frozen=True)
class IntensityLimits:
    low: float
    high: float


def intensity_limits(beam: BeamSpec, d_f_max: float) -> IntensityLimits:
    if not d_f_max > 0:
        raise ValueError("d_f_max must be positive")
    return IntensityLimits(peak_intensity_at(beam, d_f_max), beam.max_intensity)


def saturate(command: float, beam: BeamSpec, d_f_max: float) -> tuple[float, int]:
    """Clip an SI intensity command into what defocus can deliver.

    Returns the clipped value and the saturation sign (+1 high, -1 low, 0 none).
    """
    lim = intensity_limits(beam, d_f_max)
    if not math.isfinite(command):
        raise ValueError(f"non-finite intensity command {command!r}")
    if command > lim.high:
        return lim.high, 1
    if command < lim.low:
        return lim.low, -1
    return float(command), 0


def lyapunov_candidate(error: float, coefficient_errors, gains) -> float:
    """V = e^2/2 + sum(a_err_i^2 / (2 gamma_i))."""
    a = np.asarray(coefficient_errors, dtype=float)
    g = np.asarray(gains, dtype=float)
    return 0.5 * error * error + float(np.sum(a * a / (2.0 * g)))


def matched_model_surrogate(
    state: ControllerState,
    profile: ReferenceProfile,
    *,
    heat_capacity: float = 1.0,
    loss: float = 1.152,
    absorption: float = 1.0,
    model_rate: float = 1.0,
    dt: float = 1e-4,
    duration: float | None = None,
) -> dict[str, np.ndarray]:
    """Adaptive loop on the lumped plant c_v dT/dt = -k T + mu_a I.

    Temperatures are rises above ambient. The conduction regressor is the
    lumped loss proxy f = -T, the commanded response is the first-order
    reference model dT_m/dt = model_rate (r - T_m), and adaptation uses
    e = T_m - T. With mu_a / c_v = 1 the ideal coefficients
    a_T = (k - model_rate), a_f = 0, a_r = model_rate make
    V = e^2/2 + sum(a_err_i^2 / (2 gamma_i)) a Lyapunov function.

    Returns arrays t, T, T_model, error and V sampled at every Euler step.
    """
    b = absorption / heat_capacity
    ideal = np.array([(loss / heat_capacity - model_rate) / b, 0.0, model_rate / b])
    n = int(round((profile.duration if duration is None else duration) / dt)) + 1
    t_arr = np.arange(n) * dt
    temp = np.empty(n)
    model = np.empty(n)
    v = np.empty(n)
    x = xm = 0.0
    for k in range(n):
        r = reference_value(profile, t_arr[k]) - profile.start
        e = xm - x
        temp[k], model[k] = x, xm
        v[k] = lyapunov_candidate(e, np.array(state.coefficients) - ideal, state.gains)
        phi = (x, -x, r)
        u = control_law(state, *phi)
        state = adapt(state, e, phi, dt)
        x += dt * (-loss * x + absorption * u) / heat_capacity
        xm += dt * model_rate * (r - xm)
    return {"t": t_arr, "T": temp, "T_model": model, "error": model - temp, "V": v}
