"""Closed-loop trials: camera -> controller -> optics -> actuator -> tissue."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import control, optics, thermal
from .control import ControllerState, ReferenceProfile
from .optics import BeamSpec
from .thermal import GridSpec, TemperatureField, TissueProperties

W_PER_CM2 = 1e4  # W/m^2


@dataclass(frozen=True)
class ExperimentConfig:
    beam: BeamSpec
    tissue: TissueProperties
    grid: GridSpec
    profile: ReferenceProfile
    controller: ControllerState
    control_period: float = 0.01
    actuator_rate_limit: float = 0.02  # m/s
    d_f_max: float = 0.05  # m
    pixel_pitch: float = 2e-4  # m
    noise_sigma: float = 0.1  # K
    seed: int = 0
    trial_count: int = 1
    label: str = "trial"
    intensity_unit: float = W_PER_CM2  # W/m^2 per controller intensity unit
    regressor_offset: float = 0.0  # degC subtracted from T_peak and r before the law

    def __post_init__(self):
        if not self.control_period > 0:
            raise ValueError("control_period must be positive")
        if not self.actuator_rate_limit > 0:
            raise ValueError("actuator_rate_limit must be positive")
        if not self.d_f_max > 0:
            raise ValueError("d_f_max must be positive")
        if self.trial_count < 1:
            raise ValueError("trial_count must be at least 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if not self.intensity_unit > 0:
            raise ValueError("intensity_unit must be positive")
        if self.pixel_pitch < self.grid.dr:
            raise ValueError("pixel_pitch must be at least grid.dr")

    @property
    def n_ticks(self) -> int:
        return int(math.floor(self.profile.duration / self.control_period + 1e-9)) + 1


SERIES_COLUMNS = ("t", "r", "T_peak", "f", "I_cmd", "I_applied", "d_f")


@dataclass
class TrialResult:
    label: str
    seed: int
    t: np.ndarray
    r: np.ndarray
    T_peak: np.ndarray
    f: np.ndarray
    I_cmd: np.ndarray  # W/m^2, pre-saturation
    I_applied: np.ndarray  # W/m^2
    d_f: np.ndarray  # m
    ramp_duration: float
    coefficients: np.ndarray = field(repr=False, default=None)  # (n, 3) after each tick
    rmse: float = field(init=False)
    ramp_rmse: float = field(init=False)
    hold_rmse: float = field(init=False)
    hold_mean_error: float = field(init=False)

    def __post_init__(self):
        self.compute_metrics()

    @property
    def errors(self) -> np.ndarray:
        return self.r - self.T_peak

    def compute_metrics(self) -> None:
        e = self.errors
        in_ramp = self.t < self.ramp_duration
        self.rmse = rmse(e)
        self.ramp_rmse = rmse(e[in_ramp]) if in_ramp.any() else 0.0
        self.hold_rmse = rmse(e[~in_ramp]) if (~in_ramp).any() else 0.0
        self.hold_mean_error = float(np.mean(self.T_peak[~in_ramp] - self.r[~in_ramp])) if (~in_ramp).any() else 0.0

    def window_mean_error(self, seconds: float) -> float:
        """Mean of T_peak - r over the final ``seconds`` of the trial."""
        sel = self.t >= self.t[-1] - seconds - 1e-9
        return float(np.mean(self.T_peak[sel] - self.r[sel]))


def rmse(errors) -> float:
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise ValueError("rmse of an empty series")
    return float(np.sqrt(np.mean(e * e)))


def slew_limit(d_f_command: float, d_f_previous: float, rate: float, dt: float, d_f_max: float = math.inf) -> float:
    """Move toward the commanded focal distance by at most rate*dt, within [0, d_f_max]."""
    if not (rate > 0 and dt > 0):
        raise ValueError("rate and dt must be positive")
    target = min(max(d_f_command, 0.0), d_f_max)
    max_move = rate * dt
    moved = d_f_previous + min(max(target - d_f_previous, -max_move), max_move)
    return min(max(moved, 0.0), d_f_max)


def run_trial(config: ExperimentConfig, *, snapshot_every: int = 0, snapshot_dir=None) -> TrialResult:
    beam, props, grid = config.beam, config.tissue, config.grid
    dt = config.control_period
    n = config.n_ticks
    rng = np.random.default_rng(config.seed)
    offset = config.regressor_offset
    unit = config.intensity_unit

    temps = TemperatureField.uniform(grid)
    state = config.controller
    d_f = config.d_f_max

    out = {name: np.empty(n) for name in SERIES_COLUMNS}
    coeffs = np.empty((n, 3))
    for k in range(n):
        t = k * dt
        frame = thermal.surface_readout(temps, config.pixel_pitch, config.noise_sigma, rng)
        f_value = control.conduction_estimate(frame)
        r = control.reference_value(config.profile, t)
        t_peak = frame.peak
        phi = (t_peak - offset, f_value, r - offset)

        command = control.control_law(state, *phi) * unit
        target, flag = control.saturate(command, beam, config.d_f_max)
        state = control.adapt(state, r - t_peak, phi, dt, flag)
        d_target = optics.focal_distance_for_intensity(beam, target)
        d_f = slew_limit(d_target, d_f, config.actuator_rate_limit, dt, config.d_f_max)
        applied = optics.peak_intensity_at(beam, d_f)

        out["t"][k] = t
        out["r"][k] = r
        out["T_peak"][k] = t_peak
        out["f"][k] = f_value
        out["I_cmd"][k] = command
        out["I_applied"][k] = applied
        out["d_f"][k] = d_f
        coeffs[k] = state.coefficients

        if snapshot_every and snapshot_dir is not None and k % snapshot_every == 0:
            thermal.write_snapshot_csv(temps, os.path.join(snapshot_dir, f"field_{k:06d}.csv"))
        if k < n - 1:
            source = thermal.deposit_source(beam, applied, d_f, props, grid, depth_average=True)
            temps = thermal.step(temps, props, source, dt)

    return TrialResult(
        label=config.label,
        seed=config.seed,
        ramp_duration=config.profile.ramp_duration,
        coefficients=coeffs,
        **out,
    )


def expand_trials(configs: list[ExperimentConfig]) -> list[ExperimentConfig]:
    """One config per repetition, seeds offset by the repetition index."""
    return [replace(c, seed=c.seed + i, trial_count=1) for c in configs for i in range(c.trial_count)]


def _max_workers() -> int:
    raw = os.environ.get("THERMOLASE_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(configs: list[ExperimentConfig], max_workers: int | None = None) -> list[TrialResult]:
    if not configs:
        raise ValueError("run_sweep needs at least one config")
    trials = expand_trials(configs)
    workers = min(max_workers or _max_workers(), len(trials))
    if workers <= 1:
        return [run_trial(c) for c in trials]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_trial, trials))


@dataclass(frozen=True)
class ConditionSummary:
    condition: str
    n: int
    mean_rmse: float
    std_rmse: float


def aggregate(results: list[TrialResult]) -> list[ConditionSummary]:
    """Mean and population standard deviation of RMSE per label, in first-seen order."""
    groups: dict[str, list[float]] = {}
    for res in results:
        groups.setdefault(res.label, []).append(res.rmse)
    return [
        ConditionSummary(name, len(v), float(np.mean(v)), float(np.std(v)))
        for name, v in groups.items()
    ]
