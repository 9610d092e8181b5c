"""Axisymmetric (r, z) heat conduction with a laser source.

The field is stored on nodes r_i = i*dr, z_j = j*dz with z = 0 the tissue
surface and r = 0 the beam axis. Each node owns a control volume (half
cells on the axis, surface and far boundaries), and the discrete Laplacian
is written in flux form over those volumes, so the explicit update conserves
energy exactly up to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .optics import BeamSpec, spot_radius_at


class NumericalBlowup(RuntimeError):
    """The temperature field became non-finite during a step."""


@dataclass(frozen=True)
class TissueProperties:
    volumetric_heat_capacity: float  # J/(m^3 K)
    thermal_conductivity: float  # W/(m K)
    absorption_coefficient: float  # 1/m

    def __post_init__(self):
        for name in ("volumetric_heat_capacity", "thermal_conductivity", "absorption_coefficient"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"TissueProperties.{name} must be positive, got {value!r}")

    @property
    def diffusivity(self) -> float:
        return self.thermal_conductivity / self.volumetric_heat_capacity


# Representative literature-range values; not measured properties of any specimen.
TISSUE_PRESETS: dict[str, TissueProperties] = {
    "gelatin": TissueProperties(4.2e6, 0.60, 8.0e4),
    "liver": TissueProperties(3.6e6, 0.52, 6.0e4),
    "bone": TissueProperties(2.4e6, 0.40, 2.5e4),
    "muscle": TissueProperties(3.8e6, 0.50, 7.0e4),
}


@dataclass(frozen=True)
class GridSpec:
    """Node grid and boundary treatment.

    ``insulated`` replaces the ambient (Dirichlet) far boundaries with
    zero-flux ones; the surface is always adiabatic apart from the optional
    convective loss ``convection`` (W/(m^2 K)) to ambient.
    """

    dr: float
    dz: float
    nr: int
    nz: int
    ambient: float = 20.0
    insulated: bool = False
    convection: float = 0.0

    def __post_init__(self):
        if not (self.dr > 0 and self.dz > 0):
            raise ValueError("grid spacings dr and dz must be positive")
        if self.nr < 8 or self.nz < 8:
            raise ValueError(f"grid needs at least 8 nodes per axis, got nr={self.nr}, nz={self.nz}")
        if self.convection < 0:
            raise ValueError("convection coefficient must be nonnegative")

    @property
    def radial_extent(self) -> float:
        return (self.nr - 1) * self.dr

    @property
    def depth_extent(self) -> float:
        return (self.nz - 1) * self.dz

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.nr) * self.dr

    @property
    def z(self) -> np.ndarray:
        return np.arange(self.nz) * self.dz

    def ring_areas(self) -> np.ndarray:
        r = self.r
        areas = 2.0 * np.pi * r * self.dr
        areas[0] = np.pi * (0.5 * self.dr) ** 2
        inner = r[-1] - 0.5 * self.dr
        areas[-1] = np.pi * (r[-1] ** 2 - inner**2)
        return areas

    def layer_thicknesses(self) -> np.ndarray:
        lengths = np.full(self.nz, self.dz)
        lengths[0] = lengths[-1] = 0.5 * self.dz
        return lengths

    def cell_volumes(self) -> np.ndarray:
        """Control volume of every node, shape (nr, nz)."""
        return np.outer(self.ring_areas(), self.layer_thicknesses())

    def check_resolves(self, spot_radius: float) -> None:
        """Raise unless the domain spans at least 10 spot radii on both axes."""
        need = 10.0 * spot_radius
        if self.radial_extent < need or self.depth_extent < need:
            raise ValueError(
                f"domain {self.radial_extent * 1e3:.3g} x {self.depth_extent * 1e3:.3g} mm is "
                f"smaller than 10x the {spot_radius * 1e3:.3g} mm spot radius"
            )


@dataclass
class TemperatureField:
    values: np.ndarray  # (nr, nz), degC
    grid: GridSpec
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nr, self.grid.nz):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid ({self.grid.nr}, {self.grid.nz})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("temperature field contains non-finite values")

    @classmethod
    def uniform(cls, grid: GridSpec, temperature: float | None = None) -> "TemperatureField":
        t = grid.ambient if temperature is None else temperature
        return cls(np.full((grid.nr, grid.nz), float(t)), grid)

    def copy(self) -> "TemperatureField":
        return TemperatureField(self.values.copy(), self.grid, self.time)

    def thermal_energy(self, props: TissueProperties) -> float:
        """Sum of c_v * T * V over all control volumes (J, relative to 0 degC)."""
        return float(props.volumetric_heat_capacity * np.sum(self.values * self.grid.cell_volumes()))


@dataclass(frozen=True)
class SurfaceFrame:
    radial_samples: np.ndarray  # degC at r = k * pixel_pitch, z = 0
    peak: float
    timestamp: float
    pixel_pitch: float


class _Stencil:
    """Precomputed flux-form weights for one grid."""

    def __init__(self, grid: GridSpec):
        i = np.arange(grid.nr, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            plus = (i + 0.5) / i
            minus = (i - 0.5) / i
        plus[0], minus[0] = 4.0, 0.0  # axis: 4 (T1 - T0) / dr^2
        rm = grid.r[-1]
        inner = rm - 0.5 * grid.dr
        plus[-1] = 0.0
        minus[-1] = 2.0 * inner * grid.dr / (rm**2 - inner**2)
        self.inv_dr2 = 1.0 / grid.dr**2
        self.inv_dz2 = 1.0 / grid.dz**2
        self.plus = plus[:, None] * self.inv_dr2
        self.minus = minus[:, None] * self.inv_dr2

    def apply(self, t: np.ndarray, out: np.ndarray) -> np.ndarray:
        out[:] = 0.0
        d = t[1:, :] - t[:-1, :]
        out[:-1, :] += self.plus[:-1] * d
        out[1:, :] -= self.minus[1:] * d
        dz = t[:, 1:] - t[:, :-1]
        out[:, 1:-1] += (dz[:, 1:] - dz[:, :-1]) * self.inv_dz2
        out[:, 0] += 2.0 * dz[:, 0] * self.inv_dz2
        out[:, -1] -= 2.0 * dz[:, -1] * self.inv_dz2
        return out


_STENCILS: dict[GridSpec, _Stencil] = {}


def _stencil(grid: GridSpec) -> _Stencil:
    st = _STENCILS.get(grid)
    if st is None:
        st = _STENCILS[grid] = _Stencil(grid)
    return st


def axisymmetric_laplacian(field: TemperatureField) -> np.ndarray:
    """(1/r) d/dr (r dT/dr) + d2T/dz2 on every node (K/m^2).

    Axis nodes use 4 (T1 - T0)/dr^2, the surface row mirrors across z = 0,
    and the outermost nodes use the zero-flux half-cell form.
    """
    return _stencil(field.grid).apply(field.values, np.empty_like(field.values))


def max_stable_substep(props: TissueProperties, grid: GridSpec) -> float:
    """Largest substep keeping every update coefficient in [0, 1].

    The axis row carries a 4/dr^2 diagonal, so this is tighter than the
    Cartesian bound (c_v/k) / (2/dr^2 + 2/dz^2).
    """
    rate = props.diffusivity * (4.0 / grid.dr**2 + 2.0 / grid.dz**2)
    rate += 2.0 * grid.convection / (props.volumetric_heat_capacity * grid.dz)
    return 0.9 / rate


def deposit_source(
    beam: BeamSpec,
    i_peak: float,
    d_f: float,
    props: TissueProperties,
    grid: GridSpec,
    *,
    depth_average: bool = False,
) -> np.ndarray:
    """Absorbed power density mu_a * I(r) * exp(-mu_a z) in W/m^3.

    The lateral profile is the Gaussian spot at defocus ``d_f`` scaled to
    ``i_peak`` on axis. With ``depth_average`` the Beer-Lambert factor is
    averaged over each node's depth interval instead of sampled at the node,
    which keeps the deposited power right when 1/mu_a is below dz.
    """
    if i_peak < 0 or d_f < 0:
        raise ValueError("i_peak and d_f must be nonnegative")
    mu = props.absorption_coefficient
    w = spot_radius_at(beam, d_f)
    lateral = np.exp(-2.0 * grid.r**2 / w**2)
    z = grid.z
    if depth_average:
        lo = np.maximum(z - 0.5 * grid.dz, 0.0)
        hi = np.minimum(z + 0.5 * grid.dz, z[-1])
        depth = (np.exp(-mu * lo) - np.exp(-mu * hi)) / (mu * (hi - lo))
    else:
        depth = np.exp(-mu * z)
    return mu * i_peak * np.outer(lateral, depth)


def step(
    field: TemperatureField,
    props: TissueProperties,
    source: np.ndarray | None,
    dt: float,
) -> TemperatureField:
    """Advance the field by ``dt`` seconds with forward Euler substeps."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    grid = field.grid
    n_sub = max(1, math.ceil(dt / max_stable_substep(props, grid) - 1e-9))
    h = dt / n_sub
    alpha_h = props.diffusivity * h
    heat = None if source is None else np.asarray(source, dtype=float) * (h / props.volumetric_heat_capacity)
    conv = 2.0 * grid.convection * h / (props.volumetric_heat_capacity * grid.dz)

    st = _stencil(grid)
    t = field.values.copy()
    lap = np.empty_like(t)
    for _ in range(n_sub):
        st.apply(t, lap)
        lap *= alpha_h
        if conv:
            lap[:, 0] -= conv * (t[:, 0] - grid.ambient)
        t += lap
        if heat is not None:
            t += heat
        if not grid.insulated:
            t[-1, :] = grid.ambient
            t[:, -1] = grid.ambient

    if not np.all(np.isfinite(t)):
        raise NumericalBlowup(f"non-finite temperature after {n_sub} substeps of {h:.3g} s")
    return TemperatureField(t, grid, field.time + dt)


def surface_readout(
    field: TemperatureField,
    pixel_pitch: float,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> SurfaceFrame:
    """Emulate a thermal camera looking at the surface row.

    Samples T(r, 0) at multiples of ``pixel_pitch`` by linear interpolation
    and adds i.i.d. Gaussian noise drawn from ``rng``.
    """
    grid = field.grid
    if pixel_pitch < grid.dr:
        raise ValueError("pixel pitch must be at least the radial grid spacing")
    n = int(math.floor(grid.radial_extent / pixel_pitch + 1e-9)) + 1
    radii = np.arange(n) * pixel_pitch
    samples = np.interp(radii, grid.r, field.values[:, 0])
    if noise_sigma > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise_sigma > 0")
        samples = samples + rng.normal(0.0, noise_sigma, size=n)
    return SurfaceFrame(samples, float(samples[0]), field.time, pixel_pitch)


def write_snapshot_csv(field: TemperatureField, path) -> None:
    """Dump the field row-major with z fastest; the header holds nr, nz, dr, dz."""
    g = field.grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nr={g.nr} nz={g.nz} dr={g.dr!r} dz={g.dz!r} t={field.time!r}\n")
        np.savetxt(fh, field.values.reshape(-1), fmt="%.10g")
