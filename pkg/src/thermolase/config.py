"""INI configuration files for trials and sweeps.

Units live in the key names (``power_w``, ``waist_mm``...). Every key except
those in ``[beam]`` has a default; unknown sections or keys are rejected so
typos surface as errors instead of silently using defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .control import ControllerState, ReferenceProfile
from .harness import ExperimentConfig
from .optics import BeamSpec, equivalent_waist_from_na, spot_radius_at
from .thermal import TISSUE_PRESETS, GridSpec, TissueProperties


class ConfigError(ValueError):
    pass


_REQUIRED = object()

# section -> key -> (type, default)
SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "beam": {
        "wavelength_um": (float, _REQUIRED),
        "power_w": (float, _REQUIRED),
        "waist_mm": (float, None),
        "numerical_aperture": (float, None),
    },
    "tissue": {
        "preset": (str, "gelatin"),
        "volumetric_heat_capacity_j_m3k": (float, None),
        "thermal_conductivity_w_mk": (float, None),
        "absorption_coefficient_per_m": (float, None),
    },
    "grid": {
        "dr_um": (float, 50.0),
        "dz_um": (float, 50.0),
        "nr": (int, 101),
        "nz": (int, 101),
        "ambient_c": (float, 20.0),
        "convection_w_m2k": (float, 0.0),
    },
    "profile": {
        "start_c": (float, 20.0),
        "target_c": (float, 50.0),
        "ramp_rate_k_s": (float, 2.0),
        "hold_s": (float, 70.0),
    },
    "controller": {
        "a_t": (float, 0.152),
        "a_f": (float, -0.288),
        "a_r": (float, 1.0),
        "gamma_t": (float, 1e-3),
        "gamma_f": (float, 2e-4),
        "gamma_r": (float, 1e-3),
        "coef_min": (float, -10.0),
        "coef_max": (float, 10.0),
        "intensity_unit_w_m2": (float, 500.0),
        "temperature_datum_c": (float, None),
    },
    "actuator": {
        "d_f_max_mm": (float, 50.0),
        "rate_limit_mm_s": (float, 20.0),
    },
    "sensor": {
        "pixel_pitch_um": (float, 200.0),
        "noise_sigma_k": (float, 0.1),
    },
    "run": {
        "control_period_s": (float, 0.01),
        "seed": (int, 0),
        "trial_count": (int, 1),
        "label": (str, None),
    },
    "sweep": {
        "conditions": (str, None),
        "repetitions": (int, None),
    },
}

CONDITION_PREFIX = "condition:"


def _convert(section: str, key: str, typ: type, raw: str):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected {typ.__name__}, got {raw!r}") from None


def _read(text: str, source: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return parser


def resolve(parser: configparser.ConfigParser, overrides: dict[str, str] | None = None) -> dict[str, dict]:
    """Typed, defaulted values for every schema key; raises ConfigError."""
    raw: dict[str, dict[str, str]] = {s: dict(parser[s]) for s in parser.sections()}
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        raw.setdefault(section, {})[key] = value

    for section, keys in raw.items():
        if section.startswith(CONDITION_PREFIX):
            continue
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in keys:
            if key not in SCHEMA[section]:
                raise ConfigError(f"[{section}] {key}: unknown key")

    values: dict[str, dict] = {}
    for section, keys in SCHEMA.items():
        given = raw.get(section, {})
        out = {}
        for key, (typ, default) in keys.items():
            if key in given:
                out[key] = _convert(section, key, typ, given[key])
            elif default is _REQUIRED:
                raise ConfigError(f"[{section}] {key}: missing required key")
            else:
                out[key] = default
        values[section] = out
    return values


def build_experiment(values: dict[str, dict], label: str | None = None) -> ExperimentConfig:
    """Turn resolved values into an :class:`ExperimentConfig`."""
    try:
        return _build(values, label)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build(values: dict[str, dict], label: str | None) -> ExperimentConfig:
    b = values["beam"]
    wavelength = b["wavelength_um"] / 1e6
    if b["waist_mm"] is not None and b["numerical_aperture"] is not None:
        raise ConfigError("[beam] waist_mm and numerical_aperture are mutually exclusive")
    if b["waist_mm"] is not None:
        waist = b["waist_mm"] / 1e3
    elif b["numerical_aperture"] is not None:
        waist = equivalent_waist_from_na(wavelength, b["numerical_aperture"])
    else:
        raise ConfigError("[beam] waist_mm: missing required key (or give numerical_aperture)")
    try:
        beam = BeamSpec(wavelength, waist, b["power_w"])
    except ValueError as exc:
        raise ConfigError(f"[beam] {exc}") from None

    t = values["tissue"]
    if t["preset"] not in TISSUE_PRESETS:
        raise ConfigError(f"[tissue] preset: unknown preset {t['preset']!r}; choose from {sorted(TISSUE_PRESETS)}")
    base = TISSUE_PRESETS[t["preset"]]
    tissue = TissueProperties(
        t["volumetric_heat_capacity_j_m3k"] or base.volumetric_heat_capacity,
        t["thermal_conductivity_w_mk"] or base.thermal_conductivity,
        t["absorption_coefficient_per_m"] or base.absorption_coefficient,
    )

    g = values["grid"]
    grid = GridSpec(g["dr_um"] / 1e6, g["dz_um"] / 1e6, g["nr"], g["nz"], g["ambient_c"], False, g["convection_w_m2k"])

    a = values["actuator"]
    d_f_max = a["d_f_max_mm"] / 1e3
    if not d_f_max > 0:
        raise ConfigError("[actuator] d_f_max_mm: must be positive")
    # The focused spot must be resolved and the widest spot must fit in the domain.
    if min(grid.radial_extent, grid.depth_extent) < 10 * beam.waist:
        raise ConfigError("[grid] domain is smaller than 10x the beam waist")
    if grid.radial_extent < 2.5 * spot_radius_at(beam, d_f_max):
        raise ConfigError("[grid] radial extent is smaller than 2.5x the spot radius at d_f_max_mm")

    p = values["profile"]
    profile = ReferenceProfile(p["start_c"], p["target_c"], p["ramp_rate_k_s"], p["hold_s"])

    c = values["controller"]
    bounds = ((c["coef_min"], c["coef_max"]),) * 3
    controller = ControllerState(c["a_t"], c["a_f"], c["a_r"], (c["gamma_t"], c["gamma_f"], c["gamma_r"]), bounds)
    datum = grid.ambient if c["temperature_datum_c"] is None else c["temperature_datum_c"]

    s = values["sensor"]
    r = values["run"]
    return ExperimentConfig(
        beam=beam,
        tissue=tissue,
        grid=grid,
        profile=profile,
        controller=controller,
        control_period=r["control_period_s"],
        actuator_rate_limit=a["rate_limit_mm_s"] / 1e3,
        d_f_max=d_f_max,
        pixel_pitch=s["pixel_pitch_um"] / 1e6,
        noise_sigma=s["noise_sigma_k"],
        seed=r["seed"],
        trial_count=r["trial_count"],
        label=label or r["label"] or t["preset"],
        intensity_unit=c["intensity_unit_w_m2"],
        regressor_offset=datum,
    )


@dataclass
class LoadedConfig:
    values: dict[str, dict]
    parser: configparser.ConfigParser

    def experiment(self, seed: int | None = None) -> ExperimentConfig:
        vals = self.values
        if seed is not None:
            vals = {k: dict(v) for k, v in vals.items()}
            vals["run"]["seed"] = seed
        return build_experiment(vals)

    def conditions(self) -> list[tuple[str, dict[str, dict]]]:
        """(name, resolved values) for each sweep condition.

        A ``[condition:NAME]`` section holds ``section.key`` overrides; a
        condition without such a section is read as a tissue preset name.
        """
        names_raw = self.values["sweep"]["conditions"]
        if not names_raw:
            raise ConfigError("[sweep] conditions: missing required key")
        names = [n.strip() for n in names_raw.split(",") if n.strip()]
        if not names:
            raise ConfigError("[sweep] conditions: no conditions listed")
        reps = self.values["sweep"]["repetitions"]
        out = []
        for name in names:
            section = CONDITION_PREFIX + name
            if self.parser.has_section(section):
                overrides = dict(self.parser[section])
            else:
                overrides = {"tissue.preset": name}
            if reps is not None:
                overrides.setdefault("run.trial_count", str(reps))
            overrides.setdefault("run.label", name)
            out.append((name, resolve(self.parser, overrides)))
        return out


def load_text(text: str, source: str = "<string>") -> LoadedConfig:
    parser = _read(text, source)
    return LoadedConfig(resolve(parser), parser)


def load(path) -> LoadedConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return load_text(text, str(path))


def echo(values: dict[str, dict]) -> dict[str, dict]:
    """JSON-friendly copy of resolved values without unset optional keys."""
    return {s: {k: v for k, v in keys.items() if v is not None} for s, keys in values.items() if s != "sweep"}


def echo_to_ini(echoed: dict[str, dict]) -> str:
    """Render an :func:`echo` dict back into an equivalent config file."""
    lines = []
    for section, keys in echoed.items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in keys.items())
        lines.append("")
    return "\n".join(lines)


DEFAULT_BEAM_INI = """
[beam]
wavelength_um = 10.6
waist_mm = 0.1
power_w = 0.04
"""


def default_experiment(preset: str = "gelatin", **run) -> ExperimentConfig:
    """The default trial for a tissue preset; ``run`` overrides ``[run]`` keys."""
    loaded = load_text(DEFAULT_BEAM_INI + f"\n[tissue]\npreset = {preset}\n", "<defaults>")
    values = loaded.values
    values["run"].update(run)
    return build_experiment(values)
