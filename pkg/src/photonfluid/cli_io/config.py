"""Configuration parsing and lab-unit <-> CGS/scaled derivation.

Config files are flat ``key = value`` sections with ``#`` comments. All
user-facing quantities are lab units (nm, cm, W/cm^2, MHz); everything
downstream of :func:`derive_parameters` is CGS or scaled.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .. import theory
from ..constants import C_LIGHT, MHZ_TO_RAD_PER_S, NM_TO_CM, W_PER_CM2_TO_CGS
from ..errors import ConfigError
from ..meanfield import (PhysicalParams, ScaledParams, classical_sound_speed,
                         scale_parameters, transition_wavelength)

MIN_EXTENT_HEALING_LENGTHS = 8.0


@dataclass
class Config:
    """Parsed and validated configuration."""

    # physical block
    wavelength_nm: float
    cavity_length_cm: float
    mirror_r: float
    intensity_w_per_cm2: float
    detuning_mhz: float
    beam_area_cm2: float
    n2_cm3_per_erg: Optional[float] = None
    delta_n: Optional[float] = None
    longitudinal_index: Optional[int] = None
    # grid block
    nx: int = 256
    ny: int = 256
    extent_in_healing_lengths: float = 20.0
    # run block
    dt_scaled: float = 2.0e-3
    steps: int = 5000
    snapshot_every: int = 1000
    flow_speed_ratio: float = 0.0
    with_obstacle: bool = False
    # dispersion block
    k_min_scaled: float = 0.35
    k_max_scaled: float = 8.0
    n_k: int = 17
    # probe block
    modulation_mhz: float = 515.0
    probe_gamma_scaled: float = 0.1
    source_x_frac: float = 0.5
    source_y_frac: float = 0.5
    # obstacle block
    radius_xi: float = 4.0
    height_mu: float = 5.0
    speed_ratios: tuple = (0.1, 1.5)
    window_scaled: float = 200.0
    # oracle block
    oracle_nx: int = 16
    oracle_ny: int = 16
    oracle_extent_scaled: float = 2.0 * math.pi
    # provenance
    source_text: str = field(default="", repr=False)

    def __post_init__(self):
        pos = {
            "wavelength_nm": self.wavelength_nm,
            "cavity_length_cm": self.cavity_length_cm,
            "intensity_W_per_cm2": self.intensity_w_per_cm2,
            "beam_area_cm2": self.beam_area_cm2,
            "dt_scaled": self.dt_scaled,
            "window_scaled": self.window_scaled,
            "radius_xi": self.radius_xi,
            "height_mu": self.height_mu,
        }
        for key, val in pos.items():
            if val <= 0:
                raise ConfigError(f"config key '{key}' must be positive, got {val!r}")
        if not (0.0 < self.mirror_r < 1.0):
            raise ConfigError(
                f"config key 'mirror_R' must lie in (0, 1), got {self.mirror_r!r}")
        if self.n2_cm3_per_erg is None and self.delta_n is None:
            raise ConfigError(
                "one of 'n2_cm3_per_erg' or 'delta_n' must be given in [physical]")
        if self.extent_in_healing_lengths < MIN_EXTENT_HEALING_LENGTHS:
            raise ConfigError(
                f"config key 'extent_in_healing_lengths' must be >= "
                f"{MIN_EXTENT_HEALING_LENGTHS:g} (wrap-around protection), "
                f"got {self.extent_in_healing_lengths!r}")
        if self.steps < 1 or self.snapshot_every < 1 or self.n_k < 1:
            raise ConfigError("'steps', 'snapshot_every' and 'n_k' must be >= 1")


_SCHEMA = {
    "physical": {
        "wavelength_nm": ("wavelength_nm", float),
        "cavity_length_cm": ("cavity_length_cm", float),
        "mirror_r": ("mirror_r", float),
        "n2_cm3_per_erg": ("n2_cm3_per_erg", float),
        "delta_n": ("delta_n", float),
        "intensity_w_per_cm2": ("intensity_w_per_cm2", float),
        "detuning_mhz": ("detuning_mhz", float),
        "beam_area_cm2": ("beam_area_cm2", float),
        "longitudinal_index": ("longitudinal_index", int),
    },
    "grid": {
        "nx": ("nx", int),
        "ny": ("ny", int),
        "extent_in_healing_lengths": ("extent_in_healing_lengths", float),
    },
    "run": {
        "dt_scaled": ("dt_scaled", float),
        "steps": ("steps", int),
        "snapshot_every": ("snapshot_every", int),
        "flow_speed_ratio": ("flow_speed_ratio", float),
        "with_obstacle": ("with_obstacle", lambda s: s.lower() in ("1", "true", "yes")),
    },
    "dispersion": {
        "k_min_scaled": ("k_min_scaled", float),
        "k_max_scaled": ("k_max_scaled", float),
        "n_k": ("n_k", int),
    },
    "probe": {
        "modulation_mhz": ("modulation_mhz", float),
        "gamma_scaled": ("probe_gamma_scaled", float),
        "source_x_frac": ("source_x_frac", float),
        "source_y_frac": ("source_y_frac", float),
    },
    "obstacle": {
        "radius_xi": ("radius_xi", float),
        "height_mu": ("height_mu", float),
        "speed_ratios": ("speed_ratios",
                         lambda s: tuple(float(v) for v in s.split(","))),
        "window_scaled": ("window_scaled", float),
    },
    "oracle": {
        "nx": ("oracle_nx", int),
        "ny": ("oracle_ny", int),
        "extent_scaled": ("oracle_extent_scaled", float),
    },
}

_REQUIRED = ("wavelength_nm", "cavity_length_cm", "mirror_r",
             "intensity_w_per_cm2", "detuning_mhz", "beam_area_cm2")


def parse_config_text(text: str) -> Config:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc

    kwargs = {"source_text": text}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key '{key}' in [{section}]")
            attr, conv = _SCHEMA[section][key]
            try:
                kwargs[attr] = conv(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"config key '{key}' has a bad value {raw!r}") from exc

    if "physical" not in parser.sections():
        raise ConfigError("config needs a [physical] section")
    missing = [k for k in _REQUIRED if k not in kwargs]
    if missing:
        raise ConfigError(f"missing required [physical] keys: {', '.join(missing)}")
    return Config(**kwargs)


def load_config(path) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def default_config_text() -> str:
    return resources.files("photonfluid.data").joinpath("default.cfg").read_text()


def default_config() -> Config:
    return parse_config_text(default_config_text())


# --------------------------------------------------------------------------
# derivation
# --------------------------------------------------------------------------

def derive_parameters(config: Config):
    """Convert lab inputs to (PhysicalParams, QuantumParams, ScaledParams,
    report). The report is a flat key=value text block echoing every
    derived quantity."""
    wavelength = config.wavelength_nm * NM_TO_CM
    intensity = config.intensity_w_per_cm2 * W_PER_CM2_TO_CGS
    detuning = config.detuning_mhz * MHZ_TO_RAD_PER_S

    e0sq = 8.0 * math.pi * intensity / C_LIGHT
    n2 = config.n2_cm3_per_erg
    if n2 is None:
        n2 = -config.delta_n / e0sq  # defocusing by convention
    elif config.delta_n is not None:
        implied = abs(n2) * e0sq
        if abs(implied - config.delta_n) > 1e-6 * config.delta_n:
            raise ConfigError(
                f"overconstrained nonlinearity: n2 and intensity imply delta_n = "
                f"{implied:.9g} but 'delta_n' = {config.delta_n:.9g} "
                "(relative mismatch > 1e-6)")

    physical = PhysicalParams(
        wavelength=wavelength,
        cavity_length=config.cavity_length_cm,
        mirror_reflectivity=config.mirror_r,
        n2=n2,
        background_intensity=intensity,
        detuning=detuning,
        beam_area=config.beam_area_cm2,
    )

    v_cav = physical.v_cav
    n0 = theory.condensate_number(physical.e0_squared, physical.omega, v_cav)
    if config.longitudinal_index is not None:
        mass = theory.effective_mass(config.longitudinal_index,
                                     physical.cavity_length)
        quantum = theory.QuantumParams(
            hbar=theory.HBAR, c=theory.C_LIGHT, omega=physical.omega,
            mass=mass, n_condensate=n0, v_cav=v_cav)
    else:
        quantum = theory.QuantumParams.paraxial(wavelength, n0, v_cav)

    scaled = scale_parameters(physical)
    kernel = theory.interaction_from_kerr(physical, quantum)
    report = parameter_report(physical, quantum, scaled, kernel)
    return physical, quantum, scaled, report


def parameter_report(physical: PhysicalParams, quantum: theory.QuantumParams,
                     scaled: ScaledParams, kernel) -> str:
    """Flat key=value summary of every derived quantity."""
    vs = classical_sound_speed(physical)
    lines = [
        ("wavelength_cm", physical.wavelength),
        ("omega_rad_per_s", physical.omega),
        ("loss_rate_per_s", physical.loss_rate),
        ("e0_squared_erg_per_cm3", physical.e0_squared),
        ("delta_n", physical.delta_n),
        ("sound_speed_cm_per_s", vs),
        ("transition_wavelength_cm", transition_wavelength(physical)),
        ("healing_length_cm", theory.healing_length(quantum, kernel)),
        ("transition_momentum_g_cm_per_s", theory.transition_momentum(quantum, kernel)),
        ("effective_mass_g", quantum.mass),
        ("condensate_number", quantum.n_condensate),
        ("interaction_v0_erg", kernel.v0),
        ("chemical_potential_erg", theory.chemical_potential(quantum, kernel)),
        ("quantum_sound_speed_cm_per_s", theory.sound_speed(quantum, kernel)),
        ("x_scale_cm", scaled.x_scale),
        ("t_scale_s", scaled.t_scale),
        ("field_scale_sqrt_erg_per_cm3", scaled.field_scale),
        ("gamma_scaled", scaled.gamma),
        ("delta_scaled", scaled.delta),
        ("sign", scaled.sign),
    ]
    out = [f"{key} = {val:.12g}" if isinstance(val, float) else f"{key} = {val}"
           for key, val in lines]
    out.append("energy_density_convention = traveling_wave_u_eq_I_over_c")
    out.append("note = beam_area_cm2 is an input; the bundled default "
               "reproduces condensate_number ~ 8e11 at 40 W/cm2")
    return "\n".join(out) + "\n"
