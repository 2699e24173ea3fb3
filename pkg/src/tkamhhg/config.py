"""Run configuration: a flat INI-style file with sections of key=value pairs.

Every key has a documented default; unknown sections or keys are rejected
with the offending name in the message.  parse -> serialize round-trips to a
semantically identical configuration.
"""

import configparser
import io
from dataclasses import dataclass, field, fields as dc_fields
from typing import Optional

import numpy as np

from . import driver as drv
from .constants import field_amplitude_au, omega_from_wavelength
from .grids import DivergenceGrid, TimeGrid, TransverseGrid


class ConfigError(ValueError):
    pass


@dataclass
class DriverConfig:
    l1: int = 1
    l2: int = 1
    wavelength_nm: float = 800.0
    total_intensity_w_cm2: float = 2.0e14
    intensity_split: float = 0.5      # fraction of the total in the w color
    waist_um: float = 30.0
    ramp_up_fs: float = 5.3
    flat_fs: float = 10.7
    ramp_down_fs: float = 5.3


@dataclass
class PerturbationConfig:
    fraction: float = 0.0
    relative_phase: str = drv.IN_PHASE
    donut_width_um: float = 0.0        # 0 -> waist / sqrt(2)


@dataclass
class ModelConfig:
    kind: str = "surrogate"            # surrogate | sfa
    effective_order: float = 20.0
    intrinsic_phase_slope: float = 0.0
    q_min: int = 7
    q_max: int = 22
    ionization_potential_ev: float = 15.7596
    window_cycles: float = 1.5
    tolerance: float = 1e-6
    trajectories: str = "all"


@dataclass
class GridsConfig:
    n_r: int = 120
    n_theta: int = 128
    r_max_waists: float = 3.0
    samples_per_2w_cycle: int = 64
    padding_fs: float = 0.5
    n_beta: int = 100
    beta_max: float = 0.0              # 0 -> sized automatically per run


@dataclass
class AnalysisConfig:
    filter_q_min: int = 10
    t22_sigma_deg: float = 15.0        # window width, degrees of w phase
    purity_threshold: float = 0.95
    suppression_db: float = 20.0
    ridge_threshold: float = 0.10
    apt_oversample: int = 2
    annulus_fraction: float = 0.8
    export_n_xy: int = 81
    export_dt_fs: float = 0.0          # 0 -> 4x the simulation step


@dataclass
class OutputConfig:
    directory: str = "runs/default"


@dataclass
class RunConfig:
    driver: DriverConfig = field(default_factory=DriverConfig)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    grids: GridsConfig = field(default_factory=GridsConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    # ------------------------------------------------------------------
    def validate(self) -> None:
        d = self.driver
        if d.wavelength_nm <= 0:
            raise ConfigError("driver.wavelength_nm must be positive")
        if not (0.0 <= d.intensity_split <= 1.0):
            raise ConfigError("driver.intensity_split must be in [0, 1]")
        if d.total_intensity_w_cm2 < 0:
            raise ConfigError("driver.total_intensity_w_cm2 must be >= 0")
        if d.waist_um <= 0:
            raise ConfigError("driver.waist_um must be positive")
        if min(d.ramp_up_fs, d.flat_fs, d.ramp_down_fs) < 0:
            raise ConfigError("driver envelope segments must be >= 0")
        p = self.perturbation
        if not (0.0 <= p.fraction < 1.0):
            raise ConfigError("perturbation.fraction must be in [0, 1)")
        if p.relative_phase not in (drv.IN_PHASE, drv.OUT_OF_PHASE):
            raise ConfigError(
                "perturbation.relative_phase must be in_phase or out_of_phase")
        m = self.model
        if m.kind not in ("surrogate", "sfa"):
            raise ConfigError("model.kind must be surrogate or sfa")
        if not (1 <= m.q_min <= m.q_max):
            raise ConfigError("model: need 1 <= q_min <= q_max")
        g = self.grids
        if g.samples_per_2w_cycle < 32:
            raise ConfigError("grids.samples_per_2w_cycle must be >= 32")
        if g.n_theta & (g.n_theta - 1):
            raise ConfigError("grids.n_theta must be a power of two")
        a = self.analysis
        if not (m.q_min <= a.filter_q_min <= m.q_max):
            raise ConfigError(
                "analysis.filter_q_min must lie inside the model band")
        if a.apt_oversample < 1:
            raise ConfigError("analysis.apt_oversample must be >= 1")

    # ------------------------------------------------------------------
    # Derived physics objects

    @property
    def omega(self) -> float:
        return omega_from_wavelength(self.driver.wavelength_nm)

    def driver_spec(self) -> drv.DriverSpec:
        d = self.driver
        amp1 = field_amplitude_au(d.total_intensity_w_cm2 * d.intensity_split)
        amp2 = field_amplitude_au(
            d.total_intensity_w_cm2 * (1.0 - d.intensity_split))
        pert = None
        if self.perturbation.fraction > 0:
            pert = drv.PerturbationSpec(
                fraction=self.perturbation.fraction,
                relative_phase=self.perturbation.relative_phase,
                donut_width=self.perturbation.donut_width_um)
        return drv.DriverSpec(
            fundamental=drv.DriverComponentSpec(1, d.l1, drv.RIGHT, amp1,
                                               d.waist_um),
            second_harmonic=drv.DriverComponentSpec(2, d.l2, drv.LEFT, amp2,
                                                    d.waist_um),
            omega=self.omega,
            envelope=drv.EnvelopeSpec(d.ramp_up_fs, d.flat_fs, d.ramp_down_fs),
            perturbation=pert)

    def transverse_grid(self) -> TransverseGrid:
        g = self.grids
        return TransverseGrid.regular(g.n_r, g.n_theta,
                                      g.r_max_waists * self.driver.waist_um)

    def time_grid(self) -> TimeGrid:
        g = self.grids
        dt = (np.pi / self.omega) / g.samples_per_2w_cycle
        span = (self.driver.ramp_up_fs + self.driver.flat_fs
                + self.driver.ramp_down_fs + 2.0 * g.padding_fs)
        n_t = int(np.ceil(span / dt))
        return TimeGrid(dt=dt, n_t=n_t, t0=-g.padding_fs)

    def divergence_grid(self) -> Optional[DivergenceGrid]:
        g = self.grids
        if g.beta_max > 0:
            return DivergenceGrid.regular(g.n_beta, g.beta_max)
        return None    # sized from the emission at run time

    def t22_sigma_fs(self) -> float:
        return np.radians(self.analysis.t22_sigma_deg) / self.omega


_SECTIONS = {
    "driver": DriverConfig,
    "perturbation": PerturbationConfig,
    "model": ModelConfig,
    "grids": GridsConfig,
    "analysis": AnalysisConfig,
    "output": OutputConfig,
}


def _convert(raw: str, target_type, where: str):
    raw = raw.strip()
    try:
        if target_type is int:
            return int(raw)
        if target_type is float:
            if raw == "auto":
                return 0.0
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse the INI-style configuration text, applying defaults and
    rejecting unknown sections or keys."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc

    config = RunConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        target = getattr(config, section)
        known = {f.name: f.type for f in dc_fields(target)}
        types = {f.name: type(getattr(target, f.name)) for f in dc_fields(target)}
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {section}.{key}")
            setattr(target, key,
                    _convert(raw, types[key], f"{section}.{key}"))
    config.validate()
    return config


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(config: RunConfig) -> str:
    """Emit the configuration back as INI text (all keys, all defaults)."""
    parser = configparser.ConfigParser(interpolation=None)
    for section, _ in _SECTIONS.items():
        target = getattr(config, section)
        parser[section] = {f.name: repr(getattr(target, f.name))
                           if not isinstance(getattr(target, f.name), str)
                           else getattr(target, f.name)
                           for f in dc_fields(target)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def apply_overrides(config: RunConfig, overrides) -> RunConfig:
    """Apply `section.key=value` strings on top of a parsed configuration."""
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(
                f"override {item!r} must look like section.key=value")
        dotted, raw = item.split("=", 1)
        section, key = dotted.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}] in override")
        target = getattr(config, section)
        names = {f.name for f in dc_fields(target)}
        if key not in names:
            raise ConfigError(f"unknown key {section}.{key} in override")
        current = getattr(target, key)
        setattr(target, key, _convert(raw, type(current), dotted))
    config.validate()
    return config


def config_as_dict(config: RunConfig) -> dict:
    return {section: {f.name: getattr(getattr(config, section), f.name)
                      for f in dc_fields(getattr(config, section))}
            for section in _SECTIONS}
