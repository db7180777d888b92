"""JSON experiment configuration and named noise profiles.

A config file looks like::

    {
      "converter": {"v_in": 12.0, "l": 240e-6, "c": 160e-6, "esr": 0.0,
                    "r_load": 20.0, "f_sw": 10000.0, "duty": 0.4},
      "sim": {"sample_rate": 2e6, "integrator_substeps": 10, "seed": 7},
      "noise_profile": "hardware",
      "degradation": {"n_parallel_esr_resistors": 5, "n_parallel_caps": 3},
      "estimator": {"esr_denominator": "load_current"}
    }

Keys inside ``converter``, ``sim`` and ``degradation`` are the field names of
:class:`ConverterParams`, :class:`SimConfig` and :class:`DegradationState`.
Values given under ``sim`` override the chosen noise profile.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

from .adc import CHANNELS
from .errors import InvalidParameterError
from .estimator import EstimatorConfig
from .sim import AcStage, ConverterParams, DegradationState, SimConfig, apply_degradation

DESIGN_POINT = ConverterParams(v_in=12.0, l=240e-6, c=160e-6, esr=0.0, r_load=20.0,
                              f_sw=10e3, duty=0.4)

_ADC_RANGES = {"i_l": (0.0, 5.0), "v_out": (0.0, 30.0), "v_c": (0.0, 30.0), "v_mos": (0.0, 30.0)}

# Magnitudes were chosen so single-period estimates scatter like the bench
# data (ESR about 10 mOhm, C a few uF, L 1-3 uH); they are not measurements.
NOISE_PROFILES: dict[str, dict] = {
    "ideal": {},
    "hardware": {
        "noise_sigma": {"i_l": 0.03, "v_out": 0.022, "v_c": 0.04, "v_mos": 0.05},
        "adc_bits": 12,
        "adc_fullscale": _ADC_RANGES,
    },
    "hardware_ac": {
        "noise_sigma": {"i_l": 0.03, "v_out": 0.022, "v_c": 0.04, "v_mos": 0.05},
        "adc_bits": 12,
        "adc_fullscale": _ADC_RANGES,
        "ac_stage": {"v_out": {"dc": 20.0, "gain": 8.0}, "v_c": {"dc": 20.0, "gain": 8.0}},
    },
    "hardware_24bit": {
        "noise_sigma": {"i_l": 0.03, "v_out": 0.022, "v_c": 0.04, "v_mos": 0.05},
        "adc_bits": 24,
        "adc_fullscale": _ADC_RANGES,
    },
}


def sim_config(profile: str = "ideal", **overrides) -> SimConfig:
    """Build a :class:`SimConfig` from a named noise profile plus overrides."""
    if profile not in NOISE_PROFILES:
        raise InvalidParameterError(
            f"unknown noise profile {profile!r}; choose from {', '.join(NOISE_PROFILES)}")
    fields = dict(NOISE_PROFILES[profile])
    fields.update(overrides)
    return _sim_from_dict(fields)


def _sim_from_dict(data: dict) -> SimConfig:
    data = dict(data)
    known = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = set(data) - known
    if unknown:
        raise InvalidParameterError(f"unknown sim field(s): {', '.join(sorted(unknown))}")
    if "adc_fullscale" in data:
        data["adc_fullscale"] = {k: tuple(v) for k, v in data["adc_fullscale"].items()}
    if "ac_stage" in data:
        data["ac_stage"] = {
            k: v if isinstance(v, AcStage) else AcStage(**v) for k, v in data["ac_stage"].items()}
    for key in ("noise_sigma", "adc_fullscale", "ac_stage"):
        if key in data:
            bad = set(data[key]) - set(CHANNELS)
            if bad:
                raise InvalidParameterError(f"{key}: unknown channel(s) {', '.join(sorted(bad))}")
    return SimConfig(**data)


def _build(cls, data, section):
    if not isinstance(data, dict):
        raise InvalidParameterError(f"section {section!r} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise InvalidParameterError(f"unknown {section} field(s): {', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise InvalidParameterError(f"{section}: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one simulated acquisition setup.

    ``base`` is the plant before the degradation jumpers are applied.
    """

    base: ConverterParams = DESIGN_POINT
    sim: SimConfig = field(default_factory=SimConfig)
    degradation: DegradationState | None = None
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    noise_profile: str = "ideal"

    @property
    def params(self) -> ConverterParams:
        if self.degradation is None:
            return self.base
        return apply_degradation(self.base, self.degradation)

    @property
    def estimator_for_params(self) -> EstimatorConfig:
        if self.estimator.v_in is not None:
            return self.estimator
        return dataclasses.replace(self.estimator, v_in=self.base.v_in)

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        if seed is None:
            return self
        return dataclasses.replace(self, sim=self.sim.replace(seed=seed))


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {"converter", "sim", "degradation", "estimator", "noise_profile"}
    unknown = set(data) - known
    if unknown:
        raise InvalidParameterError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    base = _build(ConverterParams, data.get("converter", dataclasses.asdict(DESIGN_POINT)), "converter")
    profile = data.get("noise_profile", "ideal")
    sim = sim_config(profile, **data.get("sim", {}))
    deg = data.get("degradation")
    deg = _build(DegradationState, deg, "degradation") if deg is not None else None
    try:
        est = EstimatorConfig(**data.get("estimator", {}))
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(f"estimator: {exc}") from None
    return ExperimentConfig(base=base, sim=sim, degradation=deg, estimator=est, noise_profile=profile)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Read an :class:`ExperimentConfig` from a JSON file."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InvalidParameterError(f"{path}: top level must be an object")
    return config_from_dict(data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    sim = dataclasses.asdict(cfg.sim)
    sim["adc_fullscale"] = {k: list(v) for k, v in cfg.sim.adc_fullscale.items()}
    sim["noise_sigma"] = dict(cfg.sim.noise_sigma)
    out = {
        "converter": dataclasses.asdict(cfg.base),
        "sim": sim,
        "estimator": {k: getattr(v, "value", v) for k, v in dataclasses.asdict(cfg.estimator).items()},
    }
    if cfg.degradation is not None:
        out["degradation"] = dataclasses.asdict(cfg.degradation)
    return out
