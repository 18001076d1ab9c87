"""JSON run-configuration: schema validation, defaults, and builders.

A run configuration is one JSON object with sections trap / drive / pulse /
cost / optimizer / sweep / env. Every key is optional and falls back to the
shipped defaults (the four-ion chain driven on ions 1 and 3 with a 100 us,
20-segment shared symmetric pulse); unknown keys are rejected with a
path-qualified error. All frequencies in the file are ordinary frequencies
in Hz; angular quantities are produced only by the builder methods.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .chain_model import ChainModel, TrapConfig, build_chain
from .constants import DEFAULT_WAVEVECTOR_DIFFERENCE, SMOOTH_EPS, YB171_MASS_KG
from .cost import GROUPS, VARIANTS, CostSpec
from .coupling_integrals import DriveConfig
from .fidelity import ThermalEnv
from .noise_sweep import MODES, SweepSpec
from .optimizer import DEFAULT_SEED, OptimizerConfig
from .pulse_schedule import ParamLayout

TWO_PI = 6.283185307179586476925287

SECTIONS = ("trap", "drive", "pulse", "cost", "optimizer", "sweep", "env")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending path."""


def default_config_dict() -> dict:
    """Fully explicit default configuration (the shipped operating point)."""
    return {
        "trap": {
            "ion_count": 4,
            "ion_mass": YB171_MASS_KG,
            "axial_freq": 1.2e6,
            "transverse_freq": 3.6e6,
            "wavevector_difference": DEFAULT_WAVEVECTOR_DIFFERENCE,
            "lamb_dicke_scale": None,
        },
        "drive": {
            "mu_hz": 3.15e6,
            "addressed": [1, 3],
        },
        "pulse": {
            "tau_s": 100e-6,
            "segments": 20,
            "shared": True,
            "symmetric": True,
        },
        "cost": {
            "variant": "fully_robust",
            "weights": {group: 1.0 for group in GROUPS},
            "epsilon": SMOOTH_EPS,
        },
        "optimizer": {
            "max_iterations": 2000,
            "cost_tol": 1e-10,
            "step_tol": 1e-12,
            "restarts": 16,
            "seed": DEFAULT_SEED,
            "threads": 1,
            "omega_max_hz": 2e6,
        },
        "sweep": {
            "drift_min_hz": -1e4,
            "drift_max_hz": 1e4,
            "drift_points": 201,
            "time_scale_min": 0.98,
            "time_scale_max": 1.02,
            "time_points": 201,
            "mode": "drift_1d",
        },
        "env": {
            "temperature_k": 1e-6,
        },
    }


def _positive_number() -> dict:
    return {"type": "number", "exclusiveMinimum": 0}


CONFIG_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "trap": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ion_count": {"type": "integer", "minimum": 1},
                "ion_mass": _positive_number(),
                "axial_freq": _positive_number(),
                "transverse_freq": _positive_number(),
                "wavevector_difference": _positive_number(),
                "lamb_dicke_scale": {
                    "anyOf": [{"type": "null"}, _positive_number()]
                },
            },
        },
        "drive": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mu_hz": _positive_number(),
                "addressed": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                    "minItems": 2,
                    "maxItems": 2,
                },
            },
        },
        "pulse": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tau_s": _positive_number(),
                "segments": {"type": "integer", "minimum": 1},
                "shared": {"type": "boolean"},
                "symmetric": {"type": "boolean"},
            },
        },
        "cost": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "variant": {"enum": list(VARIANTS)},
                "weights": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        group: {"type": "number", "minimum": 0}
                        for group in GROUPS
                    },
                },
                "epsilon": _positive_number(),
            },
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iterations": {"type": "integer", "minimum": 0},
                "cost_tol": _positive_number(),
                "step_tol": _positive_number(),
                "restarts": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "threads": {"type": "integer", "minimum": 1},
                "omega_max_hz": _positive_number(),
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "drift_min_hz": {"type": "number"},
                "drift_max_hz": {"type": "number"},
                "drift_points": {"type": "integer", "minimum": 2},
                "time_scale_min": _positive_number(),
                "time_scale_max": _positive_number(),
                "time_points": {"type": "integer", "minimum": 2},
                "mode": {"enum": list(MODES)},
            },
        },
        "env": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "temperature_k": {"type": "number", "minimum": 0},
            },
        },
    },
}


def validate_config_dict(data: dict) -> None:
    """Schema-check a raw configuration dict; errors name the JSON path."""
    if not isinstance(data, dict):
        raise ConfigError(
            f"configuration root must be a JSON object, got {type(data).__name__}"
        )
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigError(f"{first.json_path}: {first.message}")


def _merged_with_defaults(data: dict) -> dict:
    merged = default_config_dict()
    for section, content in data.items():
        merged[section].update(content)
    return merged


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration holding file-level (ordinary-Hz) values."""

    trap: TrapConfig
    mu_hz: float
    addressed: tuple[int, int]
    tau_s: float
    segments: int
    shared: bool
    symmetric: bool
    cost: CostSpec
    optimizer: OptimizerConfig
    omega_max_hz: float
    sweep: SweepSpec
    temperature_k: float

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        validate_config_dict(data)
        merged = _merged_with_defaults(data)
        try:
            trap = TrapConfig(**merged["trap"])
        except ValueError as exc:
            raise ConfigError(f"$.trap: {exc}") from exc
        addressed = tuple(merged["drive"]["addressed"])
        if len(set(addressed)) != 2:
            raise ConfigError(
                f"$.drive.addressed: ions must be distinct, got {list(addressed)}"
            )
        for ion in addressed:
            if ion >= trap.ion_count:
                raise ConfigError(
                    f"$.drive.addressed: ion {ion} out of range for "
                    f"{trap.ion_count} ions"
                )
        try:
            cost = CostSpec(
                variant=merged["cost"]["variant"],
                weights=dict(merged["cost"]["weights"]),
                epsilon=merged["cost"]["epsilon"],
            )
        except ValueError as exc:
            raise ConfigError(f"$.cost: {exc}") from exc
        opt = merged["optimizer"]
        try:
            optimizer = OptimizerConfig(
                max_iterations=opt["max_iterations"],
                cost_tol=opt["cost_tol"],
                step_tol=opt["step_tol"],
                restarts=opt["restarts"],
                seed=opt["seed"],
                threads=opt["threads"],
            )
        except ValueError as exc:
            raise ConfigError(f"$.optimizer: {exc}") from exc
        try:
            sweep = SweepSpec(**merged["sweep"])
        except ValueError as exc:
            raise ConfigError(f"$.sweep: {exc}") from exc
        if merged["env"]["temperature_k"] < 0:
            raise ConfigError("$.env.temperature_k: must be >= 0")
        return cls(
            trap=trap,
            mu_hz=float(merged["drive"]["mu_hz"]),
            addressed=addressed,
            tau_s=float(merged["pulse"]["tau_s"]),
            segments=int(merged["pulse"]["segments"]),
            shared=bool(merged["pulse"]["shared"]),
            symmetric=bool(merged["pulse"]["symmetric"]),
            cost=cost,
            optimizer=optimizer,
            omega_max_hz=float(opt["omega_max_hz"]),
            sweep=sweep,
            temperature_k=float(merged["env"]["temperature_k"]),
        )

    def to_dict(self) -> dict:
        return {
            "trap": {
                "ion_count": self.trap.ion_count,
                "ion_mass": self.trap.ion_mass,
                "axial_freq": self.trap.axial_freq,
                "transverse_freq": self.trap.transverse_freq,
                "wavevector_difference": self.trap.wavevector_difference,
                "lamb_dicke_scale": self.trap.lamb_dicke_scale,
            },
            "drive": {
                "mu_hz": self.mu_hz,
                "addressed": list(self.addressed),
            },
            "pulse": {
                "tau_s": self.tau_s,
                "segments": self.segments,
                "shared": self.shared,
                "symmetric": self.symmetric,
            },
            "cost": {
                "variant": self.cost.variant,
                "weights": {g: self.cost.weights[g] for g in GROUPS},
                "epsilon": self.cost.epsilon,
            },
            "optimizer": {
                "max_iterations": self.optimizer.max_iterations,
                "cost_tol": self.optimizer.cost_tol,
                "step_tol": self.optimizer.step_tol,
                "restarts": self.optimizer.restarts,
                "seed": self.optimizer.seed,
                "threads": self.optimizer.threads,
                "omega_max_hz": self.omega_max_hz,
            },
            "sweep": {
                "drift_min_hz": self.sweep.drift_min_hz,
                "drift_max_hz": self.sweep.drift_max_hz,
                "drift_points": self.sweep.drift_points,
                "time_scale_min": self.sweep.time_scale_min,
                "time_scale_max": self.sweep.time_scale_max,
                "time_points": self.sweep.time_points,
                "mode": self.sweep.mode,
            },
            "env": {
                "temperature_k": self.temperature_k,
            },
        }

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}: malformed JSON at line {exc.lineno}, column "
                f"{exc.colno}: {exc.msg}"
            ) from exc
        return cls.from_dict(data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    # ---- builders producing the runtime (angular-frequency) objects ----

    def build_chain_model(self) -> ChainModel:
        return build_chain(self.trap)

    def build_drive(self, chain: ChainModel, delta: float = 0.0) -> DriveConfig:
        return DriveConfig.for_chain(TWO_PI * self.mu_hz, chain, delta)

    def build_layout(self) -> ParamLayout:
        return ParamLayout(
            segment_count=self.segments,
            duration=self.tau_s,
            addressed=self.addressed,
            omega_max=TWO_PI * self.omega_max_hz,
            shared=self.shared,
            symmetric=self.symmetric,
        )

    def build_env(self, chain: ChainModel) -> ThermalEnv:
        return ThermalEnv.for_chain(chain, self.temperature_k)

    # ---- convenience copies for CLI flag overrides ----

    def with_variant(self, variant: str) -> "RunConfig":
        return dataclasses.replace(
            self, cost=dataclasses.replace(self.cost, variant=variant)
        )

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(
            self, optimizer=dataclasses.replace(self.optimizer, seed=seed)
        )

    def with_threads(self, threads: int) -> "RunConfig":
        return dataclasses.replace(
            self, optimizer=dataclasses.replace(self.optimizer, threads=threads)
        )

    def with_sweep(self, sweep: SweepSpec) -> "RunConfig":
        return dataclasses.replace(self, sweep=sweep)
