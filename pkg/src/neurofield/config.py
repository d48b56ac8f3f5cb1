"""Scenario configuration: one human-editable YAML file per run.

Unknown sections or keys are hard errors (typos in parameter names must
never silently fall back to defaults).  Defaults reproduce the reference
experiment parameter table exactly.  Configurations round-trip losslessly
through ``to_dict``/``from_dict``/YAML.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields as dc_fields

import yaml

from .activations import make_activation
from .errors import ConfigError
from .params import ModelParams, default_model

MODES = (
    "open_loop_observer",
    "exact_stabilization",
    "simultaneous_pe",
    "perturbation_sweep",
    "drift_study",
    "high_gain_baseline",
)


@dataclass
class GridConfig:
    n_points: int = 20
    measure: str = "lebesgue"
    kernel_distance: str = "geodesic"


@dataclass
class PopulationConfig:
    n1: int = 1
    n2: int = 1


@dataclass
class ParamConfig:
    tau1: float = 1.0
    tau2: float = 1.0
    alpha: float = 100.0
    sigma: float = 60.0
    omega11: float = 2.0
    omega12: float = 2.0
    omega21: float = -2.0
    omega22: float = 0.1
    delay: float = 0.1
    zref1: float = 0.0


@dataclass
class ActivationConfig:
    kind: str = "tanh"
    slope: float = 1.0
    radius: float = 1.0
    margin: float = 1.0
    center: float = 0.0
    amplitude: float = 1.0
    sig_slope: float = 1.0
    baseline: float = 0.0

    def build(self):
        if self.kind == "tanh":
            return make_activation("tanh")
        if self.kind == "locally_linear":
            return make_activation(
                "locally_linear", slope=self.slope, radius=self.radius,
                margin=self.margin, center=self.center,
            )
        if self.kind == "scaled_shifted_sigmoid":
            return make_activation(
                "scaled_shifted_sigmoid", amplitude=self.amplitude,
                slope=self.sig_slope, center=self.center, baseline=self.baseline,
            )
        raise ConfigError(f"unknown activation kind {self.kind!r}")


@dataclass
class InputConfig:
    kind: str = "space_time_sine"
    mu: float = 1000.0
    lambda1: float = 100.0
    lambda2: float = 100.0 * math.sqrt(2.0)
    value: float = 0.0
    period: float = 2.0 * math.pi
    kappa: float = math.pi
    dim: int = 0


@dataclass
class RunConfig:
    t_end: float = 10.0
    dt: float = 1e-3
    output_stride: int = 10
    seed: int = 0
    kernel_snapshot_times: list = field(default_factory=lambda: [0.0, 2.0, 5.0, 10.0])
    save_trajectory: bool = False
    save_snapshot: bool = False


@dataclass
class PEConfig:
    window: float = 1.0
    stride: int = 10


@dataclass
class SweepConfig:
    amplitudes: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0])
    workers: int = 4


@dataclass
class DriftConfig:
    amplitude: float = 2.0


@dataclass
class ScenarioConfig:
    mode: str = "open_loop_observer"
    grid: GridConfig = field(default_factory=GridConfig)
    populations: PopulationConfig = field(default_factory=PopulationConfig)
    params: ParamConfig = field(default_factory=ParamConfig)
    activation: ActivationConfig = field(default_factory=ActivationConfig)
    inputs: InputConfig = field(default_factory=InputConfig)
    run: RunConfig = field(default_factory=RunConfig)
    pe: PEConfig = field(default_factory=PEConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    gamma: float = 1.0  # high-gain baseline weight

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration root must be a mapping")
        sections = {f.name: f for f in dc_fields(ScenarioConfig)}
        unknown = sorted(set(data) - set(sections))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        kwargs = {}
        section_types = {
            "grid": GridConfig,
            "populations": PopulationConfig,
            "params": ParamConfig,
            "activation": ActivationConfig,
            "inputs": InputConfig,
            "run": RunConfig,
            "pe": PEConfig,
            "sweep": SweepConfig,
            "drift": DriftConfig,
        }
        for key, value in data.items():
            if key in section_types:
                cls = section_types[key]
                if not isinstance(value, dict):
                    raise ConfigError(f"section {key!r} must be a mapping")
                known = {f.name for f in dc_fields(cls)}
                bad = sorted(set(value) - known)
                if bad:
                    raise ConfigError(f"unknown keys in section {key!r}: {bad}")
                kwargs[key] = cls(**value)
            else:
                kwargs[key] = value
        return ScenarioConfig(**kwargs)

    @staticmethod
    def load(path) -> "ScenarioConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh)
        return ScenarioConfig.from_dict(data or {})

    def save(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)

    # -- model assembly ------------------------------------------------------

    def build_params(self) -> ModelParams:
        n2 = self.populations.n2
        omega = {(1, 1): self.params.omega11}
        if n2:
            omega.update({
                (1, 2): self.params.omega12,
                (2, 1): self.params.omega21,
                (2, 2): self.params.omega22,
            })
        return default_model(
            n_points=self.grid.n_points,
            measure=self.grid.measure,
            n2=n2,
            alpha=self.params.alpha,
            sigma=self.params.sigma,
            omega=omega,
            delay=self.params.delay,
            activation=self.activation.build(),
            tau=self.params.tau1,
            tau2=self.params.tau2,
            zref1=self.params.zref1,
            distance_kind=self.grid.kernel_distance,
            mu=self.inputs.mu,
            lambda1=self.inputs.lambda1,
            lambda2=self.inputs.lambda2,
        )
