import hashlib
import math
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

TWO_PI = 2.0 * math.pi
SERIES_SCHEMA_VERSION = 2


# Enums
class Side(str, Enum):
    MINUS = "minus"  # theta1 ray, node 0
    PLUS = "plus"  # theta2 ray, node N


class FlowMode(str, Enum):
    PENALISED = "penalised"
    CONSTRAINED = "constrained"
    FREE = "free"


class StepperKind(str, Enum):
    SEMI_IMPLICIT = "semi_implicit"
    EXPLICIT = "explicit"


class ReferenceKind(str, Enum):
    STATIONARY = "stationary"
    FIXED_LENGTH = "fixed_length"
    SELF_SIMILAR = "self_similar"


# Domain records
class Cone(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    theta1: float
    theta2: float

    @model_validator(mode="after")
    def ordered_angles(self):
        if not (0.0 <= self.theta2 < self.theta1 < TWO_PI):
            raise ValueError("Cone invariant violated: require 0 <= theta2 < theta1 < 2*pi")
        return self

    @property
    def omega(self) -> float:
        return (self.theta1 - self.theta2) / TWO_PI

    def theta(self, side: Side) -> float:
        return self.theta1 if side == Side.MINUS else self.theta2


class FlowSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)
    mode: FlowMode
    lambda_: float = Field(default=0.0, alias="lambda")

    @model_validator(mode="after")
    def lambda_matches_mode(self):
        if not math.isfinite(self.lambda_) or self.lambda_ < 0.0:
            raise ValueError("FlowSpec invariant violated: lambda must be a finite number >= 0")
        if self.mode == FlowMode.PENALISED and self.lambda_ <= 0.0:
            raise ValueError("FlowSpec invariant violated: the penalised flow is defined for any constant lambda > 0")
        return self

    @property
    def effective_lambda(self) -> float:
        # constrained mode evaluates lambda(t) from the curve instead
        return self.lambda_ if self.mode == FlowMode.PENALISED else 0.0


class Tolerances(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    sigma_explicit: float = Field(default=0.25, gt=0)
    sigma_semi_implicit: float = Field(default=0.2, gt=0)
    resample_every: int = Field(default=10, ge=1)
    max_rejections: int = Field(default=20, ge=0)
    boundary_tol: float = Field(default=1e-6, gt=0)
    neumann_factor: float = Field(default=1.0, gt=0)
    energy_slack: float = Field(default=1e-6, ge=0)
    ghost_tol: float = Field(default=1e-9, gt=0)
    tip_margin: float = Field(default=1e-3, ge=0)
    decay_skip_fraction: float = Field(default=0.2, ge=0, lt=1)
    length_tol: float = Field(default=1e-12, gt=0)
    resample_tol: float = Field(default=1e-13, gt=0)
    resample_max_iter: int = Field(default=60, ge=1)


class BoundaryResiduals(BaseModel):
    neumann_minus: float = Field(ge=0)
    neumann_plus: float = Field(ge=0)
    flux_minus: float = Field(ge=0)
    flux_plus: float = Field(ge=0)
    on_ray_minus: float = Field(ge=0)
    on_ray_plus: float = Field(ge=0)

    def largest(self) -> float:
        return max(self.model_dump().values())


class StepReport(BaseModel):
    accepted: bool
    dt_used: float
    energy_delta: float
    max_speed: float
    residuals: BoundaryResiduals
    rejections: int = 0

    @model_validator(mode="after")
    def positive_dt_when_accepted(self):
        if self.accepted and not self.dt_used > 0.0:
            raise ValueError("StepReport invariant violated: accepted steps need dt_used > 0")
        return self


class DiagnosticsFrame(BaseModel):
    model_config = ConfigDict(extra="forbid")
    t: float
    L: float = Field(gt=0)
    A: float
    E0: float = Field(ge=0)
    E_lambda: float
    ks2: float = Field(ge=0)
    ks2_l: list[float] = Field(min_length=4, max_length=4)
    epsilon: float = Field(ge=0)
    gamma: Optional[float] = Field(default=None, ge=0)
    kbar: float
    omega_num: float
    lambda_used: float
    residuals: BoundaryResiduals
    tip_dist: float
    kmax_dev: float = Field(ge=0)
    rescaled_kdev: float = Field(default=0.0, ge=0)
    psw_l2_gap: float
    psw_sup_gap: float


class ThresholdReport(BaseModel):
    mode: FlowMode
    omega: float
    omega_bound_penalised: float = 1.0 / math.sqrt(28.0)
    omega_bound_constrained: float = (15.0 / 6592.0) ** 0.25
    L0: float
    E_lambda0: Optional[float] = None
    L_lower: Optional[float] = None
    L_upper: Optional[float] = None
    smallness_penalised: Optional[float] = None
    smallness_penalised_derived: Optional[float] = None
    smallness_constrained: Optional[float] = None
    epsilon_star: float
    measured_ks2: float
    measured_epsilon: float
    hypotheses_met: bool
    hypotheses_by_theorem: dict[FlowMode, bool]


class FreeFlowConstants(BaseModel):
    beta: float = Field(gt=0)
    omega: float = Field(gt=0)
    c_hat: float = Field(gt=0)
    delta_star: Optional[float] = None
    c1: float = Field(gt=0)
    c2: float = Field(gt=0)
    c3: Optional[float] = None


class SvgOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")
    width: int = 640
    height: int = 640
    margin: int = 40
    show_reference: bool = True
    show_panel: bool = True
    reference_samples: int = 200


# Scenario configuration
class PerturbationMode(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    j: int = Field(ge=1)
    a: float

    @field_validator("a")
    @classmethod
    def small_amplitude(cls, v):
        if not abs(v) < 0.2:
            raise ValueError("amplitudes must satisfy |a_j| < 0.2 (keeps the generated curve embedded and regular)")
        return v


class InitialCurveSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    r0: float = Field(gt=0)
    modes: list[PerturbationMode] = []
    seed: int = 0
    random_modes: int = Field(default=0, ge=0)
    random_amplitude: float = Field(default=0.0, ge=0, lt=0.2)

    @field_validator("modes", mode="before")
    @classmethod
    def parse_mode_list(cls, v):
        # "2:0.01, 3:-0.005" as written in config files
        if isinstance(v, str):
            parsed = []
            for item in v.replace(";", ",").split(","):
                item = item.strip()
                if not item:
                    continue
                j, sep, a = item.partition(":")
                if not sep:
                    raise ValueError(f"perturbation mode '{item}' is not of the form j:a")
                parsed.append({"j": j.strip(), "a": a.strip()})
            return parsed
        return v


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    N: int = Field(ge=8)


class TimeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    t_end: float = Field(gt=0)
    output_every: float = Field(gt=0)

    @model_validator(mode="before")
    @classmethod
    def default_cadence(cls, data):
        if isinstance(data, dict) and data.get("output_every") is None and "t_end" in data:
            try:
                data = {**data, "output_every": float(data["t_end"]) / 50.0}
            except (TypeError, ValueError):
                pass
        return data


class StepperSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: StepperKind = StepperKind.SEMI_IMPLICIT


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    cone: Cone
    flow: FlowSpec
    init: InitialCurveSpec
    grid: GridSpec
    time: TimeSpec
    stepper: StepperSpec = StepperSpec()
    tolerances: Tolerances = Tolerances()

    def config_hash(self) -> str:
        return hashlib.sha256(self.model_dump_json(by_alias=True).encode("utf-8")).hexdigest()


class Series(BaseModel):
    frames: list[DiagnosticsFrame] = []
    metadata: dict[str, Any] = {}

    @field_validator("frames")
    @classmethod
    def increasing_time(cls, frames):
        for previous, current in zip(frames, frames[1:]):
            if not current.t > previous.t:
                raise ValueError("Series invariant violated: frame times must be strictly increasing")
        return frames

    def append(self, frame: DiagnosticsFrame) -> None:
        if self.frames and not frame.t > self.frames[-1].t:
            raise ValueError("Series invariant violated: frame times must be strictly increasing")
        self.frames.append(frame)

    def column(self, name: str) -> list:
        return [getattr(frame, name) for frame in self.frames]
