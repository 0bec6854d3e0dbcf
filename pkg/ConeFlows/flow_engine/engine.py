import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ConeFlows import __version__
from ConeFlows.cone_domain import (
    apply_boundary_ghosts,
    boundary_residuals,
    neumann_residual,
    neumann_tolerance,
    positional_residual,
    project_to_ray,
    tip_distance,
)
from ConeFlows.curve_core import DiscreteCurve, Point2, arc_length, resample_uniform
from ConeFlows.diagnostics.energies import compute_frame, energies
from ConeFlows.errors import (
    BoundaryViolationError,
    InvalidInputError,
    RunAbortedError,
    StepperFailureError,
    TipCollisionError,
)
from ConeFlows.flow_engine.base_stepper import BaseStepper
from ConeFlows.flow_engine.explicit_stepper import ExplicitStepper
from ConeFlows.flow_engine.semi_implicit_stepper import SemiImplicitStepper
from ConeFlows.flow_engine.speeds import effective_lambda
from ConeFlows.schemas import (
    Cone,
    FlowMode,
    FlowSpec,
    ScenarioConfig,
    Series,
    Side,
    StepperKind,
    StepReport,
    Tolerances,
)

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

SEMI_IMPLICIT = SemiImplicitStepper()
EXPLICIT = ExplicitStepper()
STEPPERS: dict[StepperKind, BaseStepper] = {
    StepperKind.SEMI_IMPLICIT: SEMI_IMPLICIT,
    StepperKind.EXPLICIT: EXPLICIT,
}


@dataclass(frozen=True)
class FlowState:
    curve: DiscreteCurve
    time: float
    cone: Cone
    spec: FlowSpec
    last_lambda: float = 0.0
    step_count: int = 0
    dt_current: float = 1.0
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if not self.dt_current > 0.0:
            raise InvalidInputError("FlowState invariant violated: dt_current must be positive")


@dataclass
class RunResult:
    series: Series
    state: FlowState
    snapshots: list[FlowState] = field(default_factory=list)


def initial_state(curve: DiscreteCurve, cone: Cone, spec: FlowSpec, tolerances: Optional[Tolerances] = None) -> FlowState:
    tolerances = tolerances or Tolerances()
    ghosts = apply_boundary_ghosts(curve, cone, tolerances.ghost_tol)
    state = FlowState(
        curve=curve,
        time=0.0,
        cone=cone,
        spec=spec,
        last_lambda=effective_lambda(curve, spec, ghosts),
        tolerances=tolerances,
    )
    return replace(state, dt_current=SEMI_IMPLICIT.nominal_dt(state))


def stability_dt(state: FlowState) -> float:
    """Explicit step bound sigma * h_min^4 for the fourth-order operator."""
    return EXPLICIT.nominal_dt(state)


def _project_endpoints(nodes: np.ndarray, cone: Cone) -> np.ndarray:
    nodes = np.array(nodes)
    nodes[0] = project_to_ray(Point2.of(nodes[0]), cone, Side.MINUS)
    nodes[-1] = project_to_ray(Point2.of(nodes[-1]), cone, Side.PLUS)
    return nodes


def _attempt(state: FlowState, stepper: BaseStepper, ghosts, dt: float):
    tol = state.tolerances
    advance = stepper.advance(state, ghosts, dt)
    curve = DiscreteCurve(_project_endpoints(DiscreteCurve(advance.nodes).nodes, state.cone))
    step_count = state.step_count + 1
    if step_count % tol.resample_every == 0:
        curve = resample_uniform(curve, curve.n_segments, tol.resample_tol, tol.resample_max_iter)
    if tip_distance(curve) < tol.tip_margin * arc_length(curve):
        raise TipCollisionError(
            f"t={state.time + dt:.6g}: an endpoint is {tip_distance(curve):.3e} from the cone tip"
        )
    candidate = replace(
        state,
        curve=curve,
        time=state.time + dt,
        last_lambda=advance.lambda_used,
        step_count=step_count,
        dt_current=dt,
    )
    return candidate, advance.max_speed


def _energy(state: FlowState) -> float:
    return energies(state.curve, state.spec)[1]


def step(state: FlowState, dt: Optional[float] = None) -> tuple[FlowState, StepReport]:
    """One accepted semi-implicit step, halving dt on rejection."""
    return _step_with_rejection(state, SEMI_IMPLICIT, dt if dt is not None else SEMI_IMPLICIT.nominal_dt(state))


def _step_with_rejection(state: FlowState, stepper: BaseStepper, dt: float) -> tuple[FlowState, StepReport]:
    tol = state.tolerances
    ghosts = apply_boundary_ghosts(state.curve, state.cone, tol.ghost_tol)
    energy_before = _energy(state)
    rejections = 0
    while True:
        try:
            candidate, max_speed = _attempt(state, stepper, ghosts, dt)
            residuals = boundary_residuals(candidate.curve, candidate.cone)
            energy_delta = _energy(candidate) - energy_before
            neumann_limit = neumann_tolerance(candidate.curve, tol.neumann_factor)
            if positional_residual(residuals) > tol.boundary_tol:
                reason = f"endpoint {positional_residual(residuals):.3e} off its ray"
            elif neumann_residual(residuals) > neumann_limit:
                reason = f"contact angle residual {neumann_residual(residuals):.3e} above {neumann_limit:.3e}"
            elif state.spec.mode == FlowMode.PENALISED and energy_delta > tol.energy_slack * (1.0 + abs(energy_before)):
                reason = f"energy increase {energy_delta:.3e}"
            else:
                LOGGER.debug("step %d accepted: t=%.6g dt=%.3e", candidate.step_count, candidate.time, dt)
                return candidate, StepReport(
                    accepted=True,
                    dt_used=dt,
                    energy_delta=energy_delta,
                    max_speed=max_speed,
                    residuals=residuals,
                    rejections=rejections,
                )
        except (InvalidInputError, StepperFailureError, BoundaryViolationError) as exc:
            reason = str(exc)

        rejections += 1
        LOGGER.warning("t=%.6g: step rejected (%s), halving dt=%.3e", state.time, reason, dt)
        if rejections > tol.max_rejections:
            raise StepperFailureError(f"t={state.time:.6g}: step rejected {rejections} times, last reason: {reason}")
        dt *= 0.5


def step_explicit(state: FlowState, dt: Optional[float] = None) -> tuple[FlowState, StepReport]:
    """One classical Runge-Kutta step; no rejection, instability raises StepperFailureError."""
    dt = dt if dt is not None else stability_dt(state)
    ghosts = apply_boundary_ghosts(state.curve, state.cone, state.tolerances.ghost_tol)
    energy_before = _energy(state)
    try:
        candidate, max_speed = _attempt(state, EXPLICIT, ghosts, dt)
    except InvalidInputError as exc:
        raise StepperFailureError(f"explicit step produced an invalid curve: {exc}") from exc
    residuals = boundary_residuals(candidate.curve, candidate.cone)
    return candidate, StepReport(
        accepted=True,
        dt_used=dt,
        energy_delta=_energy(candidate) - energy_before,
        max_speed=max_speed,
        residuals=residuals,
    )


def _frame(state: FlowState):
    # lambda_used is re-evaluated on the recorded curve so the frame is self-consistent
    ghosts = apply_boundary_ghosts(state.curve, state.cone, state.tolerances.ghost_tol)
    return compute_frame(replace(state, last_lambda=effective_lambda(state.curve, state.spec, ghosts)))


def _nominal_dt(state: FlowState, kind: StepperKind) -> float:
    return STEPPERS[kind].nominal_dt(state)


def run(config: ScenarioConfig, curve: DiscreteCurve) -> RunResult:
    """Integrate the configured flow from `curve` to t_end, recording a frame every output interval."""
    state = initial_state(curve, config.cone, config.flow, config.tolerances)
    kind = config.stepper.kind
    advance = step if kind == StepperKind.SEMI_IMPLICIT else step_explicit

    series = Series(metadata={"config_hash": config.config_hash(), "engine_version": __version__})
    series.append(_frame(state))
    result = RunResult(series=series, state=state, snapshots=[state])
    LOGGER.info(
        "run start: mode=%s omega=%.6g N=%d t_end=%g stepper=%s",
        config.flow.mode.value, config.cone.omega, curve.n_segments, config.time.t_end, kind.value,
    )

    t_end, cadence = config.time.t_end, config.time.output_every
    output_index = 1
    next_output = min(cadence, t_end)
    while state.time < t_end:
        dt = min(_nominal_dt(state, kind), next_output - state.time)
        try:
            state, report = advance(state, dt)
        except (StepperFailureError, TipCollisionError) as exc:
            result.state = state
            LOGGER.error("run aborted at t=%.6g after %d steps: %s", state.time, state.step_count, exc)
            raise RunAbortedError(exc, result) from exc
        if next_output - state.time <= 1e-12 * max(1.0, next_output):
            state = replace(state, time=next_output)
            frame = _frame(state)
            series.append(frame)
            result.snapshots.append(state)
            LOGGER.info(
                "t=%.6g L=%.10g E=%.10g ks2=%.3e omega=%.12g (%d steps)",
                frame.t, frame.L, frame.E_lambda, frame.ks2, frame.omega_num, state.step_count,
            )
            output_index += 1
            next_output = min(output_index * cadence, t_end)
            if t_end - next_output <= 1e-12 * max(1.0, t_end):
                next_output = t_end
        result.state = state

    LOGGER.info("run finished: t=%.6g, %d steps, %d frames", state.time, state.step_count, len(series.frames))
    return result
