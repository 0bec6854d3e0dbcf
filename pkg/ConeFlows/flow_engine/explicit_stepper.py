import logging

import numpy as np

from ConeFlows.cone_domain import apply_boundary_ghosts
from ConeFlows.curve_core import DiscreteCurve, ExtendedNodes, tangent_normal
from ConeFlows.errors import BoundaryViolationError, InvalidInputError, StepperFailureError
from ConeFlows.flow_engine.base_stepper import Advance, BaseStepper
from ConeFlows.flow_engine.speeds import effective_lambda, normal_speed
from ConeFlows.schemas import StepperKind

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)


class ExplicitStepper(BaseStepper):
    """Classical four-stage Runge-Kutta on d(alpha)/dt = V nu, ghosts rebuilt at every stage."""

    def __init__(self) -> None:
        super().__init__(kind=StepperKind.EXPLICIT)

    def nominal_dt(self, state) -> float:
        return state.tolerances.sigma_explicit * float(np.min(state.curve.segment_lengths)) ** 4

    @staticmethod
    def _velocity(state, nodes: np.ndarray, ghosts: ExtendedNodes = None):
        curve = DiscreteCurve(nodes)
        if ghosts is None:
            ghosts = apply_boundary_ghosts(curve, state.cone, state.tolerances.ghost_tol)
        lambda_used = effective_lambda(curve, state.spec, ghosts)
        speed = normal_speed(curve, state.spec, ghosts, lambda_used).values
        return speed[:, None] * tangent_normal(curve, ghosts).normal, lambda_used, float(np.max(np.abs(speed)))

    def advance(self, state, ghosts: ExtendedNodes, dt: float) -> Advance:
        start = state.curve.nodes
        try:
            k1, lambda_used, max_speed = self._velocity(state, start, ghosts)
            k2 = self._velocity(state, start + 0.5 * dt * k1)[0]
            k3 = self._velocity(state, start + 0.5 * dt * k2)[0]
            k4 = self._velocity(state, start + dt * k3)[0]
        except (InvalidInputError, BoundaryViolationError, FloatingPointError) as exc:
            raise StepperFailureError(f"explicit stage evaluation failed: {exc}") from exc

        delta = dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(delta)):
            raise StepperFailureError("explicit step produced non-finite values")
        # a stable step moves every node by far less than the grid spacing
        largest = float(np.max(np.linalg.norm(delta, axis=1)))
        if largest > float(np.min(state.curve.segment_lengths)):
            raise StepperFailureError(
                f"explicit step unstable at dt={dt:.3e}: node displacement {largest:.3e} exceeds the grid spacing"
            )
        return Advance(nodes=start + delta, max_speed=max_speed, lambda_used=lambda_used)
