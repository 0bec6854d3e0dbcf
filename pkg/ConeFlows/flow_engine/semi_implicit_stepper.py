import logging
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from ConeFlows.cone_domain import apply_boundary_ghosts, ray_normal, ray_unit
from ConeFlows.curve_core import DiscreteCurve, ExtendedNodes, arc_length, curvature, length_variation, tangent_normal
from ConeFlows.curve_core.stencils import chords, d2_weights
from ConeFlows.errors import InvalidInputError, StepperFailureError
from ConeFlows.flow_engine.base_stepper import Advance, BaseStepper
from ConeFlows.flow_engine.speeds import effective_lambda, normal_speed
from ConeFlows.schemas import FlowMode, Side, StepperKind

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

# interleaved (x, y) unknowns with a five-node stencil
BANDWIDTH = (5, 5)
LENGTH_MAX_ITER = 20


class BandedSystem(NamedTuple):
    ab: np.ndarray
    rhs: np.ndarray
    lambda_used: float
    speed: np.ndarray
    k: np.ndarray
    # d(rhs)/d(lambda), negated: moving lambda by mu subtracts mu times this column
    multiplier_rhs: np.ndarray


def fourth_derivative_weights(h_ext: np.ndarray) -> np.ndarray:
    """Five-point weights of D2(D2 f) at nodes 0..N of a grid carrying two ghosts per end.

    `h_ext` holds the N+4 spacings of the extended grid; row i gives the weights of
    nodes i-2..i+2.
    """
    a, b, c = d2_weights(h_ext)  # entry m belongs to node m-1
    a_i, b_i, c_i = a[1:-1], b[1:-1], c[1:-1]
    a_prev, b_prev, c_prev = a[:-2], b[:-2], c[:-2]
    a_next, b_next, c_next = a[2:], b[2:], c[2:]
    return np.column_stack((
        a_i * a_prev,
        a_i * b_prev + b_i * a_i,
        a_i * c_prev + b_i**2 + c_i * a_next,
        b_i * c_i + c_i * b_next,
        c_i * c_next,
    ))


def to_banded(matrix: np.ndarray, lower: int, upper: int) -> np.ndarray:
    size = matrix.shape[0]
    ab = np.zeros((lower + upper + 1, size))
    for offset in range(-lower, upper + 1):
        diagonal = np.diagonal(matrix, offset)
        if offset >= 0:
            ab[upper - offset, offset:] = diagonal
        else:
            ab[upper - offset, : size + offset] = diagonal
    return ab


def assemble_semi_implicit(state, dt: float, ghosts: Optional[ExtendedNodes] = None) -> BandedSystem:
    """(I + dt D4) delta = dt V nu, with D4 acting on positions over the frozen current spacing.

    Ghost columns are folded back onto interior unknowns through the ray reflections.
    The two rows of each endpoint become the along-ray component of its equation and
    the constraint that it does not leave its ray.
    """
    if not dt > 0.0:
        raise InvalidInputError(f"time step must be positive, got {dt}")
    curve, cone = state.curve, state.cone
    if ghosts is None:
        ghosts = apply_boundary_ghosts(curve, cone, state.tolerances.ghost_tol)

    n_last = curve.n_segments
    size = 2 * (n_last + 1)
    weights = fourth_derivative_weights(chords(ghosts.points))
    identity = np.eye(2)

    matrix = np.eye(size)
    for i in range(n_last + 1):
        for offset, w in zip(range(-2, 3), weights[i]):
            j, block = i + offset, identity
            if j < 0:
                j, block = -j, ghosts.reflect_minus
            elif j > n_last:
                j, block = 2 * n_last - j, ghosts.reflect_plus
            matrix[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] += dt * w * block

    lambda_used = effective_lambda(curve, state.spec, ghosts)
    speed = normal_speed(curve, state.spec, ghosts, lambda_used).values
    normal = tangent_normal(curve, ghosts).normal
    rhs = (dt * speed[:, None] * normal).ravel()
    k = curvature(curve, ghosts).values
    multiplier_rhs = (dt * k[:, None] * normal).ravel()

    for node, side in ((0, Side.MINUS), (n_last, Side.PLUS)):
        e = ray_unit(cone, side).as_array()
        rows = slice(2 * node, 2 * node + 2)
        along = e @ matrix[rows]
        matrix[2 * node] = along
        rhs[2 * node] = e @ rhs[rows]
        multiplier_rhs[2 * node] = e @ multiplier_rhs[rows]
        matrix[2 * node + 1] = 0.0
        matrix[2 * node + 1, rows] = ray_normal(cone, side).as_array()
        rhs[2 * node + 1] = 0.0
        multiplier_rhs[2 * node + 1] = 0.0

    return BandedSystem(
        ab=to_banded(matrix, *BANDWIDTH),
        rhs=rhs,
        lambda_used=lambda_used,
        speed=speed,
        k=k,
        multiplier_rhs=multiplier_rhs,
    )


def _banded_solve(ab: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        solution = solve_banded(BANDWIDTH, ab, rhs)
    except (LinAlgError, ValueError) as exc:
        raise StepperFailureError(f"semi-implicit system could not be solved: {exc}") from exc
    if not np.all(np.isfinite(solution)):
        raise StepperFailureError("semi-implicit solve produced non-finite values")
    return solution


def solve_semi_implicit(system: BandedSystem) -> np.ndarray:
    return _banded_solve(system.ab, system.rhs).reshape(-1, 2)


def length_preserving_shift(
    curve: DiscreteCurve, delta: np.ndarray, response: np.ndarray, tol: float, max_iter: int = LENGTH_MAX_ITER
) -> float:
    """Shift mu of the multiplier for which curve + delta - mu * response has the length of curve.

    Newton on the polygon length, which is smooth in mu; `tol` is relative to the length.
    """
    target = arc_length(curve)
    mu = 0.0
    excess = math.inf
    for _ in range(max_iter):
        moved = DiscreteCurve(curve.nodes + delta - mu * response)
        excess = arc_length(moved) - target
        if abs(excess) <= tol * target:
            return mu
        slope = -length_variation(moved, response)
        if slope == 0.0:
            break
        mu -= excess / slope
    raise StepperFailureError(f"length multiplier did not converge: length off by {excess:.3e} after {max_iter} iterations")


class SemiImplicitStepper(BaseStepper):
    def __init__(self) -> None:
        super().__init__(kind=StepperKind.SEMI_IMPLICIT)

    def nominal_dt(self, state) -> float:
        return state.tolerances.sigma_semi_implicit * float(np.min(state.curve.segment_lengths)) ** 2

    def advance(self, state, ghosts: ExtendedNodes, dt: float) -> Advance:
        system = assemble_semi_implicit(state, dt, ghosts)
        if state.spec.mode != FlowMode.CONSTRAINED:
            delta = solve_semi_implicit(system)
            lambda_used, speed = system.lambda_used, system.speed
        else:
            # the step is affine in lambda, so lambda is fixed by the length of the stepped polygon
            both = _banded_solve(system.ab, np.column_stack((system.rhs, system.multiplier_rhs)))
            delta, response = both[:, 0].reshape(-1, 2), both[:, 1].reshape(-1, 2)
            mu = length_preserving_shift(state.curve, delta, response, state.tolerances.length_tol)
            delta = delta - mu * response
            lambda_used, speed = system.lambda_used + mu, system.speed - mu * system.k
            LOGGER.debug("length multiplier %.12g (shift %.3e)", lambda_used, mu)
        LOGGER.debug("semi-implicit step dt=%.3e max|delta|=%.3e", dt, float(np.max(np.abs(delta))))
        return Advance(
            nodes=state.curve.nodes + delta,
            max_speed=float(np.max(np.abs(speed))),
            lambda_used=lambda_used,
        )
