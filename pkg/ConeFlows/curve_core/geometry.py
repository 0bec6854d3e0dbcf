import logging
from typing import Optional, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import splev, splprep

from ConeFlows.curve_core.curve import DiscreteCurve, ExtendedNodes, FrameField, ScalarField
from ConeFlows.curve_core.stencils import (
    central_d1,
    central_d2,
    chords,
    extrapolate_ends,
    menger_curvature,
    mirror_extend,
    one_sided_d1,
)
from ConeFlows.errors import InvalidInputError, UnsupportedOrderError
from ConeFlows.schemas import TWO_PI

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

MAX_DERIVATIVE_ORDER = 4
# below this int k^2 ds a curve counts as straight
DEGENERATE_K2 = 1e-14


def _core_rows(ghosts: ExtendedNodes, n_nodes: int) -> slice:
    # interior-stencil output row r corresponds to extended node r + 1
    return slice(ghosts.pad - 1, ghosts.pad - 1 + n_nodes)


def _rotate_ccw(vectors: np.ndarray) -> np.ndarray:
    return np.column_stack((-vectors[:, 1], vectors[:, 0]))


def arc_length(curve: DiscreteCurve) -> float:
    return float(np.sum(curve.segment_lengths))


def resample_uniform(curve: DiscreteCurve, n: int, tol: float = 1e-13, max_iter: int = 60) -> DiscreteCurve:
    """Redistribute n+1 nodes at equal arc-length spacing along a centripetal cubic through the input.

    Endpoints are kept bit-for-bit. The spline parameter increments are rescaled by the
    inverse of the chord they produce until all chords agree within `tol` (relative).
    """
    if n < 8:
        raise InvalidInputError(f"resampling needs n >= 8, got {n}")
    nodes = curve.nodes
    knots = np.concatenate(([0.0], np.cumsum(np.sqrt(curve.segment_lengths))))
    tck, _ = splprep([nodes[:, 0], nodes[:, 1]], u=knots, s=0, k=3)
    total = knots[-1]

    du = np.full(n, total / n)
    spread = np.inf
    for _ in range(max_iter):
        u = np.concatenate(([0.0], np.cumsum(du)))
        u[-1] = total
        points = np.column_stack(splev(u, tck))
        points[0], points[-1] = nodes[0], nodes[-1]
        seg = chords(points)
        mean = seg.mean()
        spread = float(np.max(np.abs(seg / mean - 1.0)))
        if spread <= tol:
            break
        du = du * (mean / seg)
        du *= total / du.sum()
    else:
        LOGGER.warning("resample_uniform: chord spread %.3e above tolerance %.1e after %d iterations", spread, tol, max_iter)
    LOGGER.debug("resample_uniform: %d -> %d segments, chord spread %.3e", curve.n_segments, n, spread)
    return DiscreteCurve(points)


def tangent_normal(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> FrameField:
    if ghosts is not None:
        points = ghosts.points
        tangent = central_d1(points, chords(points))[_core_rows(ghosts, len(curve))]
    else:
        nodes, h = curve.nodes, curve.segment_lengths
        tangent = np.vstack((
            one_sided_d1(nodes, h),
            central_d1(nodes, h),
            one_sided_d1(nodes, h, at_end=True),
        ))
    tangent = tangent / np.linalg.norm(tangent, axis=1)[:, None]
    return FrameField(tangent=tangent, normal=_rotate_ccw(tangent))


def curvature(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> ScalarField:
    if ghosts is not None:
        values = menger_curvature(ghosts.points)[_core_rows(ghosts, len(curve))]
    else:
        values = extrapolate_ends(menger_curvature(curve.nodes), curve.segment_lengths)
    return ScalarField(values, tag="k")


def curvature_derivative(field: ScalarField, curve: DiscreteCurve, order: int) -> ScalarField:
    """Arc-length derivative of the given order, k_s = 0 imposed at both ends by even reflection."""
    if not 1 <= order <= MAX_DERIVATIVE_ORDER:
        raise UnsupportedOrderError(f"curvature derivatives are supported for orders 1..{MAX_DERIVATIVE_ORDER}, got {order}")
    field.check_matches(curve)
    values, h = field.values, curve.segment_lengths
    for _ in range(order // 2):
        values = central_d2(*mirror_extend(values, h, 1))
    if order % 2:
        values = central_d1(*mirror_extend(values, h, 1))
    return ScalarField(values, tag=f"{field.tag}_s{order}")


def integrate(field: Union[ScalarField, np.ndarray], curve: DiscreteCurve) -> float:
    if not isinstance(field, ScalarField):
        field = ScalarField(np.asarray(field, dtype=float), tag="integrand")
    field.check_matches(curve)
    return float(trapezoid(field.values, x=curve.arc_parameter))


def average_curvature(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> float:
    return integrate(curvature(curve, ghosts), curve) / arc_length(curve)


def rotation_number(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> float:
    """(1 / 2 pi) int k ds; on a resolved curve meeting both rays perpendicularly this is omega up to O(h^2)."""
    return integrate(curvature(curve, ghosts), curve) / TWO_PI


def length_variation(curve: DiscreteCurve, velocity: np.ndarray) -> float:
    """d/dt of the polygon length when node i moves with velocity[i]: sum over segments of tau . d(velocity)."""
    velocity = np.asarray(velocity, dtype=float)
    if velocity.shape != curve.nodes.shape:
        raise InvalidInputError(f"velocity of shape {velocity.shape} does not match nodes of shape {curve.nodes.shape}")
    directions = np.diff(curve.nodes, axis=0) / curve.segment_lengths[:, None]
    return float(np.sum(directions * np.diff(velocity, axis=0)))


def enclosed_area(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> float:
    normal = tangent_normal(curve, ghosts).normal
    return 0.5 * integrate(np.einsum("ij,ij->i", curve.nodes, normal), curve)


def curvature_norms(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None, lmax: int = 3) -> list[float]:
    """[int k^2 ds, int k_s^2 ds, ..., int k_{s^lmax}^2 ds]."""
    k = curvature(curve, ghosts)
    norms = [integrate(k.values**2, curve)]
    for order in range(1, lmax + 1):
        norms.append(integrate(curvature_derivative(k, curve, order).values ** 2, curve))
    return norms


def divergence_form_residual(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> float:
    """Max-norm of d/ds(-k_s nu + k^2 tau / 2) + (k_ss + k^3 / 2) nu.

    With ghosts the flux field is continued by the ghost reflections and every node is
    checked; without them the three nodes nearest each end are skipped.
    """
    frame = tangent_normal(curve, ghosts)
    k = curvature(curve, ghosts)
    k_s = curvature_derivative(k, curve, 1).values
    k_ss = curvature_derivative(k, curve, 2).values
    flux = -k_s[:, None] * frame.normal + 0.5 * (k.values**2)[:, None] * frame.tangent
    source = (k_ss + 0.5 * k.values**3)[:, None] * frame.normal
    h = curve.segment_lengths

    if ghosts is not None and ghosts.reflect_minus is not None and ghosts.reflect_plus is not None:
        # the flux field is odd under the ghost reflections
        extended = np.vstack((-ghosts.reflect_minus @ flux[1], flux, -ghosts.reflect_plus @ flux[-2]))
        h_ext = np.concatenate(([h[0]], h, [h[-1]]))
        residual = central_d1(extended, h_ext) + source
    else:
        residual = (central_d1(flux, h) + source[1:-1])[2:-2]
    return float(np.max(np.linalg.norm(residual, axis=1)))


def psw_gaps(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> tuple[float, float]:
    """Slack in the two Poincare-Sobolev-Wirtinger curvature inequalities (>= 0 when they hold)."""
    length = arc_length(curve)
    k = curvature(curve, ghosts)
    ks2 = integrate(curvature_derivative(k, curve, 1).values ** 2, curve)
    deviation = k.values - integrate(k, curve) / length
    l2_gap = (length**2 / np.pi**2) * ks2 + 1e-8 * (1.0 + ks2) - integrate(deviation**2, curve)
    sup_gap = (2.0 * length / np.pi) * ks2 + 1e-8 - float(np.max(np.abs(deviation))) ** 2
    return float(l2_gap), float(sup_gap)


def curve_distance(a: DiscreteCurve, b: DiscreteCurve, n: int) -> float:
    """Sup distance between corresponding nodes after resampling both curves at n segments."""
    return float(np.max(np.linalg.norm(resample_uniform(a, n).nodes - resample_uniform(b, n).nodes, axis=1)))


def rescaled_embedding(curve: DiscreteCurve) -> DiscreteCurve:
    return curve.scaled(1.0 / arc_length(curve))
