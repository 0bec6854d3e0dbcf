from typing import Optional

from ConeFlows.curve_core import (
    DiscreteCurve,
    ExtendedNodes,
    ScalarField,
    curvature,
    curvature_derivative,
    length_variation,
    tangent_normal,
)
from ConeFlows.curve_core.geometry import DEGENERATE_K2
from ConeFlows.errors import DegenerateCurvatureError
from ConeFlows.schemas import FlowMode, FlowSpec


def bending_speed(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> ScalarField:
    """k_ss + k^3 / 2, the part of V that does not depend on lambda."""
    k = curvature(curve, ghosts)
    k_ss = curvature_derivative(k, curve, 2)
    return ScalarField(k_ss.values + 0.5 * k.values**3, tag="W")


def lambda_constrained(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> float:
    """Multiplier that makes the polygon length stationary under V nu.

    The length variation of (k_ss + k^3/2) nu divided by that of k nu, both taken with
    the same stencils as V; this approximates int k (k_ss + k^3/2) ds / int k^2 ds.
    """
    k = curvature(curve, ghosts).values
    normal = tangent_normal(curve, ghosts).normal
    stretch = length_variation(curve, k[:, None] * normal)
    if abs(stretch) < DEGENERATE_K2:
        raise DegenerateCurvatureError(f"length variation {stretch:.3e} of k nu is too small to fix the length multiplier")
    return length_variation(curve, bending_speed(curve, ghosts).values[:, None] * normal) / stretch


def effective_lambda(curve: DiscreteCurve, spec: FlowSpec, ghosts: Optional[ExtendedNodes] = None) -> float:
    match spec.mode:
        case FlowMode.PENALISED:
            return spec.lambda_
        case FlowMode.CONSTRAINED:
            return lambda_constrained(curve, ghosts)
        case _:
            return 0.0


def normal_speed(
    curve: DiscreteCurve,
    spec: FlowSpec,
    ghosts: Optional[ExtendedNodes] = None,
    lambda_: Optional[float] = None,
) -> ScalarField:
    """V = k_ss + k^3 / 2 - lambda k; nodes move by V nu."""
    if lambda_ is None:
        lambda_ = effective_lambda(curve, spec, ghosts)
    k = curvature(curve, ghosts)
    return ScalarField(bending_speed(curve, ghosts).values - lambda_ * k.values, tag="V")
