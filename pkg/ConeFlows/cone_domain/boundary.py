"""Ghost nodes and boundary-condition residuals at the two ray endpoints."""

import logging

import numpy as np

from ConeFlows.cone_domain.cone import distance_to_ray, ray_normal, ray_unit, reflection_matrix
from ConeFlows.curve_core import DiscreteCurve, ExtendedNodes, arc_length, curvature, tangent_normal
from ConeFlows.curve_core.stencils import one_sided_d1
from ConeFlows.errors import BoundaryViolationError
from ConeFlows.schemas import BoundaryResiduals, Cone, Side

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

GHOST_PAD = 2


def _extend(nodes: np.ndarray, reflect_minus: np.ndarray, reflect_plus: np.ndarray, pad: int) -> ExtendedNodes:
    # ghost -j is the mirror image of node j, ghost N+j of node N-j
    left = nodes[pad:0:-1] @ reflect_minus.T
    right = nodes[-2 : -pad - 2 : -1] @ reflect_plus.T
    return ExtendedNodes(
        points=np.vstack((left, nodes, right)),
        pad=pad,
        reflect_minus=reflect_minus,
        reflect_plus=reflect_plus,
    )


def apply_boundary_ghosts(
    curve: DiscreteCurve, cone: Cone, tol: float = 1e-9, pad: int = GHOST_PAD
) -> ExtendedNodes:
    """Mirror the nodes next to each endpoint across that endpoint's ray.

    The mirror images make the central tangent at the endpoint perpendicular to the
    ray and make curvature even about the endpoint, so central stencils see k_s = 0.
    """
    limit = tol * arc_length(curve)
    for side, index in ((Side.MINUS, 0), (Side.PLUS, -1)):
        offset = distance_to_ray(curve.nodes[index], cone, side)
        if offset > limit:
            raise BoundaryViolationError(
                f"{side.value} endpoint is {offset:.3e} from its ray (allowed {limit:.3e})"
            )
    return _extend(
        curve.nodes,
        reflection_matrix(ray_unit(cone, Side.MINUS)),
        reflection_matrix(ray_unit(cone, Side.PLUS)),
        pad,
    )


def boundary_residuals(curve: DiscreteCurve, cone: Cone) -> BoundaryResiduals:
    """Neumann, curvature-flux and on-ray residuals at both endpoints.

    Everything is read off the nodes alone: the endpoint normal comes from the
    second-order one-sided tangent and the flux from the one-sided derivative of the
    extrapolated curvature. The Neumann residual is therefore zero only up to
    `neumann_tolerance`.
    """
    nodes = curve.nodes
    normal = tangent_normal(curve).normal
    k = curvature(curve).values
    h = curve.segment_lengths

    return BoundaryResiduals(
        neumann_minus=abs(float(np.dot(normal[0], ray_normal(cone, Side.MINUS)))),
        neumann_plus=abs(float(np.dot(normal[-1], ray_normal(cone, Side.PLUS)))),
        flux_minus=abs(float(one_sided_d1(k, h))),
        flux_plus=abs(float(one_sided_d1(k, h, at_end=True))),
        on_ray_minus=distance_to_ray(nodes[0], cone, Side.MINUS),
        on_ray_plus=distance_to_ray(nodes[-1], cone, Side.PLUS),
    )


def neumann_tolerance(curve: DiscreteCurve, factor: float = 1.0) -> float:
    """factor * (h_max * kappa)^2 with kappa = max(max|k|, 1/L): the truncation level of the one-sided tangent."""
    k = curvature(curve).values
    kappa = max(float(np.max(np.abs(k))), 1.0 / arc_length(curve))
    return factor * (float(np.max(curve.segment_lengths)) * kappa) ** 2


def positional_residual(residuals: BoundaryResiduals) -> float:
    """Largest distance of an endpoint from its ray."""
    return max(residuals.on_ray_minus, residuals.on_ray_plus)


def neumann_residual(residuals: BoundaryResiduals) -> float:
    return max(residuals.neumann_minus, residuals.neumann_plus)
