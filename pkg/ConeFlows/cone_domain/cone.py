import logging
import math
from typing import Optional

import numpy as np

from ConeFlows.curve_core import DiscreteCurve, Point2
from ConeFlows.errors import InvalidInputError, TipCollisionError
from ConeFlows.schemas import Cone, ReferenceKind, Side

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)


def ray_unit(cone: Cone, side: Side) -> Point2:
    theta = cone.theta(side)
    return Point2(math.cos(theta), math.sin(theta))


def ray_normal(cone: Cone, side: Side) -> Point2:
    theta = cone.theta(side)
    return Point2(-math.sin(theta), math.cos(theta))


def reflection_matrix(direction) -> np.ndarray:
    """Reflection across the line through the origin along `direction`."""
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    return 2.0 * np.outer(e, e) - np.eye(2)


def project_to_ray(p: Point2, cone: Cone, side: Side) -> Point2:
    e = ray_unit(cone, side).as_array()
    along = float(np.dot(p, e))
    if along <= 0.0:
        raise TipCollisionError(f"point {tuple(p)} projects onto or behind the cone tip on the {side.value} ray")
    return Point2.of(along * e)


def distance_to_ray(p, cone: Cone, side: Side) -> float:
    p = np.asarray(p, dtype=float)
    along = float(np.dot(p, ray_unit(cone, side).as_array()))
    if along < 0.0:
        return float(np.linalg.norm(p))
    return abs(float(np.dot(p, ray_normal(cone, side).as_array())))


def tip_distance(curve: DiscreteCurve) -> float:
    return float(min(np.linalg.norm(curve.nodes[0]), np.linalg.norm(curve.nodes[-1])))


def centred_arc(cone: Cone, r: float, n: int) -> DiscreteCurve:
    """Circle of radius r about the tip, from the theta1 ray to the theta2 ray, uniform in angle."""
    if not r > 0.0:
        raise InvalidInputError(f"centred arc radius must be positive, got {r}")
    theta = np.linspace(cone.theta1, cone.theta2, n + 1)
    return DiscreteCurve(r * np.column_stack((np.cos(theta), np.sin(theta))))


def reference_radius(
    kind: ReferenceKind,
    *,
    lambda_: Optional[float] = None,
    L0: Optional[float] = None,
    omega: Optional[float] = None,
    r0: Optional[float] = None,
    t: float = 0.0,
) -> float:
    """Radius of the centred arc each flow is expected to approach or follow."""
    match kind:
        case ReferenceKind.STATIONARY:
            if not lambda_ or lambda_ <= 0.0:
                raise InvalidInputError("the stationary radius needs lambda > 0")
            return 1.0 / math.sqrt(2.0 * lambda_)
        case ReferenceKind.FIXED_LENGTH:
            if not L0 or not omega:
                raise InvalidInputError("the fixed-length radius needs L0 and omega")
            return L0 / (2.0 * math.pi * omega)
        case ReferenceKind.SELF_SIMILAR:
            if not r0 or r0 <= 0.0:
                raise InvalidInputError("the self-similar radius needs r0 > 0")
            return (r0**4 + 2.0 * t) ** 0.25
    raise InvalidInputError(f"unknown reference kind {kind}")
