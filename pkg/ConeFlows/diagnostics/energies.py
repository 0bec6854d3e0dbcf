import logging
from typing import Optional

import numpy as np

from ConeFlows.cone_domain import apply_boundary_ghosts, boundary_residuals, tip_distance
from ConeFlows.curve_core import (
    DiscreteCurve,
    ExtendedNodes,
    arc_length,
    curvature,
    curvature_norms,
    enclosed_area,
    integrate,
    psw_gaps,
    rotation_number,
)
from ConeFlows.curve_core.geometry import DEGENERATE_K2
from ConeFlows.errors import BoundaryViolationError, DegenerateCurvatureError
from ConeFlows.schemas import DiagnosticsFrame, FlowMode, FlowSpec

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)


def energies(curve: DiscreteCurve, spec: FlowSpec, ghosts: Optional[ExtendedNodes] = None) -> tuple[float, float]:
    """(E0, E_lambda). Only the penalised flow adds a length term; constrained runs monitor E0."""
    k = curvature(curve, ghosts)
    e0 = 0.5 * integrate(k.values**2, curve)
    if spec.mode == FlowMode.PENALISED:
        return e0, e0 + spec.lambda_ * arc_length(curve)
    return e0, e0


def epsilon(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> float:
    ks2 = curvature_norms(curve, ghosts, lmax=1)[1]
    return arc_length(curve) ** 3 * ks2


def gamma(curve: DiscreteCurve, ghosts: Optional[ExtendedNodes] = None) -> float:
    k2, ks2 = curvature_norms(curve, ghosts, lmax=1)
    if k2 < DEGENERATE_K2:
        raise DegenerateCurvatureError(f"gamma needs int k^2 ds > {DEGENERATE_K2:g}, got {k2:.3e}")
    return ks2 / k2**3


def compute_frame(state) -> DiagnosticsFrame:
    curve, cone = state.curve, state.cone
    try:
        ghosts = apply_boundary_ghosts(curve, cone, state.tolerances.ghost_tol)
    except BoundaryViolationError as exc:
        LOGGER.warning("t=%.6g: diagnostics fall back to one-sided stencils (%s)", state.time, exc)
        ghosts = None

    length = arc_length(curve)
    norms = curvature_norms(curve, ghosts, lmax=3)
    k = curvature(curve, ghosts).values
    kbar = integrate(k, curve) / length
    e0, e_lambda = energies(curve, state.spec, ghosts)
    l2_gap, sup_gap = psw_gaps(curve, ghosts)

    return DiagnosticsFrame(
        t=state.time,
        L=length,
        A=enclosed_area(curve, ghosts),
        E0=e0,
        E_lambda=e_lambda,
        ks2=norms[1],
        ks2_l=norms,
        epsilon=length**3 * norms[1],
        gamma=norms[1] / norms[0] ** 3 if norms[0] >= DEGENERATE_K2 else None,
        kbar=kbar,
        omega_num=rotation_number(curve, ghosts),
        lambda_used=state.last_lambda,
        residuals=boundary_residuals(curve, cone),
        tip_dist=tip_distance(curve),
        kmax_dev=float(np.max(np.abs(k - kbar))),
        rescaled_kdev=float(np.max(np.abs(length * k - 2.0 * np.pi * state.cone.omega))),
        psw_l2_gap=l2_gap,
        psw_sup_gap=sup_gap,
    )
