from ConeFlows.curve_core.curve import DiscreteCurve, ExtendedNodes, FrameField, Point2, ScalarField
from ConeFlows.curve_core.geometry import (
    arc_length,
    average_curvature,
    curvature,
    curvature_derivative,
    curvature_norms,
    curve_distance,
    divergence_form_residual,
    enclosed_area,
    integrate,
    length_variation,
    psw_gaps,
    resample_uniform,
    rescaled_embedding,
    rotation_number,
    tangent_normal,
)
