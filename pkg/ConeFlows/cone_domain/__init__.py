from ConeFlows.cone_domain.boundary import (
    apply_boundary_ghosts,
    boundary_residuals,
    neumann_residual,
    neumann_tolerance,
    positional_residual,
)
from ConeFlows.cone_domain.cone import (
    centred_arc,
    distance_to_ray,
    project_to_ray,
    ray_normal,
    ray_unit,
    reference_radius,
    reflection_matrix,
    tip_distance,
)
