from ConeFlows.diagnostics.energies import compute_frame, energies, epsilon, gamma
from ConeFlows.diagnostics.monitors import (
    curvature_cube_reference,
    decay_fit,
    derivative_bound_monitor,
    epsilon_control_window,
    fit_decay,
    gamma_bound,
    l4_rate,
    l4_residual,
    lambda_bounds,
    rescaled_curvature_deviation,
)
from ConeFlows.diagnostics.thresholds import (
    OMEGA_BOUND_CONSTRAINED,
    OMEGA_BOUND_PENALISED,
    c_hat,
    delta_star,
    epsilon_star,
    free_flow_constants,
    length_bounds,
    smallness_constrained,
    smallness_penalised,
    smallness_penalised_derived,
    smallness_rate,
    threshold_report,
)
