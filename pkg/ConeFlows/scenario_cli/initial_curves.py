import logging

import numpy as np

from ConeFlows.cone_domain import boundary_residuals, neumann_residual, project_to_ray, tip_distance
from ConeFlows.curve_core import DiscreteCurve, Point2, arc_length, resample_uniform
from ConeFlows.diagnostics.thresholds import threshold_report
from ConeFlows.errors import InvalidConfigError, InvalidInputError, TipCollisionError
from ConeFlows.schemas import PerturbationMode, ScenarioConfig, Side

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

MAX_COMPLIANT_AMPLITUDE = 0.199


def mode_amplitudes(config: ScenarioConfig) -> dict[int, float]:
    """Explicit cosine-mode amplitudes plus the seeded random ones, summed per mode."""
    init = config.init
    amplitudes: dict[int, float] = {}
    for mode in init.modes:
        amplitudes[mode.j] = amplitudes.get(mode.j, 0.0) + mode.a
    if init.random_modes:
        rng = np.random.default_rng(init.seed)
        drawn = rng.uniform(-init.random_amplitude, init.random_amplitude, size=init.random_modes)
        for j, a in enumerate(drawn, start=1):
            amplitudes[j] = amplitudes.get(j, 0.0) + float(a)
    return amplitudes


def polar_radius(config: ScenarioConfig, theta: np.ndarray) -> np.ndarray:
    cone = config.cone
    phase = np.pi * (theta - cone.theta2) / (cone.theta1 - cone.theta2)
    profile = np.ones_like(theta)
    for j, a in sorted(mode_amplitudes(config).items()):
        profile += a * np.cos(j * phase)
    return config.init.r0 * profile


def gen_initial(config: ScenarioConfig) -> DiscreteCurve:
    """Polar graph over the cone, resampled to equal spacing with endpoints snapped onto the rays.

    Cosine modes have vanishing odd derivatives at both rays, so the graph meets each ray
    perpendicularly and its curvature is even about each endpoint.
    """
    cone, n = config.cone, config.grid.N
    amplitudes = mode_amplitudes(config)
    if sum(abs(a) for a in amplitudes.values()) >= 1.0:
        raise InvalidConfigError([f"init.modes: amplitudes {amplitudes} can reach the cone tip (sum of |a_j| must stay below 1)"])

    theta = np.linspace(cone.theta1, cone.theta2, n + 1)
    rho = polar_radius(config, theta)
    try:
        sampled = DiscreteCurve(rho[:, None] * np.column_stack((np.cos(theta), np.sin(theta))))
        curve = resample_uniform(sampled, n, config.tolerances.resample_tol, config.tolerances.resample_max_iter)
        nodes = np.array(curve.nodes)
        nodes[0] = project_to_ray(Point2.of(nodes[0]), cone, Side.MINUS)
        nodes[-1] = project_to_ray(Point2.of(nodes[-1]), cone, Side.PLUS)
        curve = DiscreteCurve(nodes)
    except (InvalidInputError, TipCollisionError) as exc:
        raise InvalidConfigError([f"init: generated curve is not admissible: {exc}"]) from exc

    if tip_distance(curve) < config.tolerances.tip_margin * arc_length(curve):
        raise InvalidConfigError(["init: generated curve starts within the tip margin"])
    residuals = boundary_residuals(curve, cone)
    LOGGER.info(
        "initial curve: N=%d L=%.10g modes=%s contact angle residual %.3e, flux residual %.3e",
        n, arc_length(curve), amplitudes, neumann_residual(residuals), max(residuals.flux_minus, residuals.flux_plus),
    )
    return curve


def with_single_mode(config: ScenarioConfig, j: int, a: float) -> ScenarioConfig:
    init = config.init.model_copy(update={"modes": [PerturbationMode(j=j, a=a)], "random_modes": 0})
    return config.model_copy(update={"init": init})


def largest_compliant_amplitude(config: ScenarioConfig, j: int = 2, tol: float = 1e-6) -> float:
    """Largest amplitude of cosine mode j whose curve satisfies the configured mode's smallness hypothesis."""
    def compliant(a: float) -> bool:
        candidate = with_single_mode(config, j, a)
        report = threshold_report(candidate, gen_initial(candidate))
        return report.hypotheses_by_theorem.get(config.flow.mode, False)

    if not compliant(0.0):
        LOGGER.warning("no compliant amplitude: the unperturbed arc already fails the %s hypotheses", config.flow.mode.value)
        return 0.0
    lo, hi = 0.0, MAX_COMPLIANT_AMPLITUDE
    if compliant(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if compliant(mid):
            lo = mid
        else:
            hi = mid
    LOGGER.info("largest compliant amplitude for mode j=%d: %.6g", j, lo)
    return lo
