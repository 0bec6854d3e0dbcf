"""Pass/fail checks of a recorded series against the behaviour each flow is known to have."""

import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel

from ConeFlows.diagnostics import c_hat, decay_fit
from ConeFlows.diagnostics.monitors import MIN_FIT_POINTS, l4_residual
from ConeFlows.errors import InvalidInputError
from ConeFlows.schemas import FlowMode, ScenarioConfig, Series, ThresholdReport

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

ROTATION_TOL = 1e-6
# about 6x the trapezoid error of int k ds on a uniformly sampled arc
ROTATION_RESOLUTION = 0.25
ON_RAY_TOL = 1e-9
# twice the default Tolerances.neumann_factor
NEUMANN_FACTOR = 2.0
PSW_SLACK = 1e-10
ENERGY_SLACK = 1e-6
LENGTH_BOUND_TOL = 1e-3
LENGTH_DRIFT_TOL = 1e-4
LAMBDA_SLACK = 1e-8
CONVERGENCE_TOL = 1e-2
GAMMA_SLACK = 1e-10
L4_TOL = 1e-3
L4_PERTURBED_TOL = 5e-3
DECAY_QUALITY = 0.95
# int k_s^2 ds below this is roundoff on a discrete arc
DECAY_FLOOR = 1e-18


class CheckResult(BaseModel):
    name: str
    passed: bool
    value: float
    limit: float
    asserted: bool = True


def _upper(name: str, value: float, limit: float, asserted: bool = True) -> CheckResult:
    return CheckResult(name=name, passed=bool(value <= limit), value=float(value), limit=float(limit), asserted=asserted)


def _worst_increase(values: np.ndarray, relative: bool) -> float:
    """Largest frame-to-frame increase, optionally scaled by 1 + |previous|."""
    if values.shape[0] < 2:
        return 0.0
    increase = np.diff(values)
    if relative:
        increase = increase / (1.0 + np.abs(values[:-1]))
    return float(max(np.max(increase), 0.0))


def _decay_check(name: str, series: Series, selector: str, mode: str, skip_fraction: float, asserted: bool) -> CheckResult:
    """Decay rate fitted over the frames still above the roundoff floor; not asserted when too few remain."""
    above = [frame for frame in series.frames if getattr(frame, selector) is not None and getattr(frame, selector) > DECAY_FLOOR]
    usable = Series(frames=above[int(skip_fraction * len(above)):])
    if len(usable.frames) < MIN_FIT_POINTS:
        LOGGER.info("%s: only %d frames above the roundoff floor, fit skipped", name, len(usable.frames))
        return CheckResult(name=name, passed=True, value=math.nan, limit=0.0, asserted=False)
    try:
        rate, quality = decay_fit(usable, selector, mode=mode, skip_fraction=0.0)
    except InvalidInputError as exc:
        LOGGER.warning("%s: %s", name, exc)
        return CheckResult(name=name, passed=False, value=math.nan, limit=0.0, asserted=asserted)
    passed = rate < 0.0 and quality >= DECAY_QUALITY
    return CheckResult(name=name, passed=passed, value=rate, limit=0.0, asserted=asserted)


def rotation_tolerance(omega: float, n_segments: int) -> float:
    """ROTATION_TOL plus the trapezoid error of int k ds on a resolved arc, omega (2 pi omega / N)^2 / 24, with margin."""
    turn = 2.0 * math.pi * omega / n_segments
    return ROTATION_TOL + ROTATION_RESOLUTION * omega * turn**2


def _neumann_excess(frame, n_segments: int) -> float:
    # neumann_tolerance with h_max ~ L / N and max|k| <= |kbar| + kmax_dev
    kappa = max(abs(frame.kbar) + frame.kmax_dev, 1.0 / frame.L)
    limit = NEUMANN_FACTOR * (frame.L / n_segments * kappa) ** 2
    residuals = frame.residuals
    return max(residuals.neumann_minus, residuals.neumann_plus) / limit


def _common_checks(series: Series, config: ScenarioConfig) -> list[CheckResult]:
    omega, n_segments = config.cone.omega, config.grid.N
    rotation = max(abs(frame.omega_num - omega) for frame in series.frames)
    psw = min(min(frame.psw_l2_gap, frame.psw_sup_gap) for frame in series.frames)
    on_ray = max(max(frame.residuals.on_ray_minus, frame.residuals.on_ray_plus) / frame.L for frame in series.frames)
    return [
        _upper("rotation_number", rotation, rotation_tolerance(omega, n_segments)),
        _upper("psw_inequalities", -psw, PSW_SLACK),
        _upper("endpoints_on_rays", on_ray, ON_RAY_TOL),
        _upper("contact_angle", max(_neumann_excess(frame, n_segments) for frame in series.frames), 1.0),
    ]


def _penalised_checks(series: Series, config: ScenarioConfig, report: Optional[ThresholdReport], converge: bool) -> list[CheckResult]:
    frames = series.frames
    lam = config.flow.lambda_
    checks = [_upper("energy_monotone", _worst_increase(np.array(series.column("E_lambda")), relative=True), ENERGY_SLACK)]
    if report is not None and report.L_lower is not None and report.L_upper is not None:
        tol = LENGTH_BOUND_TOL * report.L_upper
        lengths = np.array(series.column("L"))
        excess = max(float(np.max(lengths - report.L_upper)), float(np.max(report.L_lower - lengths)))
        checks.append(_upper("length_bounds", excess, tol))
    last = frames[-1]
    # ||k - sqrt(2 lambda)||_inf <= max|k - kbar| + |kbar - sqrt(2 lambda)|
    checks.append(_upper("curvature_limit", last.kmax_dev + abs(last.kbar - math.sqrt(2.0 * lam)), CONVERGENCE_TOL, converge))
    checks.append(_decay_check("ks2_decay", series, "ks2", "exponential", config.tolerances.decay_skip_fraction, converge))
    return checks


def _constrained_checks(series: Series, config: ScenarioConfig, converge: bool) -> list[CheckResult]:
    omega = config.cone.omega
    first, last = series.frames[0], series.frames[-1]
    lengths = np.array(series.column("L"))
    drift = float(np.max(np.abs(lengths - first.L))) / first.L

    worst_lambda = 0.0
    for frame in series.frames:
        lower = -first.L * frame.ks2 / (2.0 * math.pi * omega) ** 2
        upper = 2.0 * first.L / math.pi * frame.ks2 + frame.kbar**2
        worst_lambda = max(worst_lambda, lower - frame.lambda_used, frame.lambda_used - upper)

    return [
        _upper("length_conserved", drift, LENGTH_DRIFT_TOL),
        _upper("energy_monotone", _worst_increase(np.array(series.column("E0")), relative=True), ENERGY_SLACK),
        _upper("lambda_bounds", worst_lambda, LAMBDA_SLACK),
        _upper("limit_radius", abs(last.L * last.kbar / (2.0 * math.pi * omega) - 1.0), CONVERGENCE_TOL, converge),
        _upper("curvature_uniform", last.kmax_dev / abs(last.kbar), CONVERGENCE_TOL, converge),
    ]


def _free_checks(series: Series, config: ScenarioConfig, converge: bool) -> list[CheckResult]:
    omega = config.cone.omega
    first, last = series.frames[0], series.frames[-1]
    beta = first.epsilon
    limit = L4_TOL
    if beta > DECAY_FLOOR:
        elapsed = last.t - first.t
        rate = 32.0 * omega**4 * math.pi**4
        limit = L4_PERTURBED_TOL + beta * c_hat(beta, omega) * elapsed / max(1.0, rate * elapsed)

    gammas = np.array([frame.gamma for frame in series.frames if frame.gamma is not None])
    kdev = np.array(series.column("rescaled_kdev"))
    return [
        _upper("l4_growth", l4_residual(series, omega), limit),
        _upper("gamma_monotone", _worst_increase(gammas, relative=False), GAMMA_SLACK),
        _decay_check("gamma_decay", series, "gamma", "power", config.tolerances.decay_skip_fraction, converge),
        _upper("rescaled_curvature_decreasing", _worst_increase(kdev, relative=False), GAMMA_SLACK),
        _upper("rescaled_curvature_limit", float(kdev[-1]), CONVERGENCE_TOL, converge),
    ]


def acceptance_checks(series: Series, config: ScenarioConfig, report: Optional[ThresholdReport] = None) -> list[CheckResult]:
    """Every check that applies to the run's flow mode.

    Convergence checks are asserted only when the report says the initial curve meets the
    hypotheses of the corresponding convergence result.
    """
    if not series.frames:
        raise InvalidInputError("acceptance checks need a nonempty series")
    converge = report.hypotheses_met if report is not None else True
    checks = _common_checks(series, config)
    match config.flow.mode:
        case FlowMode.PENALISED:
            checks += _penalised_checks(series, config, report, converge)
        case FlowMode.CONSTRAINED:
            checks += _constrained_checks(series, config, converge)
        case FlowMode.FREE:
            checks += _free_checks(series, config, converge)

    failed = [check.name for check in checks if check.asserted and not check.passed]
    if failed:
        LOGGER.warning("%d asserted checks failed: %s", len(failed), ", ".join(failed))
    else:
        LOGGER.info("all %d asserted checks passed", sum(check.asserted for check in checks))
    return checks
