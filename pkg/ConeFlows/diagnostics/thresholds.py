"""Closed-form smallness thresholds and constants behind the convergence results.

Everything is evaluated in numpy.longdouble, and differences of nearly equal square
roots are rewritten in their conjugate form.
"""

import logging
import math
from typing import Optional

import numpy as np

from ConeFlows.cone_domain import apply_boundary_ghosts
from ConeFlows.curve_core import DiscreteCurve, arc_length, curvature_norms
from ConeFlows.diagnostics.energies import energies
from ConeFlows.errors import InvalidInputError
from ConeFlows.schemas import FlowMode, FreeFlowConstants, ScenarioConfig, ThresholdReport

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

OMEGA_BOUND_PENALISED = 1.0 / math.sqrt(28.0)
OMEGA_BOUND_CONSTRAINED = (15.0 / 6592.0) ** 0.25

LD = np.longdouble
PI = LD("3.141592653589793238462643383279502884")
BISECTION_RTOL = 1e-12
BISECTION_MAX_ITER = 400


def _require_positive(**values) -> None:
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0.0):
            raise InvalidInputError(f"{name} must be a finite positive number, got {value}")


def _b_coefficient(omega) -> np.longdouble:
    omega = LD(omega)
    return 176 * omega**3 + 20 * omega


def length_bounds(E_lambda_0: float, omega: float, lambda_: float) -> tuple[float, float]:
    """Lower length bound 2 pi^2 omega^2 / E and upper bound E / lambda along a penalised run."""
    _require_positive(E_lambda_0=E_lambda_0, omega=omega, lambda_=lambda_)
    energy = LD(E_lambda_0)
    return float(2 * PI**2 * LD(omega) ** 2 / energy), float(energy / LD(lambda_))


def smallness_penalised(omega: float, L_lower: float, L_upper: float, lambda_: float) -> float:
    """Bound on int k_s^2 ds for the penalised flow, in the closed form as published.

    2 pi^7 / (56 lambda Ll^2 + 20 pi^2)^2 * (sqrt(B^2 + D) - B)^2 with
    B = 176 w^3 + 20 w and D = (14 lambda Lu^2 + 5 pi^2) / (4 pi^2).
    """
    _require_positive(omega=omega, L_lower=L_lower, L_upper=L_upper, lambda_=lambda_)
    if omega > OMEGA_BOUND_PENALISED:
        LOGGER.warning("omega=%.6g exceeds 1/sqrt(28); penalised threshold reported but hypothesis fails", omega)
    lam, lower, upper = LD(lambda_), LD(L_lower), LD(L_upper)
    b = _b_coefficient(omega)
    d = (14 * lam * upper**2 + 5 * PI**2) / (4 * PI**2)
    prefactor = 2 * PI**7 / (56 * lam * lower**2 + 20 * PI**2) ** 2
    root = d / (np.sqrt(b**2 + d) + b)
    return float(prefactor * root**2)


def smallness_penalised_derived(omega: float, L_upper: float, lambda_: float) -> float:
    """Square of the positive root x of (28 lambda Lu^2/pi^2 + 10) Lu^3/pi^3 x^2 + B sqrt(2 Lu^3/pi^3) x = 1/8.

    This is the condition that keeps the leading coefficient of the int k_s^2 estimate
    negative; unlike the published closed form it shrinks as the upper length bound grows.
    """
    _require_positive(omega=omega, L_upper=L_upper, lambda_=lambda_)
    lam, upper = LD(lambda_), LD(L_upper)
    quadratic = (28 * lam * upper**2 / PI**2 + 10) * upper**3 / PI**3
    linear = _b_coefficient(omega) * np.sqrt(2 * upper**3 / PI**3)
    root = LD(0.25) / (linear + np.sqrt(linear**2 + quadratic / 2))
    return float(root**2)


def constrained_quartic(omega: float, L0: float):
    """Callable f(x) whose smallest positive root bounds ||k_s||_2 for the constrained flow, and delta = f(0)."""
    w2, length = LD(2) * LD(omega), LD(L0)
    scale3 = length**3 / PI**3
    delta = LD(15) / 8 - LD(103) / 2 * w2**4
    c4 = 28 * length**6 / PI**6
    c3 = 14 * LD(2) ** LD(2.5) * LD(omega) * (length / PI) ** LD(4.5)
    c2 = (10 + 2 / (PI * w2**2) + 22 * w2**2) * scale3
    c1 = (22 * w2**3 + 10 * w2) * np.sqrt(2 * scale3) + 14 * w2**3 * length / PI

    def quartic(x):
        x = np.asarray(x, dtype=LD)
        return delta - c4 * x**4 - c3 * x**3 - c2 * x**2 - c1 * x

    return quartic, float(delta)


def smallness_constrained(omega: float, L0: float) -> float:
    """Smallest positive root of the constrained quartic, by doubling then bisection."""
    _require_positive(omega=omega, L0=L0)
    if omega >= OMEGA_BOUND_CONSTRAINED:
        LOGGER.warning("omega=%.6g is not below (15/6592)^(1/4); constrained hypothesis fails", omega)
    quartic, delta = constrained_quartic(omega, L0)
    if delta <= 0.0:
        return 0.0

    lo, hi = LD(0), LD(1)
    while quartic(hi) > 0:
        hi *= 2
    # all non-constant coefficients are negative, so the root in (lo, hi] is unique
    for _ in range(BISECTION_MAX_ITER):
        mid = (lo + hi) / 2
        if quartic(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BISECTION_RTOL * hi:
            break
    root = float((lo + hi) / 2)
    assert root > 0.0, "constrained quartic lost its positive root"
    return root


def epsilon_star(omega: float) -> float:
    """(pi^3/200) (sqrt(B^2 + 5/4) - B)^2, the free-flow threshold on L^3 int k_s^2."""
    _require_positive(omega=omega)
    b = _b_coefficient(omega)
    root = LD(1.25) / (np.sqrt(b**2 + LD(1.25)) + b)
    return float(PI**3 / 200 * root**2)


def c_hat(beta: float, omega: float) -> float:
    _require_positive(beta=beta, omega=omega)
    b, w = LD(beta), LD(omega)
    return float(4 * b / PI**3 + 16 * np.sqrt(2 * w**2 / PI**3) * np.sqrt(b) + 48 * w**2)


def smallness_rate(level: float, omega: float) -> float:
    """level * C(level, omega) + 32 w^4 pi^4: the growth rate of L^4 while epsilon stays below `level`."""
    w = LD(omega)
    return float(LD(level) * LD(c_hat(level, omega)) + 32 * w**4 * PI**4)


def delta_star(eps: float, beta: float, omega: float) -> float:
    """Horizon (in units of L^4) on which epsilon stays below beta, starting from eps."""
    _require_positive(beta=beta, omega=omega)
    if eps < 0.0 or eps > beta:
        raise InvalidInputError(f"delta_star needs 0 <= eps <= beta, got eps={eps}, beta={beta}")
    if eps == 0.0:
        return math.inf
    return float(((LD(beta) / LD(eps)) ** (LD(4) / 3) - 1) / LD(smallness_rate(beta, omega)))


def free_flow_constants(beta: float, omega: float, epsilon1: float, eps: Optional[float] = None) -> FreeFlowConstants:
    """Constants of the free-flow estimates.

    C is always evaluated at the smallness level of the estimate it enters: `c_hat` and
    `delta_star` belong to the level beta, while c2 = smallness_rate(epsilon1) and c1
    belong to the level epsilon1 the Gamma decay holds at. With beta = epsilon1 every
    constant refers to the same level.
    """
    _require_positive(beta=beta, omega=omega, epsilon1=epsilon1)
    w = LD(omega)
    c2 = LD(smallness_rate(epsilon1, omega))
    c1 = 48 * w**4 * PI**4 / (5 * c2)
    return FreeFlowConstants(
        beta=beta,
        omega=omega,
        c_hat=c_hat(beta, omega),
        delta_star=delta_star(eps, beta, omega) if eps is not None else None,
        c1=float(c1),
        c2=float(c2),
    )


def threshold_report(config: ScenarioConfig, curve: DiscreteCurve) -> ThresholdReport:
    """Every threshold that applies to the configured cone and flow, evaluated on the initial curve."""
    cone, flow = config.cone, config.flow
    omega = cone.omega
    ghosts = apply_boundary_ghosts(curve, cone, config.tolerances.ghost_tol)
    length = arc_length(curve)
    ks2 = curvature_norms(curve, ghosts, lmax=1)[1]
    measured_epsilon = length**3 * ks2

    report = {
        "mode": flow.mode,
        "omega": omega,
        "L0": length,
        "epsilon_star": epsilon_star(omega),
        "measured_ks2": ks2,
        "measured_epsilon": measured_epsilon,
    }
    by_theorem = {FlowMode.FREE: measured_epsilon <= report["epsilon_star"]}

    if flow.mode == FlowMode.PENALISED:
        e_lambda = energies(curve, flow, ghosts)[1]
        lower, upper = length_bounds(e_lambda, omega, flow.lambda_)
        printed = smallness_penalised(omega, lower, upper, flow.lambda_)
        report.update(
            E_lambda0=e_lambda,
            L_lower=lower,
            L_upper=upper,
            smallness_penalised=printed,
            smallness_penalised_derived=smallness_penalised_derived(omega, upper, flow.lambda_),
        )
        by_theorem[FlowMode.PENALISED] = omega <= OMEGA_BOUND_PENALISED and ks2 <= printed

    if omega < OMEGA_BOUND_CONSTRAINED:
        report["smallness_constrained"] = smallness_constrained(omega, length)
        by_theorem[FlowMode.CONSTRAINED] = math.sqrt(ks2) <= report["smallness_constrained"]
    else:
        by_theorem[FlowMode.CONSTRAINED] = False

    met = by_theorem.get(flow.mode, False)
    if not met:
        LOGGER.warning("hypotheses of the %s convergence result are not met (omega=%.6g, ks2=%.3e)", flow.mode.value, omega, ks2)
    LOGGER.info("threshold report: mode=%s omega=%.6g eps0=%.3e hypotheses_met=%s", flow.mode.value, omega, measured_epsilon, met)
    return ThresholdReport(**report, hypotheses_met=met, hypotheses_by_theorem=by_theorem)
