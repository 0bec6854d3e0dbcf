"""Closed-form curves, configs and frames shared by the tests."""

import math
from typing import Optional

import numpy as np
from scipy.integrate import quad

from ConeFlows.curve_core import DiscreteCurve
from ConeFlows.schemas import BoundaryResiduals, Cone, DiagnosticsFrame, ScenarioConfig

ELLIPSE_START = 0.9 * math.pi
ELLIPSE_STOP = 0.1 * math.pi


def symmetric_cone(omega: float) -> Cone:
    return Cone(theta1=math.pi / 2 + math.pi * omega, theta2=math.pi / 2 - math.pi * omega)


def ellipse_params(n: int) -> np.ndarray:
    # decreasing parameter runs the ellipse clockwise, so curvature is positive
    return np.linspace(ELLIPSE_START, ELLIPSE_STOP, n + 1)


def ellipse_arc(a: float, b: float, n: int) -> DiscreteCurve:
    t = ellipse_params(n)
    return DiscreteCurve(np.column_stack((a * np.cos(t), b * np.sin(t))))


def ellipse_curvature(a: float, b: float, t: np.ndarray) -> np.ndarray:
    return a * b / (a**2 * np.sin(t) ** 2 + b**2 * np.cos(t) ** 2) ** 1.5


def ellipse_length(a: float, b: float) -> float:
    return quad(lambda t: math.sqrt(a**2 * math.sin(t) ** 2 + b**2 * math.cos(t) ** 2), ELLIPSE_STOP, ELLIPSE_START, epsabs=1e-14, epsrel=1e-14)[0]


def ellipse_sector_area(a: float, b: float) -> float:
    return 0.5 * a * b * (ELLIPSE_START - ELLIPSE_STOP)


def straight_line(n: int = 16) -> DiscreteCurve:
    s = np.linspace(0.0, 1.0, n + 1)
    return DiscreteCurve(np.column_stack((s, np.zeros_like(s))))


def scenario(
    omega: float = 0.15,
    mode: str = "penalised",
    lambda_: float = 0.5,
    r0: float = 1.0,
    N: int = 32,
    t_end: float = 0.05,
    output_every: Optional[float] = None,
    modes: str = "",
    **tolerances,
) -> ScenarioConfig:
    cone = symmetric_cone(omega)
    return ScenarioConfig.model_validate({
        "cone": {"theta1": cone.theta1, "theta2": cone.theta2},
        "flow": {"mode": mode, "lambda": lambda_ if mode == "penalised" else 0.0},
        "init": {"r0": r0, "modes": modes},
        "grid": {"N": N},
        "time": {"t_end": t_end, "output_every": output_every},
        "tolerances": tolerances,
    })


def config_text(omega: float = 0.15, mode: str = "penalised", lambda_: float = 0.5, N: int = 16, t_end: float = 0.01, extra: str = "") -> str:
    cone = symmetric_cone(omega)
    lines = [
        "# scenario used by the tests",
        f"cone.theta1 = {cone.theta1!r}",
        f"cone.theta2 = {cone.theta2!r}",
        f"flow.mode = {mode}",
        f"flow.lambda = {lambda_ if mode == 'penalised' else 0.0!r}",
        "init.r0 = 1.0",
        f"grid.N = {N}",
        f"time.t_end = {t_end!r}",
    ]
    return "\n".join(lines) + "\n" + extra


def synthetic_frame(t: float, **fields) -> DiagnosticsFrame:
    values = {
        "t": t,
        "L": 1.0,
        "A": 0.5,
        "E0": 0.5,
        "E_lambda": 1.0,
        "ks2": 1e-3,
        "ks2_l": [1.0, 1e-3, 1e-2, 1e-1],
        "epsilon": 1e-3,
        "gamma": 1e-3,
        "kbar": 1.0,
        "omega_num": 0.15,
        "lambda_used": 0.5,
        "residuals": BoundaryResiduals(
            neumann_minus=0.0, neumann_plus=0.0, flux_minus=0.0, flux_plus=0.0, on_ray_minus=0.0, on_ray_plus=0.0
        ),
        "tip_dist": 1.0,
        "kmax_dev": 0.0,
        "rescaled_kdev": 0.0,
        "psw_l2_gap": 0.0,
        "psw_sup_gap": 0.0,
    }
    values.update(fields)
    return DiagnosticsFrame(**values)
