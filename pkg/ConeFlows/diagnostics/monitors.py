import logging
import math
from typing import Callable, Optional, Union

import numpy as np

from ConeFlows.curve_core import DiscreteCurve, ExtendedNodes, arc_length, curvature, curvature_norms, integrate
from ConeFlows.diagnostics.thresholds import c_hat, delta_star, free_flow_constants
from ConeFlows.errors import InvalidInputError
from ConeFlows.schemas import DiagnosticsFrame, Series

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

FieldSelector = Union[str, Callable[[DiagnosticsFrame], float]]
MIN_FIT_POINTS = 10


def _growth(omega: float) -> float:
    return 32.0 * omega**4 * math.pi**4


def _select(series: Series, selector: FieldSelector) -> np.ndarray:
    if callable(selector):
        return np.array([selector(frame) for frame in series.frames], dtype=float)
    return np.array(series.column(selector), dtype=float)


def l4_residual(series: Series, omega: float) -> float:
    """Worst normalised deviation of L^4(t) from L^4(0) + 32 w^4 pi^4 t over the series."""
    if not series.frames:
        raise InvalidInputError("l4_residual needs a nonempty series")
    t = _select(series, "t")
    l4 = _select(series, "L") ** 4
    rate = _growth(omega)
    deviation = np.abs(l4 - l4[0] - rate * (t - t[0]))
    return float(np.max(deviation / np.maximum(1.0, rate * (t - t[0]))))


def fit_decay(t: np.ndarray, values: np.ndarray, mode: str = "exponential", time_scale: float = 1.0) -> tuple[float, float]:
    """Least-squares slope of log(values) against t, or against log(1 + t/time_scale) in power mode."""
    t, values = np.asarray(t, dtype=float), np.asarray(values, dtype=float)
    if t.shape[0] < MIN_FIT_POINTS:
        raise InvalidInputError(f"decay fits need at least {MIN_FIT_POINTS} samples, got {t.shape[0]}")
    if np.any(values <= 0.0):
        raise InvalidInputError("decay fits need strictly positive samples")
    match mode:
        case "exponential":
            x = t
        case "power":
            x = np.log1p(t / time_scale)
        case _:
            raise InvalidInputError(f"unknown decay fit mode '{mode}'")
    y = np.log(values)
    slope = float(np.polyfit(x, y, 1)[0])
    quality = float(abs(np.corrcoef(x, y)[0, 1]))
    return slope, quality


def decay_fit(
    series: Series,
    selector: FieldSelector = "ks2",
    window: Optional[tuple[float, float]] = None,
    mode: str = "exponential",
    skip_fraction: float = 0.2,
) -> tuple[float, float]:
    """(rate, quality) of the selected quantity; without a window the first skip_fraction of frames is dropped."""
    t = _select(series, "t")
    values = _select(series, selector)
    if window is None:
        keep = np.arange(t.shape[0]) >= int(skip_fraction * t.shape[0])
    else:
        keep = (t >= window[0]) & (t <= window[1])
    time_scale = series.frames[0].L ** 4 if series.frames else 1.0
    rate, quality = fit_decay(t[keep], values[keep], mode=mode, time_scale=time_scale)
    LOGGER.info("decay fit (%s, %s): rate=%.6g quality=%.6f over %d frames", mode, selector if isinstance(selector, str) else "custom", rate, quality, int(keep.sum()))
    return rate, quality


def derivative_bound_monitor(series: Series, lmax: int = 3, atol: float = 1e-12) -> dict[int, dict[str, bool]]:
    """Per order l, whether int k_{s^l}^2 stays bounded and whether it decreased over the final half.

    Bounded means every value after the first 10% of frames is within 10x the running median.
    """
    frames = series.frames
    flags = {}
    for order in range(lmax + 1):
        values = np.array([frame.ks2_l[order] for frame in frames], dtype=float)
        start = max(1, int(0.1 * values.shape[0]))
        bounded = all(
            values[i] <= 10.0 * np.median(values[: i + 1]) + atol for i in range(start, values.shape[0])
        )
        half = values.shape[0] // 2
        decreasing = bool(values[-1] <= values[half] * (1.0 + 1e-6) + atol) if values.size else True
        flags[order] = {"bounded": bool(bounded), "decreasing": decreasing}
    return flags


def rescaled_curvature_deviation(curve: DiscreteCurve, omega: float, ghosts: Optional[ExtendedNodes] = None) -> float:
    """||L k - 2 pi w||_inf; on centred arcs only the O(h^2) offset of the polygon length remains."""
    k = curvature(curve, ghosts).values
    return float(np.max(np.abs(arc_length(curve) * k - 2.0 * math.pi * omega)))


def lambda_bounds(curve: DiscreteCurve, L0: float, omega: float, ghosts: Optional[ExtendedNodes] = None) -> tuple[float, float]:
    """Interval that contains the length multiplier of the constrained flow."""
    k = curvature(curve, ghosts)
    ks2 = curvature_norms(curve, ghosts, lmax=1)[1]
    kbar = integrate(k, curve) / arc_length(curve)
    lower = -L0 * ks2 / (2.0 * math.pi * omega) ** 2
    upper = 2.0 * L0 / math.pi * ks2 + kbar**2
    return lower, upper


def l4_rate(curve: DiscreteCurve, omega: float, ghosts: Optional[ExtendedNodes] = None) -> float:
    """Free-flow dL^4/dt from the current curve."""
    length = arc_length(curve)
    k = curvature(curve, ghosts)
    ks2 = curvature_norms(curve, ghosts, lmax=1)[1]
    kbar = integrate(k, curve) / length
    dev = k.values - kbar
    coupling = integrate(dev**4 + 4.0 * dev**3 * kbar + 6.0 * dev**2 * kbar**2, curve)
    return -4.0 * length**3 * ks2 + 2.0 * length**3 * coupling + _growth(omega)


def gamma_bound(series: Series, omega: float, epsilon1: float) -> float:
    """max_t Gamma(t) - Gamma(0) (1 + c2 t / L^4(0))^(-c1); nonpositive when the decay estimate holds."""
    frames = [frame for frame in series.frames if frame.gamma is not None]
    if not frames:
        raise InvalidInputError("gamma_bound needs frames with a defined gamma")
    constants = free_flow_constants(epsilon1, omega, epsilon1)
    first = frames[0]
    l4_first = first.L**4
    excess = [
        frame.gamma - first.gamma * (1.0 + constants.c2 * (frame.t - first.t) / l4_first) ** (-constants.c1)
        for frame in frames
    ]
    return float(max(excess))


def epsilon_control_window(series: Series, beta: float, omega: float) -> float:
    """L^4(0) delta_*(eps(0), beta): time over which eps(t) <= beta is guaranteed."""
    if not series.frames:
        raise InvalidInputError("epsilon_control_window needs a nonempty series")
    first = series.frames[0]
    return first.L**4 * delta_star(first.epsilon, beta, omega)


def curvature_cube_reference(t: float, L0: float, omega: float, epsilon1: float) -> float:
    """8 w^3 pi^3 / (L0^4 + (32 w^4 pi^4 - eps1 C(eps1, w)) t)^(3/4)."""
    base = L0**4 + (_growth(omega) - epsilon1 * c_hat(epsilon1, omega)) * t
    if not base > 0.0:
        raise InvalidInputError(f"curvature reference undefined: base {base:.3e} is not positive at t={t}")
    return 8.0 * omega**3 * math.pi**3 / base**0.75
