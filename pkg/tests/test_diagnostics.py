"""
    Energies, smallness thresholds and the monitors evaluated along a run.
"""

import math

import numpy as np
import pytest
from analytic_curves import scenario, straight_line, symmetric_cone, synthetic_frame

from ConeFlows.cone_domain import apply_boundary_ghosts, centred_arc
from ConeFlows.curve_core import arc_length
from ConeFlows.diagnostics import (
    OMEGA_BOUND_CONSTRAINED,
    OMEGA_BOUND_PENALISED,
    c_hat,
    compute_frame,
    curvature_cube_reference,
    decay_fit,
    delta_star,
    derivative_bound_monitor,
    energies,
    epsilon,
    epsilon_control_window,
    epsilon_star,
    fit_decay,
    free_flow_constants,
    gamma,
    gamma_bound,
    l4_rate,
    l4_residual,
    lambda_bounds,
    length_bounds,
    rescaled_curvature_deviation,
    smallness_constrained,
    smallness_penalised,
    smallness_penalised_derived,
    smallness_rate,
    threshold_report,
)
from ConeFlows.diagnostics.thresholds import constrained_quartic
from ConeFlows.errors import DegenerateCurvatureError, InvalidInputError
from ConeFlows.flow_engine import initial_state, lambda_constrained
from ConeFlows.scenario_cli.initial_curves import gen_initial
from ConeFlows.schemas import FlowMode, FlowSpec, Series


def _arc(omega=0.15, r=1.0, n=64):
    cone = symmetric_cone(omega)
    curve = centred_arc(cone, r, n)
    return curve, apply_boundary_ghosts(curve, cone)


def _b(omega):
    return 176.0 * omega**3 + 20.0 * omega


def test_energies_of_arc():
    curve, ghosts = _arc(r=2.0)
    length = arc_length(curve)
    e0, e_lambda = energies(curve, FlowSpec(mode=FlowMode.PENALISED, lambda_=0.3), ghosts)
    assert e0 == pytest.approx(0.125 * length, rel=1e-12)
    assert e_lambda == pytest.approx(0.125 * length + 0.3 * length, rel=1e-12)
    assert energies(curve, FlowSpec(mode=FlowMode.FREE), ghosts) == pytest.approx((e0, e0))


def test_scale_invariants_vanish_on_arc():
    curve, ghosts = _arc()
    assert epsilon(curve, ghosts) < 1e-10
    assert gamma(curve, ghosts) < 1e-10


def test_gamma_needs_curvature():
    with pytest.raises(DegenerateCurvatureError):
        gamma(straight_line())


def test_omega_bounds():
    assert OMEGA_BOUND_PENALISED == pytest.approx(0.18898, abs=1e-5)
    assert OMEGA_BOUND_CONSTRAINED == pytest.approx(0.21841, abs=1e-5)


def test_length_bounds():
    lower, upper = length_bounds(2.0, 0.15, 0.5)
    assert lower == pytest.approx(2.0 * math.pi**2 * 0.15**2 / 2.0, rel=1e-14)
    assert upper == pytest.approx(4.0, rel=1e-14)
    with pytest.raises(InvalidInputError):
        length_bounds(-1.0, 0.15, 0.5)


@pytest.mark.parametrize("omega,lam,lower,upper", [(0.15, 0.5, 0.47, 1.88), (0.1, 2.0, 0.2, 0.9), (0.18, 0.1, 1.0, 12.0)])
def test_penalised_smallness_matches_quadratic_root(omega, lam, lower, upper):
    b = _b(omega)
    d = (14.0 * lam * upper**2 + 5.0 * math.pi**2) / (4.0 * math.pi**2)
    p = 2.0 * math.pi**7 / (56.0 * lam * lower**2 + 20.0 * math.pi**2) ** 2
    roots = np.roots([1.0, 2.0 * b * math.sqrt(p), -p * d])
    oracle = max(roots.real) ** 2
    assert smallness_penalised(omega, lower, upper, lam) == pytest.approx(oracle, rel=1e-9)


def test_derived_penalised_smallness_solves_its_quadratic():
    omega, lam, upper = 0.15, 0.5, 1.88
    x = math.sqrt(smallness_penalised_derived(omega, upper, lam))
    scale = upper**3 / math.pi**3
    quadratic = (28.0 * lam * upper**2 / math.pi**2 + 10.0) * scale
    linear = _b(omega) * math.sqrt(2.0 * scale)
    assert quadratic * x**2 + linear * x == pytest.approx(0.125, rel=1e-12)


def test_derived_penalised_smallness_shrinks_with_upper_length():
    values = [smallness_penalised_derived(0.15, upper, 0.5) for upper in (0.5, 1.0, 2.0, 4.0)]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))


def test_constrained_smallness_is_the_first_root():
    for omega, length in ((0.1, 0.6), (0.2, 1.26), (0.21, 3.0)):
        quartic, delta = constrained_quartic(omega, length)
        root = smallness_constrained(omega, length)
        assert delta > 0.0
        assert root > 0.0
        assert quartic(root * (1.0 - 1e-9)) > 0.0
        assert quartic(root * (1.0 + 1e-9)) < 0.0
        grid = np.linspace(0.0, root * (1.0 - 1e-9), 2001)
        assert np.all(quartic(grid) > 0.0)


def test_constrained_smallness_vanishes_above_the_angle_bound():
    assert constrained_quartic(0.25, 1.0)[1] < 0.0
    assert smallness_constrained(0.25, 1.0) == 0.0


def test_epsilon_star_closed_form():
    for omega in (0.05, 0.15, 0.3):
        b = _b(omega)
        expected = math.pi**3 / 200.0 * (math.sqrt(b**2 + 1.25) - b) ** 2
        assert epsilon_star(omega) == pytest.approx(expected, rel=1e-9)


def test_free_flow_constants():
    beta, omega = 1e-4, 0.3
    expected_c_hat = 4.0 * beta / math.pi**3 + 16.0 * math.sqrt(2.0 * omega**2 / math.pi**3) * math.sqrt(beta) + 48.0 * omega**2
    assert c_hat(beta, omega) == pytest.approx(expected_c_hat, rel=1e-12)
    constants = free_flow_constants(beta, omega, beta, eps=1e-5)
    c2 = beta * expected_c_hat + 32.0 * omega**4 * math.pi**4
    assert constants.c2 == pytest.approx(c2, rel=1e-12)
    assert constants.c1 == pytest.approx(48.0 * omega**4 * math.pi**4 / (5.0 * c2), rel=1e-12)
    assert constants.delta_star > 0.0


def test_free_flow_constants_evaluate_c_at_their_own_level():
    beta, epsilon1, omega, eps = 1e-4, 4e-4, 0.3, 1e-5
    growth = 32.0 * omega**4 * math.pi**4
    constants = free_flow_constants(beta, omega, epsilon1, eps=eps)
    assert constants.c_hat == pytest.approx(c_hat(beta, omega), rel=1e-12)
    assert smallness_rate(beta, omega) == pytest.approx(beta * c_hat(beta, omega) + growth, rel=1e-12)
    assert constants.c2 == pytest.approx(epsilon1 * c_hat(epsilon1, omega) + growth, rel=1e-12)
    assert constants.c1 * 5.0 * constants.c2 == pytest.approx(48.0 * omega**4 * math.pi**4, rel=1e-12)
    expected_delta = ((beta / eps) ** (4.0 / 3.0) - 1.0) / smallness_rate(beta, omega)
    assert constants.delta_star == pytest.approx(expected_delta, rel=1e-12)


def test_delta_star_edges():
    assert delta_star(0.0, 1e-3, 0.2) == math.inf
    assert delta_star(1e-3, 1e-3, 0.2) == 0.0
    with pytest.raises(InvalidInputError):
        delta_star(2e-3, 1e-3, 0.2)


def test_threshold_report_penalised_small_angle():
    config = scenario(omega=0.15, lambda_=0.5, N=32)
    report = threshold_report(config, gen_initial(config))
    assert report.hypotheses_met
    assert report.smallness_penalised > 0.0
    assert report.smallness_penalised_derived > 0.0
    assert report.L_lower < report.L0 < report.L_upper


def test_threshold_report_penalised_wide_angle():
    config = scenario(omega=0.25, lambda_=0.5, N=32)
    report = threshold_report(config, gen_initial(config))
    assert not report.hypotheses_met
    assert not report.hypotheses_by_theorem[FlowMode.PENALISED]


def test_threshold_report_constrained():
    config = scenario(omega=0.2, mode="constrained", N=32)
    report = threshold_report(config, gen_initial(config))
    assert report.hypotheses_met
    assert report.smallness_constrained == pytest.approx(smallness_constrained(0.2, report.L0))
    assert report.L_lower is None


def test_compute_frame_on_arc():
    cone = symmetric_cone(0.2)
    curve = centred_arc(cone, 1.0, 48)
    state = initial_state(curve, cone, FlowSpec(mode=FlowMode.CONSTRAINED))
    frame = compute_frame(state)
    assert frame.L == pytest.approx(arc_length(curve))
    assert frame.kbar == pytest.approx(1.0, abs=1e-12)
    turn = 2.0 * math.pi * 0.2 / 48
    assert frame.omega_num == pytest.approx(48 * math.sin(turn / 2.0) / math.pi, rel=1e-12)
    assert abs(frame.omega_num - 0.2) <= 0.2 * turn**2 / 20.0
    assert frame.lambda_used == pytest.approx(lambda_constrained(curve), rel=1e-10)
    assert frame.ks2 < 1e-10
    assert frame.kmax_dev < 1e-10
    assert frame.tip_dist == pytest.approx(1.0)
    assert frame.psw_l2_gap >= 0.0 and frame.psw_sup_gap >= 0.0
    assert max(frame.residuals.on_ray_minus, frame.residuals.on_ray_plus) < 1e-12
    assert max(frame.residuals.neumann_minus, frame.residuals.neumann_plus) <= turn**3 / 2.0
    assert max(frame.residuals.flux_minus, frame.residuals.flux_plus) < 1e-9


def _series(values, field="ks2", times=None):
    times = np.linspace(0.0, 1.0, len(values)) if times is None else times
    return Series(frames=[synthetic_frame(float(t), **{field: float(v)}) for t, v in zip(times, values)])


def test_fit_decay_modes():
    t = np.linspace(0.0, 2.0, 40)
    rate, quality = fit_decay(t, 3.0 * np.exp(-1.5 * t))
    assert rate == pytest.approx(-1.5, rel=1e-10)
    assert quality == pytest.approx(1.0, abs=1e-12)
    rate, _ = fit_decay(t, (1.0 + t / 0.5) ** -2.0, mode="power", time_scale=0.5)
    assert rate == pytest.approx(-2.0, rel=1e-10)


def test_fit_decay_rejects_bad_input():
    t = np.linspace(0.0, 1.0, 20)
    with pytest.raises(InvalidInputError):
        fit_decay(t[:5], np.ones(5))
    with pytest.raises(InvalidInputError):
        fit_decay(t, np.zeros(20))
    with pytest.raises(InvalidInputError):
        fit_decay(t, np.ones(20), mode="linear")


def test_decay_fit_on_series():
    t = np.linspace(0.0, 1.0, 51)
    series = _series(np.exp(-4.0 * t), times=t)
    rate, quality = decay_fit(series)
    assert rate == pytest.approx(-4.0, rel=1e-9)
    assert quality > 0.999
    rate, _ = decay_fit(series, window=(0.5, 1.0))
    assert rate == pytest.approx(-4.0, rel=1e-9)


def test_l4_residual_of_exact_growth():
    omega = 0.3
    rate = 32.0 * omega**4 * math.pi**4
    t = np.linspace(0.0, 2.0, 21)
    lengths = (2.0 + rate * t) ** 0.25
    series = _series(lengths, field="L", times=t)
    assert l4_residual(series, omega) < 1e-12


def test_derivative_bound_monitor():
    frames = [synthetic_frame(float(t), ks2_l=[1.0, math.exp(-t), math.exp(-2 * t), math.exp(-3 * t)]) for t in np.linspace(0, 1, 30)]
    flags = derivative_bound_monitor(Series(frames=frames))
    assert set(flags) == {0, 1, 2, 3}
    assert all(flag["bounded"] and flag["decreasing"] for flag in flags.values())


def test_arc_monitors():
    omega = 0.3
    curve, ghosts = _arc(omega=omega, r=1.0)
    length = arc_length(curve)
    assert rescaled_curvature_deviation(curve, omega, ghosts) < 1e-4
    lower, upper = lambda_bounds(curve, length, omega, ghosts)
    assert lower <= lambda_constrained(curve, ghosts) <= upper
    assert l4_rate(curve, omega, ghosts) == pytest.approx(32.0 * omega**4 * math.pi**4, rel=1e-6)
    assert curvature_cube_reference(0.0, length, omega, 1e-4) == pytest.approx((2.0 * math.pi * omega / length) ** 3)


def test_gamma_bound_and_control_window():
    omega = 0.3
    t = np.linspace(0.0, 1.0, 11)
    series = Series(frames=[synthetic_frame(float(s), gamma=1e-3 * math.exp(-s), epsilon=1e-5) for s in t])
    assert gamma_bound(series, omega, 1e-4) <= 1e-3
    assert epsilon_control_window(series, 1e-4, omega) > 0.0
    with pytest.raises(InvalidInputError):
        gamma_bound(Series(frames=[synthetic_frame(0.0, gamma=None)]), omega, 1e-4)


def _perturbed(a, omega=0.15, N=64):
    config = scenario(omega=omega, N=N, modes=f"2:{a!r}")
    curve = gen_initial(config)
    return curve, config.cone


def test_scale_invariants_survive_dilation_of_a_perturbed_curve():
    omega = 0.15
    curve, cone = _perturbed(0.01, omega=omega)
    dilated = curve.scaled(3.0)
    ghosts, dilated_ghosts = apply_boundary_ghosts(curve, cone), apply_boundary_ghosts(dilated, cone)
    assert epsilon(curve, ghosts) > 1e-6
    assert epsilon(dilated, dilated_ghosts) == pytest.approx(epsilon(curve, ghosts), rel=1e-9)
    assert gamma(dilated, dilated_ghosts) == pytest.approx(gamma(curve, ghosts), rel=1e-9)
    assert rescaled_curvature_deviation(dilated, omega, dilated_ghosts) == pytest.approx(
        rescaled_curvature_deviation(curve, omega, ghosts), rel=1e-9
    )


def test_epsilon_is_quadratic_in_a_small_amplitude():
    small, cone = _perturbed(1e-3)
    double, _ = _perturbed(2e-3)
    ratio = epsilon(double, apply_boundary_ghosts(double, cone)) / epsilon(small, apply_boundary_ghosts(small, cone))
    assert ratio == pytest.approx(4.0, rel=2e-2)
