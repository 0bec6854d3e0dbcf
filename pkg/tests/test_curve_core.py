"""
    Discrete geometry of open polylines: construction, curvature, integrals, resampling.
"""

import math

import numpy as np
import pytest
from analytic_curves import (
    ellipse_arc,
    ellipse_curvature,
    ellipse_length,
    ellipse_params,
    ellipse_sector_area,
    straight_line,
    symmetric_cone,
)

from ConeFlows.cone_domain import apply_boundary_ghosts, centred_arc
from ConeFlows.curve_core import (
    DiscreteCurve,
    ScalarField,
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
from ConeFlows.errors import InvalidInputError, UnsupportedOrderError


def _arc(omega=0.15, r=1.0, n=32):
    cone = symmetric_cone(omega)
    curve = centred_arc(cone, r, n)
    return curve, apply_boundary_ghosts(curve, cone)


def test_curve_rejects_too_few_segments():
    with pytest.raises(InvalidInputError):
        DiscreteCurve(np.zeros((8, 2)) + np.arange(8)[:, None])


def test_curve_rejects_non_finite_nodes():
    nodes = straight_line().nodes.copy()
    nodes[3, 1] = np.nan
    with pytest.raises(InvalidInputError):
        DiscreteCurve(nodes)


def test_curve_rejects_coincident_nodes():
    nodes = straight_line().nodes.copy()
    nodes[4] = nodes[5]
    with pytest.raises(InvalidInputError):
        DiscreteCurve(nodes)


def test_curve_nodes_are_read_only():
    curve = straight_line()
    with pytest.raises(ValueError):
        curve.nodes[0, 0] = 5.0


def test_curvature_of_centred_arc_is_exact():
    curve, ghosts = _arc(r=2.0)
    assert np.allclose(curvature(curve, ghosts).values, 0.5, atol=1e-12)
    assert np.allclose(curvature(curve).values, 0.5, atol=1e-12)
    assert average_curvature(curve, ghosts) == pytest.approx(0.5, abs=1e-12)


def test_rotation_number_of_centred_arc():
    n = 32
    for omega in (0.05, 0.15, 0.3, 0.45):
        curve, ghosts = _arc(omega=omega, n=n)
        turn = 2.0 * math.pi * omega / n
        # trapezoid int k ds over the chords of an exactly curved polygon
        assert rotation_number(curve, ghosts) == pytest.approx(n * math.sin(turn / 2.0) / math.pi, rel=1e-12)
        assert abs(rotation_number(curve, ghosts) - omega) <= omega * turn**2 / 20.0


def test_rotation_number_follows_the_turning_of_the_curve():
    # circle of radius 1.5 through the two ray points at distance 1, meeting the rays obliquely
    omega, radius, n = 0.25, 1.5, 64
    half = math.asin(math.sin(math.pi * omega) / radius)
    centre_height = math.cos(math.pi * omega) - radius * math.cos(half)
    angles = math.pi / 2.0 + np.linspace(half, -half, n + 1)
    curve = DiscreteCurve(np.column_stack((radius * np.cos(angles), centre_height + radius * np.sin(angles))))
    turn = 2.0 * half / n
    assert rotation_number(curve) == pytest.approx(n * math.sin(turn / 2.0) / math.pi, rel=1e-12)
    assert rotation_number(curve) == pytest.approx(half / math.pi, abs=1e-4)
    assert abs(rotation_number(curve) - omega) > 0.05
    assert rotation_number(straight_line()) == pytest.approx(0.0, abs=1e-12)


def test_length_variation():
    curve = ellipse_arc(1.5, 1.0, 40)
    s = curve.arc_parameter
    velocity = np.column_stack((np.sin(3.0 * s), np.cos(2.0 * s) - 0.5 * s))
    step = 1e-6
    ahead = arc_length(DiscreteCurve(curve.nodes + step * velocity))
    behind = arc_length(DiscreteCurve(curve.nodes - step * velocity))
    assert length_variation(curve, velocity) == pytest.approx((ahead - behind) / (2.0 * step), rel=1e-7)

    arc, ghosts = _arc(r=1.0)
    assert length_variation(arc, tangent_normal(arc, ghosts).normal) == pytest.approx(arc_length(arc), rel=1e-12)
    with pytest.raises(InvalidInputError):
        length_variation(arc, np.zeros((5, 2)))


def test_centred_arc_normal_points_away_from_tip():
    curve, ghosts = _arc(r=1.5)
    normal = tangent_normal(curve, ghosts).normal
    radial = curve.nodes / np.linalg.norm(curve.nodes, axis=1)[:, None]
    assert np.allclose(normal, radial, atol=1e-12)


def test_length_and_area_of_centred_arc():
    omega, r, n = 0.2, 1.5, 40
    curve, ghosts = _arc(omega=omega, r=r, n=n)
    chord_length = 2.0 * n * r * math.sin(math.pi * omega / n)
    assert arc_length(curve) == pytest.approx(chord_length, rel=1e-13)
    assert enclosed_area(curve, ghosts) == pytest.approx(0.5 * r * chord_length, rel=1e-12)


def test_integrate_in_arc_length():
    curve, ghosts = _arc(omega=0.45, r=2.0)
    length = arc_length(curve)
    assert integrate(np.ones(len(curve)), curve) == pytest.approx(length, rel=1e-12)
    assert integrate(curvature(curve, ghosts).values ** 2, curve) == pytest.approx(0.25 * length, rel=1e-12)
    with pytest.raises(InvalidInputError):
        integrate(np.zeros(5), curve)


def test_curvature_norms_vanish_on_centred_arc():
    curve, ghosts = _arc()
    k2, *derivatives = curvature_norms(curve, ghosts, lmax=3)
    assert k2 == pytest.approx(arc_length(curve), rel=1e-12)
    assert all(value < 1e-10 for value in derivatives)


def test_curvature_derivative_rejects_unsupported_orders():
    curve, ghosts = _arc()
    k = curvature(curve, ghosts)
    for order in (0, 5):
        with pytest.raises(UnsupportedOrderError):
            curvature_derivative(k, curve, order)


def test_curvature_derivative_of_even_field():
    curve = straight_line(200)
    s = curve.arc_parameter
    field = ScalarField(np.cos(math.pi * s), tag="f")
    first = curvature_derivative(field, curve, 1).values
    second = curvature_derivative(field, curve, 2).values
    assert np.max(np.abs(first + math.pi * np.sin(math.pi * s))) < 1e-3
    assert np.max(np.abs(second + math.pi**2 * np.cos(math.pi * s))) < 1e-3


def test_field_length_must_match_curve():
    curve = straight_line(16)
    with pytest.raises(InvalidInputError):
        curvature_derivative(ScalarField(np.zeros(5)), curve, 1)


@pytest.mark.parametrize("a,b", [(1.5, 1.0), (1.0, 2.0)])
def test_second_order_convergence_on_ellipse(a, b):
    exact_length, exact_area = ellipse_length(a, b), ellipse_sector_area(a, b)
    errors = {"k": [], "L": [], "A": []}
    for n in (80, 160):
        curve = ellipse_arc(a, b, n)
        exact_k = ellipse_curvature(a, b, ellipse_params(n))
        errors["k"].append(np.max(np.abs(curvature(curve).values - exact_k)[1:-1]))
        errors["L"].append(abs(arc_length(curve) - exact_length))
        errors["A"].append(abs(enclosed_area(curve) - exact_area))
    for name, (coarse, fine) in errors.items():
        assert 3.5 <= coarse / fine <= 4.5, name


def test_divergence_form_residual_is_second_order():
    coarse, coarse_ghosts = _arc(omega=0.2, n=32)
    fine, fine_ghosts = _arc(omega=0.2, n=64)
    r_coarse = divergence_form_residual(coarse, coarse_ghosts)
    r_fine = divergence_form_residual(fine, fine_ghosts)
    assert r_coarse < 1e-3
    assert 3.9 <= r_coarse / r_fine <= 4.1


def test_resample_uniform_equalises_chords():
    cone = symmetric_cone(0.2)
    theta = cone.theta2 + (cone.theta1 - cone.theta2) * np.linspace(1.0, 0.0, 65) ** 2
    curve = DiscreteCurve(np.column_stack((np.cos(theta), np.sin(theta))))
    resampled = resample_uniform(curve, 64)
    chords = resampled.segment_lengths
    assert np.max(np.abs(chords / chords.mean() - 1.0)) < 1e-10
    assert np.array_equal(resampled.nodes[0], curve.nodes[0])
    assert np.array_equal(resampled.nodes[-1], curve.nodes[-1])
    assert np.allclose(np.linalg.norm(resampled.nodes, axis=1), 1.0, atol=1e-5)


def test_resample_uniform_keeps_uniform_arc():
    curve, _ = _arc(n=32)
    assert np.allclose(resample_uniform(curve, 32).nodes, curve.nodes, atol=1e-13)


def test_psw_gaps_hold_on_perturbed_curve():
    cone = symmetric_cone(0.2)
    theta = np.linspace(cone.theta1, cone.theta2, 65)
    phase = math.pi * (theta - cone.theta2) / (cone.theta1 - cone.theta2)
    rho = 1.0 + 0.05 * np.cos(2 * phase) - 0.02 * np.cos(3 * phase)
    curve = DiscreteCurve(rho[:, None] * np.column_stack((np.cos(theta), np.sin(theta))))
    l2_gap, sup_gap = psw_gaps(curve, apply_boundary_ghosts(curve, cone))
    assert l2_gap >= 0.0
    assert sup_gap >= 0.0


def test_curve_distance_between_concentric_arcs():
    inner, _ = _arc(r=1.0, n=40)
    outer, _ = _arc(r=1.1, n=40)
    assert curve_distance(inner, inner, 40) == 0.0
    assert curve_distance(inner, outer, 40) == pytest.approx(0.1, abs=1e-6)


def test_rescaled_embedding_has_unit_length():
    curve, _ = _arc(r=3.0)
    assert arc_length(rescaled_embedding(curve)) == pytest.approx(1.0, rel=1e-14)
