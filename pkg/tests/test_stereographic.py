import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphere_bounds import stereographic as sg
from sphere_bounds.constants import alpha_star
from sphere_bounds.errors import DataError, DomainError
from sphere_bounds.ultraspherical import build_grid, evaluate_quotient


def test_equator_maps_to_unit_sphere():
    x = sg.project([1.0, 0.0, 0.0])
    assert x.r == pytest.approx(1.0, abs=1e-15)


def test_south_pole_maps_to_origin():
    assert sg.project([0.0, 0.0, -1.0]).r == 0.0


def test_north_pole_rejected():
    with pytest.raises(DomainError):
        sg.project([0.0, 0.0, 1.0])
    with pytest.raises(DomainError):
        sg.SpherePoint([0.5, 0.5])


def test_round_trip_random_points():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        y = rng.normal(size=4)
        y /= np.linalg.norm(y)
        back = sg.inverse_project(sg.project(y)).coords
        worst = max(worst, np.max(np.abs(back - y)))
    assert worst < 1e-12


@given(st.floats(-0.999, 0.999))
def test_height_radius_inverse(z):
    assert sg.height_of_radius(sg.radius_of_height(z)) == pytest.approx(z, abs=1e-12)


def test_pushforward_of_constant():
    u = sg.pushforward(lambda r: np.ones_like(r), sg.PLANE_TO_SPHERE, 5)
    z = np.linspace(-0.9, 0.9, 7)
    assert np.allclose(u(z), (1 - z) ** (-1.5), rtol=1e-14)


@pytest.mark.parametrize("d", [2, 3, 6])
def test_double_pushforward_is_identity(d):
    v = sg.gaussian(0.7)
    back = sg.pushforward(sg.pushforward(v, sg.PLANE_TO_SPHERE, d), sg.SPHERE_TO_PLANE, d)
    r = np.linspace(0, 5, 11)
    assert np.allclose(back(r), v(r), rtol=1e-12, atol=1e-300)


def test_pushforward_direction_validation():
    with pytest.raises(DomainError):
        sg.pushforward(lambda r: r, "sideways", 3)


def test_weight_exponent_q2():
    for d in range(3, 9):
        assert sg.power_weight_exponent(2.0, d) == 2


def test_identities_aubin_talenti_d3():
    rep = sg.energy_identity_check(sg.aubin_talenti(3, 1.0), None, 6.0, 3)
    assert rep.holds(1e-6)
    assert rep.energy_plane == pytest.approx(3 * math.pi**2 / 4, rel=1e-9)


def test_identities_gaussian_d4():
    rep = sg.energy_identity_check(sg.gaussian(1.0), None, 3.0, 4)
    assert rep.energy_residual < 1e-6 and rep.power_residual < 1e-6
    assert rep.energy_plane == pytest.approx(math.pi**2, rel=1e-9)


@pytest.mark.parametrize("eps", [0.5, 0.8, 1.0, 1.5, 2.0])
def test_identities_general_alpha(eps):
    rep = sg.energy_identity_check(sg.aubin_talenti(3, eps), 2.0, 3.0, 3)
    assert rep.holds(1e-6)


def test_conformal_norm_preservation():
    norms = [sg.energy_identity_check(sg.aubin_talenti(3, e), None, 6.0, 3).power_sphere ** (1 / 6)
             for e in (0.3, 0.5, 1.0, 2.0, 3.0)]
    target = sg.aubin_talenti_norm(3)
    assert max(abs(n - target) for n in norms) < 1e-8 * target


def test_identity_requires_d3():
    with pytest.raises(DomainError):
        sg.energy_identity_check(sg.gaussian(), None, 3.0, 2)


def test_divergent_integral_detected():
    slow = sg.RadialFunction(lambda r: (1 + r * r) ** -0.5, lambda r: -r * (1 + r * r) ** -1.5)
    with pytest.raises(DataError):
        sg.radial_integral(lambda r: slow(r) ** 2, 3)


def test_radial_integral_known_values():
    assert sg.radial_integral(lambda r: math.exp(-r * r), 3) == pytest.approx(math.pi**1.5, rel=1e-12)
    # int_{R^3} (1 + r^2)^{-3} dx = pi^2 / 4
    assert sg.radial_integral(lambda r: (1 + r * r) ** -3, 3) == pytest.approx(math.pi**2 / 4, rel=1e-9)


def test_delta_limits():
    assert sg.aubin_talenti_delta(3, 1e-3) < 1e-2
    for eps in (0.1, 0.5):
        assert sg.aubin_talenti_delta(3, eps) <= eps * math.pi / 4
    assert sg.aubin_talenti_delta(5, 0.3) <= sg.aubin_talenti_delta_bound(5, 0.3)
    assert sg.aubin_talenti_delta(4, 0.2) <= sg.aubin_talenti_delta_bound(4, 0.2)


def test_delta_validation():
    with pytest.raises(DomainError):
        sg.aubin_talenti_delta(2, 0.5)
    with pytest.raises(DomainError):
        sg.aubin_talenti_delta(3, 0.0)


@pytest.mark.parametrize("eps", [0.3, 0.7, 1.0, 2.0])
def test_critical_quotient_matches_direct_evaluation(eps):
    d, alpha = 3, 2.0
    g = build_grid(d, 256)
    u = sg.to_zonal(sg.aubin_talenti(d, eps), g)
    assert sg.critical_quotient_bound(alpha, d, eps) == pytest.approx(evaluate_quotient(u, alpha, 6.0), rel=1e-8)


def test_critical_quotient_tends_to_plateau():
    vals = [sg.critical_quotient_bound(2.0, 3, e) - alpha_star(3) for e in (0.1, 0.01, 0.001)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 1e-2


def test_aubin_talenti_norm_closed_form():
    # ||v_1||_6^6 on R^3 = int (1+r^2)^{-3} dx = pi^2/4
    assert sg.aubin_talenti_norm(3) == pytest.approx((math.pi**2 / 4) ** (1 / 6), rel=1e-10)
