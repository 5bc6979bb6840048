import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import eigh

from sphere_bounds.constants import jacobi_normalization
from sphere_bounds.errors import DataError, DomainError
from sphere_bounds.ultraspherical import (ZonalFunction, assemble_schrodinger, build_grid, dirichlet_form,
                                          evaluate_quotient, gegenbauer, integrate, zonal_eigenvalue)


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8])
def test_weights_form_probability(d):
    g = build_grid(d, 32)
    assert g.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(g.weights > 0)
    assert np.all(np.abs(g.nodes) < 1)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 7])
@pytest.mark.parametrize("k", [0, 2, 4, 10])
def test_moments_match_scipy_quad(d, k):
    g = build_grid(d, 24)
    a = d / 2 - 1
    ref = quad(lambda z: z**k, -1, 1, weight="alg", wvar=(a, a), epsabs=1e-15, epsrel=1e-13)[0]
    ref /= jacobi_normalization(d)
    assert g.integrate(g.nodes**k) == pytest.approx(ref, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3, 6])
def test_second_moment(d):
    g = build_grid(d, 16)
    assert g.integrate(g.nodes**2) == pytest.approx(1 / (d + 1), rel=1e-14)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_discrete_zonal_spectrum_is_exact(d):
    g = build_grid(d, 40)
    vals = eigh(g.stiffness, np.diag(g.weights), eigvals_only=True)
    expected = [zonal_eigenvalue(k, d) for k in range(40)]
    assert np.allclose(vals[:30], expected[:30], rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("k", [1, 2, 5])
def test_gegenbauer_rayleigh_quotient(d, k):
    g = build_grid(d, 32)
    f = gegenbauer(k, d, g.nodes)
    assert g.dirichlet(f) / g.integrate(f**2) == pytest.approx(k * (k + d - 1), rel=1e-11)


def test_derivative_exact_on_polynomials():
    g = build_grid(3, 20)
    z = g.nodes
    assert np.allclose(g.derivative(z**5 - 2 * z**2), 5 * z**4 - 4 * z, atol=1e-11)


def test_interpolation_reproduces_polynomials():
    g = build_grid(3, 20)
    x = np.linspace(-1, 1, 57)
    vals = g.interpolate(g.nodes**7 + g.nodes, x)
    assert np.allclose(vals, x**7 + x, atol=1e-12)
    # exactly at a node
    assert g.interpolate(g.nodes**2, g.nodes[3:4])[0] == pytest.approx(g.nodes[3] ** 2, abs=1e-15)


def test_project_polynomial_of_constant():
    g = build_grid(4, 16)
    coeffs = g.project_polynomial(np.ones(16))
    assert coeffs[0] == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(coeffs[1:], 0.0, atol=1e-13)


def test_quotient_of_constant_is_alpha():
    g = build_grid(3, 16)
    f = ZonalFunction(g, np.full(16, 2.5))
    assert evaluate_quotient(f, 4.0, 3.0) == pytest.approx(4.0, rel=1e-14)
    assert dirichlet_form(f) == pytest.approx(0.0, abs=1e-12)
    assert integrate(f) == pytest.approx(2.5)


def test_quotient_domain_errors():
    g = build_grid(3, 16)
    f = ZonalFunction(g, np.zeros(16))
    with pytest.raises(DomainError):
        evaluate_quotient(f, 1.0, 3.0)
    with pytest.raises(DomainError):
        evaluate_quotient(ZonalFunction(g, np.ones(16)), -1.0, 3.0)


def test_data_errors():
    g = build_grid(3, 16)
    with pytest.raises(DataError):
        ZonalFunction(g, np.ones(15))
    bad = np.ones(16)
    bad[2] = np.nan
    with pytest.raises(DataError):
        ZonalFunction(g, bad)
    with pytest.raises(DataError):
        assemble_schrodinger(ZonalFunction(g, np.ones(16)), grid=build_grid(3, 32))


def test_grid_validation():
    with pytest.raises(DomainError):
        build_grid(0, 16)
    with pytest.raises(DomainError):
        build_grid(3, 4)


def test_schrodinger_signs():
    g = build_grid(3, 16)
    V = ZonalFunction(g, np.full(16, 2.0))
    for sign, expected in (("minus", -2.0), ("plus", 2.0)):
        A, M = assemble_schrodinger(V, sign)
        assert eigh(A, M, eigvals_only=True)[0] == pytest.approx(expected, abs=1e-11)
    with pytest.raises(DomainError):
        assemble_schrodinger(V, "sideways")


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.sampled_from([1, 2, 3, 5]))
def test_dirichlet_form_nonnegative_and_symmetric(coeffs, d):
    g = build_grid(d, 24)
    f = np.polynomial.polynomial.polyval(g.nodes, coeffs)
    assert g.dirichlet(f) >= -1e-12
    assert np.allclose(g.stiffness, g.stiffness.T)
    # constants are in the kernel
    assert g.dirichlet(f + 3.0) == pytest.approx(g.dirichlet(f), rel=1e-9, abs=1e-10)


@given(st.floats(0.2, 50.0), st.floats(2.1, 5.9), st.floats(0.01, 0.9))
def test_quotient_scale_invariant(alpha, q, eps):
    g = build_grid(3, 24)
    f = ZonalFunction(g, 1 + eps * g.nodes)
    a = evaluate_quotient(f, alpha, q)
    b = evaluate_quotient(7.3 * f, alpha, q)
    assert a == pytest.approx(b, rel=1e-12)
