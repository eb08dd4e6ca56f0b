from fractions import Fraction

import numpy as np
import pytest

from blockrmt.eta import detect_pattern
from blockrmt.model import CovarianceTensor, DimensionProfile, ModelSpec
from blockrmt.oracle import limiting_moments
from blockrmt.presets import get_preset
from blockrmt.solver import (GSolution, PositivityViolation, _check_herglotz, cauchy_transform,
                             solve_grid, solve_point, trace_G)

from conftest import semicircle_G


def test_scalar_root_near_real_axis(semicircle):
    g = solve_point(semicircle, 3 + 1e-6j).G[0, 0]
    assert g.real == pytest.approx((3 - np.sqrt(5)) / 2, abs=1e-9)
    assert g.imag < 0


def test_scalar_root_on_imaginary_axis(semicircle):
    g = solve_point(semicircle, 1j).G[0, 0]
    assert g == pytest.approx(-1j * (np.sqrt(5) - 1) / 2, abs=1e-12)


@pytest.mark.parametrize("name", ["semicircle", "toeplitz3", "toeplitz5"])
def test_far_field(name):
    spec = get_preset(name).spec
    z = 1e6j
    G = solve_point(spec, z).G
    assert np.max(np.abs(z * G - np.eye(spec.d))) < 1e-5


@pytest.mark.parametrize("z", [0.3 + 1e-6j, 1.9 + 1e-6j, -1.2 + 0.4j, 2.5 + 1e-3j])
def test_toeplitz_scalar_equations(toeplitz3, z):
    G = solve_point(toeplitz3, z).G
    f, g, h = G[0, 0], G[1, 1], G[0, 2]
    eqs = [z * f - 1 - (g * (f + h) + 2 * (f * f + h * h)) / 3,
           z * g - 1 - g * (g + 2 * (f + h)) / 3,
           z * h - (4 * f * h + g * (f + h)) / 3]
    assert max(abs(e) for e in eqs) <= 1e-10
    assert trace_G(solve_point(toeplitz3, z), toeplitz3.dims) == pytest.approx((2 * f + g) / 3)


def test_semicircle_grid(semicircle):
    xs = np.arange(-3.0, 3.0 + 1e-9, 0.01)
    res = solve_grid(semicircle, xs, 1e-6)
    assert not res.failures
    assert all(p.residual <= 1e-10 for p in res.points)
    G = np.array([p.G[0, 0] for p in res.points])
    np.testing.assert_allclose(G, semicircle_G(xs + 1e-6j), atol=1e-6)


def test_zero_covariance_gives_free_resolvent():
    spec = ModelSpec(CovarianceTensor.zeros(2), DimensionProfile.square(2))
    for z in (0.5 + 1e-6j, -1 + 2j):
        np.testing.assert_allclose(solve_point(spec, z).G, np.eye(2) / z, rtol=1e-14)


def test_trace_with_unequal_weights():
    dims = DimensionProfile((Fraction(1, 4), Fraction(3, 4)), mode="rectangular")
    sol = GSolution(1j, np.diag([-4j, -2j]), 0.0, 0)
    assert trace_G(sol, dims) == pytest.approx(-2.5j)


def test_rejects_lower_half_plane(semicircle):
    with pytest.raises(ValueError):
        solve_point(semicircle, 1.0)
    with pytest.raises(ValueError):
        solve_grid(semicircle, [1.0, 0.0], 1e-6)
    with pytest.raises(ValueError):
        solve_grid(semicircle, [0.0, 1.0], 0.0)


def test_herglotz_check():
    with pytest.raises(PositivityViolation, match=r"G\[2,2\]"):
        _check_herglotz(np.diag([-1j, 1e-3j]))


def test_wrong_seed_is_corrected(semicircle):
    # the other root of z g = 1 + g^2 has positive imaginary part
    z = 0.5 + 1e-3j
    bad = np.array([[(z + np.sqrt(z * z - 4)) / 2]])
    sol = solve_point(semicircle, z, init=bad)
    assert sol.G[0, 0].imag < 0
    assert sol.G[0, 0] == pytest.approx(semicircle_G(z), abs=1e-10)


def test_threaded_grid_matches_sequential(toeplitz3):
    xs = np.linspace(-2.5, 2.5, 160)
    a = solve_grid(toeplitz3, xs, 1e-6)
    b = solve_grid(toeplitz3, xs, 1e-6, threads=4)
    Ga = np.array([p.G for p in a.points])
    Gb = np.array([p.G for p in b.points])
    np.testing.assert_allclose(Ga, Gb, atol=1e-9)


@pytest.mark.parametrize("name", ["toeplitz3", "toeplitz4", "semicircle"])
def test_law_is_symmetric(name):
    spec = get_preset(name).spec
    for z in (0.7 + 0.05j, 1.9 + 1e-4j):
        g1 = cauchy_transform(spec, z)
        g2 = cauchy_transform(spec, -np.conj(z))
        assert g2 == pytest.approx(-np.conj(g1), abs=1e-10)


@pytest.mark.parametrize("name", ["semicircle", "toeplitz3", "toeplitz5"])
def test_asymptotic_expansion(name):
    spec = get_preset(name).spec
    m = limiting_moments(spec, 10)
    # the series needs |z| beyond the support; 100 sits far outside
    R = 100.0
    z = 1j * R
    series = sum(m[2 * k] / z ** (2 * k + 1) for k in range(5))
    assert abs(cauchy_transform(spec, z) - series) <= 2 * m[10] / R ** 11 + 1e-15


def test_solutions_respect_pattern(toeplitz3):
    pat = detect_pattern(toeplitz3)
    res = solve_grid(toeplitz3, np.linspace(-2.4, 2.4, 97), 1e-6)
    assert max(pat.violation(p.G) for p in res.points) <= 1e-9
