"""Bessel functions and the radial Neumann spectrum of the disk."""

import numpy as np
import pytest

from bernstein_lab.core.special_functions import (
    MAX_ROOTS,
    bessel_j0,
    bessel_j1,
    bessel_j1_derivative,
    j0_zero_count,
    mcmahon_root_estimate,
    neumann_eigenvalues,
)
from bernstein_lab.errors import DomainError

# first positive zero of J1, by bisection to full precision
SQRT_MU2 = 3.8317059702075125


class TestBesselValues:

    @pytest.mark.parametrize("x, j0, j1", [
        (0.0, 1.0, 0.0),
        (1.0, 0.7651976865579666, 0.44005058574493355),
        (5.0, -0.1775967713143383, -0.3275791375914652),
        (10.0, -0.2459357644513483, 0.04347274616886144),
    ])
    def test_reference_values(self, x, j0, j1):
        assert bessel_j0(x) == pytest.approx(j0, abs=1e-13)
        assert bessel_j1(x) == pytest.approx(j1, abs=1e-13)

    def test_first_zero_of_j0(self):
        assert abs(bessel_j0(2.404825557695773)) < 1e-12

    def test_regimes_join_continuously(self):
        # both sides of the series/integral and integral/asymptotic switches
        for cut in (8.0, 25.0):
            x = np.array([cut - 1e-9, cut + 1e-9])
            np.testing.assert_allclose(bessel_j0(x)[0], bessel_j0(x)[1], atol=1e-12)
            np.testing.assert_allclose(bessel_j1(x)[0], bessel_j1(x)[1], atol=1e-12)

    def test_derivative_identity(self):
        # J0' = -J1, checked by central differences across all regimes
        x = np.linspace(0.5, 200.0, 400)
        h = 1e-5
        slope = (bessel_j0(x + h) - bessel_j0(x - h)) / (2 * h)
        np.testing.assert_allclose(slope, -bessel_j1(x), atol=1e-8)

    def test_j1_derivative_at_origin(self):
        assert bessel_j1_derivative(0.0) == 0.5

    def test_shape_is_preserved(self):
        x = np.linspace(0.0, 30.0, 12).reshape(3, 4)
        assert bessel_j0(x).shape == (3, 4)
        assert isinstance(bessel_j1(2.0), float)

    @pytest.mark.parametrize("x", [-0.5, 300.0, np.nan, np.inf])
    def test_rejects_unsupported_arguments(self, x):
        with pytest.raises(DomainError):
            bessel_j0(x)


class TestNeumannEigenvalues:

    def test_constant_mode_first(self):
        roots = neumann_eigenvalues(5)
        assert roots.values[0] == 0.0
        assert len(roots) == 5
        assert all(b > a for a, b in zip(roots.values, roots.values[1:]))

    def test_first_positive_root(self):
        roots = neumann_eigenvalues(2)
        assert roots.sqrt_values[1] == pytest.approx(SQRT_MU2, abs=1e-10)

    def test_residuals(self):
        roots = neumann_eigenvalues(16)
        assert max(abs(bessel_j1(r)) for r in roots.sqrt_values[1:]) < 1e-12
        assert max(roots.residuals) < 1e-12

    def test_full_range(self):
        roots = neumann_eigenvalues(MAX_ROOTS)
        assert len(roots) == MAX_ROOTS
        assert roots.sqrt_values[-1] == pytest.approx(mcmahon_root_estimate(MAX_ROOTS), abs=1e-3)

    def test_interlacing_with_j0_zeros(self):
        # exactly one zero of J0 between consecutive zeros of J1
        r = neumann_eigenvalues(12).sqrt_values
        assert j0_zero_count(0.0, r[1]) == 1
        for a, b in zip(r[1:], r[2:]):
            assert j0_zero_count(a, b) == 1

    def test_mcmahon_estimate_is_close(self):
        r = neumann_eigenvalues(20).sqrt_values
        for n in range(3, 21):
            assert abs(mcmahon_root_estimate(n) - r[n - 1]) < 1e-2

    def test_cached(self):
        assert neumann_eigenvalues(8) is neumann_eigenvalues(8)

    @pytest.mark.parametrize("count", [0, MAX_ROOTS + 1])
    def test_count_out_of_range(self, count):
        with pytest.raises(DomainError):
            neumann_eigenvalues(count)
