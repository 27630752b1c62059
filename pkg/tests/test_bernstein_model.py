"""Kernels, densities and drifts of the Bernstein model."""

import math

import numpy as np
import pytest

from bernstein_lab.core.bernstein_model import (
    BernsteinModel,
    area_factor,
    measure_rule,
    normalization_constant,
)
from bernstein_lab.core.special_functions import bessel_j0
from bernstein_lab.core.spectral_core import Geometry
from bernstein_lab.errors import DomainError, InvalidDatumError, OrderingError, UnderflowError

X = np.linspace(0.0, 1.0, 21)


def integrate(model, values):
    return model.measure_rule().integrate(values)


class TestConstruction:

    def test_example1_is_already_normalized(self, example1):
        assert example1.normalization_scale == pytest.approx(1.0, abs=1e-14)
        assert example1.mass == pytest.approx(1.0, abs=1e-14)

    def test_example2_is_already_normalized(self, example2):
        assert example2.normalization_scale == pytest.approx(1.0, abs=1e-12)

    def test_psi_is_rescaled(self):
        model = BernsteinModel.from_data(Geometry.INTERVAL, 1.0, [1.0, 0.5], [3.0])
        assert model.normalization_scale == pytest.approx(1 / 3)
        assert model.mass == pytest.approx(1.0, abs=1e-12)

    def test_callable_data(self):
        model = BernsteinModel.from_data(Geometry.INTERVAL, 1.0,
                                         lambda x: 1 + 0.5 * np.cos(np.pi * x),
                                         lambda x: np.ones_like(x))
        assert model.backward_drift(0.5, 0.0) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_unnormalized_keeps_scale(self, cosine_psi):
        raw = BernsteinModel.from_data(Geometry.INTERVAL, 1.0, [1.0, 0.5], [1.0, 0.25],
                                       normalize=False)
        assert raw.normalization_scale == 1.0
        assert raw.mass > 1.0
        assert cosine_psi.mass == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("horizon", [0.0, -1.0, math.inf])
    def test_bad_horizon(self, horizon):
        with pytest.raises(DomainError):
            BernsteinModel.from_data(Geometry.INTERVAL, horizon, [1.0], [1.0])

    def test_non_positive_datum(self):
        with pytest.raises(InvalidDatumError):
            BernsteinModel.from_data(Geometry.INTERVAL, 1.0, [1.0, 1.5], [1.0])

    def test_closed_form_normalization(self):
        phi = BernsteinModel.from_data(Geometry.INTERVAL, 1.0, [1.0, 0.5], [1.0, 0.25],
                                       normalize=False)
        expected = 1.0 + 0.5 * 0.25 * math.exp(-math.pi ** 2 / 2) / 2
        assert normalization_constant(phi.phi, phi.psi, 1.0) == pytest.approx(expected, rel=1e-14)

    def test_area_factor(self):
        assert area_factor(Geometry.INTERVAL) == 1.0
        assert area_factor(Geometry.DISK_RADIAL) == pytest.approx(2 * math.pi)
        rule = measure_rule(Geometry.DISK_RADIAL)
        assert rule.weights.sum() == pytest.approx(math.pi, abs=1e-12)


class TestSolutions:

    def test_example1_occupation(self, example1):
        for t in (0.0, 0.25, 0.5, 1.0):
            expected = 1 + 0.5 * np.cos(np.pi * X) * math.exp(-math.pi ** 2 * t / 2)
            np.testing.assert_allclose(example1.occupation(X, t), expected, atol=1e-12)
            np.testing.assert_allclose(example1.v(X, t), 1.0, atol=1e-14)

    def test_example2_occupation(self, example2, sqrt_mu2):
        for t in (0.0, 0.5, 1.0):
            expected = (1 + bessel_j0(sqrt_mu2 * X) * math.exp(-sqrt_mu2 ** 2 * t / 2)) / math.pi
            np.testing.assert_allclose(example2.occupation(X, t), expected, atol=1e-10)

    def test_constant_potential(self, example1, example1_potential):
        for t in (0.1, 0.5, 1.0):
            np.testing.assert_allclose(example1_potential.u(X, t),
                                       math.exp(-0.7 * t) * example1.u(X, t), rtol=1e-12)
            np.testing.assert_allclose(example1_potential.occupation(X, t),
                                       example1.occupation(X, t), rtol=1e-12)

    def test_occupation_mass(self, example1, example2, cosine_psi):
        for model in (example1, example2, cosine_psi):
            assert model.occupation_density().check_mass() < 1e-8

    def test_occupation_cache(self, example1):
        density = example1.occupation_density()
        first = density(X, 0.5)
        assert density(X, 0.5) is first

    def test_marginals(self, cosine_psi):
        rule = cosine_psi.measure_rule()
        np.testing.assert_allclose(rule.integrate(cosine_psi.marginal_initial(rule.nodes)),
                                   1.0, atol=1e-10)
        np.testing.assert_allclose(rule.integrate(cosine_psi.marginal_final(rule.nodes)),
                                   1.0, atol=1e-10)
        np.testing.assert_allclose(cosine_psi.marginal_initial(X), cosine_psi.occupation(X, 0.0),
                                   rtol=1e-12)


class TestKernels:

    @pytest.mark.parametrize("name", ["example1", "cosine_psi", "example2", "bessel_psi"])
    def test_forward_and_backward_mass(self, name, request):
        model = request.getfixturevalue(name)
        y = model.measure_rule().nodes
        for x in (0.0, 0.3, 1.0):
            assert integrate(model, model.forward_kernel(x, 0.2, y, 0.6)) == pytest.approx(
                1.0, abs=1e-8)
            assert integrate(model, model.backward_kernel(x, 0.6, y, 0.2)) == pytest.approx(
                1.0, abs=1e-8)

    def test_chapman_kolmogorov(self, cosine_psi):
        z = cosine_psi.measure_rule().nodes
        x, y = 0.2, 0.7
        lhs = integrate(cosine_psi, cosine_psi.forward_kernel(x, 0.1, z, 0.4)
                        * cosine_psi.forward_kernel(z, 0.4, y, 0.8))
        assert lhs == pytest.approx(cosine_psi.forward_kernel(x, 0.1, y, 0.8), abs=1e-6)

    def test_bridge_mass(self, cosine_psi):
        z = cosine_psi.measure_rule().nodes
        p = cosine_psi.bernstein_transition(0.4, 0.9, z, 0.5, 0.6, 0.1)
        assert integrate(cosine_psi, p) == pytest.approx(1.0, abs=1e-8)

    def test_bridge_ordering(self, example1):
        with pytest.raises(OrderingError):
            example1.bernstein_transition(0.4, 0.5, 0.5, 0.6, 0.6, 0.1)

    def test_bridge_underflow(self, example1):
        # pinning the ends of the interval a 1e-4 time apart
        with pytest.raises(UnderflowError):
            example1.bernstein_transition(1.0, 1e-4, 0.5, 5e-5, 0.0, 0.0)

    def test_kernel_ordering(self, example1):
        with pytest.raises(OrderingError):
            example1.forward_kernel(0.5, 0.6, 0.5, 0.6)
        with pytest.raises(OrderingError):
            example1.backward_kernel(0.5, 0.2, 0.5, 0.6)

    def test_finite_dimensional_density(self, cosine_psi):
        rule = cosine_psi.measure_rule()
        np.testing.assert_allclose(cosine_psi.finite_dimensional_density([X], [0.3]),
                                   cosine_psi.occupation(X, 0.3), rtol=1e-12)
        a, b = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        joint = cosine_psi.finite_dimensional_density([a, b], [0.2, 0.7])
        total = rule.integrate(rule.integrate(joint))
        assert total == pytest.approx(1.0, abs=1e-8)
        # marginalizing out the later time leaves the occupation density
        np.testing.assert_allclose(rule.integrate(joint), cosine_psi.occupation(rule.nodes, 0.2),
                                   atol=1e-8)

    def test_finite_dimensional_ordering(self, example1):
        with pytest.raises(OrderingError):
            example1.finite_dimensional_density([0.5, 0.5], [0.6, 0.2])


class TestDrifts:

    def test_example1_backward_drift(self, example1):
        t = 0.3
        decay = math.exp(-math.pi ** 2 * t / 2)
        expected = (0.5 * math.pi * np.sin(math.pi * X) * decay
                    / (1 + 0.5 * np.cos(math.pi * X) * decay))
        np.testing.assert_allclose(example1.backward_drift(X, t), expected, atol=1e-12)
        np.testing.assert_allclose(example1.forward_drift(X, t), 0.0, atol=1e-14)

    def test_example2_drift_vanishes_at_centre_and_boundary(self, example2):
        for t in (0.0, 0.5):
            assert example2.backward_drift(0.0, t) == 0.0
            assert abs(example2.backward_drift(1.0, t)) < 1e-10
        np.testing.assert_allclose(example2.forward_drift(X, 0.4), 0.0, atol=1e-14)

    def test_drift_vector_is_radial(self, bessel_psi):
        points = np.array([[0.3, 0.4], [0.0, 0.0], [-0.6, 0.0]])
        field = bessel_psi.forward_drift_vector(points, 0.5)
        radial = bessel_psi.forward_drift(np.array([0.5, 0.0, 0.6]), 0.5)
        np.testing.assert_allclose(field[0], radial[0] * points[0] / 0.5, atol=1e-14)
        np.testing.assert_allclose(field[1], 0.0)
        np.testing.assert_allclose(field[2], [-radial[2], 0.0], atol=1e-14)

    def test_drift_vector_outside_disk(self, bessel_psi):
        with pytest.raises(DomainError):
            bessel_psi.backward_drift_vector(np.array([[0.9, 0.9]]), 0.5)

    def test_drift_peak(self, example1):
        # |b(., 0)| = (pi/2) sin / (1 + cos / 2) peaks at cos(pi x) = -1/2
        location, value = example1.drift_peak(0.0)
        assert location == pytest.approx(2 / 3, abs=1 / 400)
        assert value == pytest.approx(math.pi / math.sqrt(3), abs=1e-4)
