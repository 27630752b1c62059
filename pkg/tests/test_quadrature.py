"""Quadrature rules on [0, 1]."""

import numpy as np
import pytest

from bernstein_lab.utils.quadrature import rule_for, simpson_rule, simpson_with_error


class TestSimpson:

    def test_rule_is_exact_for_cubics(self):
        rule = simpson_rule(11)
        assert rule.integrate(rule.nodes ** 3) == pytest.approx(0.25, abs=1e-15)

    def test_rejects_even_node_counts(self):
        with pytest.raises(ValueError):
            simpson_rule(10)

    def test_rule_for_rounds_to_odd(self):
        assert len(rule_for("interval", 200, "simpson")) == 201

    def test_richardson_estimate_of_quartic(self):
        # Simpson errs by h^4 * 24 / 180 on x^4; one halving leaves 1/16 of it
        value, error = simpson_with_error(lambda x: x ** 4, 11)
        assert value == pytest.approx(0.2, abs=1e-14)
        assert error == pytest.approx(0.1 ** 4 * 24 / 180 / 16, rel=1e-6)

    def test_smooth_integrand_has_tiny_estimate(self):
        value, error = simpson_with_error(lambda x: np.cos(np.pi * x) ** 2, 201)
        assert value == pytest.approx(0.5, abs=1e-12)
        assert error < 1e-10
