"""Feynman-Kac estimates of u and v under the reflected Wiener law."""

import math

import numpy as np
import pytest

from bernstein_lab.core.feynman_kac import (
    EstimatorReport,
    estimate_occupation,
    estimate_u,
    estimate_v,
    kernel_consistency,
    summarize,
)
from bernstein_lab.core.sde_engine import SimConfig
from bernstein_lab.errors import DomainError, PreconditionError

CONFIG = SimConfig(steps=400, paths=20_000, seed=3)


class TestEstimatorReport:

    def test_z_score(self):
        report = EstimatorReport(1.1, 0.05, 100, 1.0)
        assert report.z_score == pytest.approx(2.0)
        assert report.within(3.0)
        assert not report.within(1.0)

    def test_zero_error(self):
        assert EstimatorReport(1.0, 0.0, 0, 1.0).z_score == 0.0
        assert EstimatorReport(1.5, 0.0, 0, 1.0).z_score == math.inf
        assert EstimatorReport(1.0, 0.1, 10).z_score is None

    def test_summarize(self):
        samples = np.array([1.0, 2.0, 3.0, 4.0])
        report = summarize(samples, 2.5, "exact")
        assert report.estimate == 2.5
        assert report.std_error == pytest.approx(np.std(samples, ddof=1) / 2)
        assert report.target_label == "exact"


class TestEstimates:

    def test_u_example1(self, example1):
        report = estimate_u(example1, 0.0, 0.1, CONFIG, threads=1)
        assert report.target == pytest.approx(1 + 0.5 * math.exp(-math.pi ** 2 * 0.1 / 2))
        assert report.samples == CONFIG.paths
        assert report.within(4.0)

    def test_u_with_potential(self, example1, example1_potential):
        report = estimate_u(example1_potential, 0.3, 0.5, CONFIG, threads=1)
        assert report.target == pytest.approx(math.exp(-0.35) * example1.u(0.3, 0.5))
        assert report.within(4.0)

    def test_v_cosine(self, cosine_psi):
        report = estimate_v(cosine_psi, 0.3, 0.5, CONFIG, threads=1)
        assert report.target == pytest.approx(cosine_psi.v(0.3, 0.5))
        assert report.within(4.0)

    def test_v_disk(self, bessel_psi):
        report = estimate_v(bessel_psi, 0.0, 0.8, CONFIG, threads=1)
        assert report.within(4.0)

    def test_occupation(self, cosine_psi):
        report = estimate_occupation(cosine_psi, 0.4, 0.5, CONFIG, threads=1)
        assert report.target == pytest.approx(cosine_psi.occupation(0.4, 0.5))
        assert report.within(4.0)

    def test_degenerate_horizons(self, cosine_psi):
        u = estimate_u(cosine_psi, 0.2, 0.0, CONFIG)
        assert u.samples == 0 and u.std_error == 0.0
        assert u.estimate == pytest.approx(1 + 0.5 * math.cos(0.2 * math.pi))
        v = estimate_v(cosine_psi, 0.2, 1.0, CONFIG)
        assert v.samples == 0
        assert v.estimate == pytest.approx(cosine_psi.v(0.2, 1.0))
        assert v.z_score == 0.0

    def test_domain(self, example1):
        with pytest.raises(DomainError):
            estimate_u(example1, 1.5, 0.5, CONFIG)
        with pytest.raises(DomainError):
            estimate_v(example1, 0.5, 1.5, CONFIG)


class TestKernelConsistency:

    def test_quadrature_targets(self, cosine_psi):
        report = kernel_consistency(cosine_psi, 0.6, 0.4, CONFIG, threads=1)
        assert report.u.target == pytest.approx(cosine_psi.u(0.6, 0.4), abs=1e-8)
        assert report.v.target == pytest.approx(cosine_psi.v(0.6, 0.4), abs=1e-8)
        assert report.u.within(4.0) and report.v.within(4.0)

    def test_needs_zero_potential(self, example1_potential):
        with pytest.raises(PreconditionError):
            kernel_consistency(example1_potential, 0.5, 0.5, CONFIG)

    @pytest.mark.parametrize("t", [0.0, 1.0])
    def test_open_interval(self, example1, t):
        with pytest.raises(DomainError):
            kernel_consistency(example1, 0.5, t, CONFIG)
