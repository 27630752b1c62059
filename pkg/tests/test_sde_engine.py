"""Path simulation: folding, determinism, single paths and Girsanov weights."""

import math

import numpy as np
import pydantic
import pytest

from bernstein_lab.core.sde_engine import (
    Path,
    Scheme,
    SimConfig,
    exact_kernel_step,
    fold,
    fold_radius,
    girsanov_weight,
    inverse_cdf,
    reflect_at_rim,
    sample_endpoint_pairs,
    sample_endpoints,
    simulate_backward,
    simulate_ensemble,
    simulate_forward,
    uniform_starts,
)
from bernstein_lab.core.spectral_core import Direction, Geometry
from bernstein_lab.errors import DomainError, InsufficientPathDataError, KernelIntegrationError

SMALL = SimConfig(steps=50, paths=300, seed=11)


class TestFolding:

    def test_fold_interval(self):
        np.testing.assert_allclose(fold(np.array([-0.2, 1.3, 2.5, -1.7, 0.4])),
                                   [0.2, 0.7, 0.5, 0.3, 0.4], atol=1e-15)

    def test_fold_radius_preserves_area(self):
        r = np.array([0.5, 1.0, 1.2])
        folded = fold_radius(r)
        np.testing.assert_allclose(folded, [0.5, 1.0, math.sqrt(2 - 1.44)])
        # overshoot annulus and landing annulus have equal area
        assert 1 - folded[2] ** 2 == pytest.approx(r[2] ** 2 - 1)


class TestSampling:

    def test_inverse_cdf_of_uniform_density(self):
        grid = np.linspace(0.0, 1.0, 101)
        u = np.array([0.0, 0.123, 0.5, 0.999])
        out = inverse_cdf(grid, np.ones((4, 101)), u)
        np.testing.assert_allclose(out, u, atol=1e-12)

    def test_inverse_cdf_rejects_lost_mass(self):
        grid = np.linspace(0.0, 1.0, 101)
        with pytest.raises(KernelIntegrationError):
            inverse_cdf(grid, np.full(101, 0.5), np.array([0.5]))

    def test_inverse_cdf_shared_density(self):
        # one density row serves every uniform; density 2y has CDF y^2
        grid = np.linspace(0.0, 1.0, 201)
        u = np.array([0.1, 0.5, 0.9])
        np.testing.assert_allclose(inverse_cdf(grid, 2.0 * grid, u), np.sqrt(u), atol=1e-4)

    def test_inverse_cdf_unnormalized_rows(self):
        grid = np.linspace(0.0, 1.0, 101)
        dens = np.vstack([np.full(101, 0.5), np.full(101, 3.0)])
        out = inverse_cdf(grid, dens, np.array([0.25, 0.75]), check_mass=False)
        np.testing.assert_allclose(out, [0.25, 0.75], atol=1e-12)

    def test_inverse_cdf_row_count(self):
        grid = np.linspace(0.0, 1.0, 101)
        with pytest.raises(ValueError):
            inverse_cdf(grid, np.ones((2, 101)), np.array([0.1, 0.2, 0.3]))

    def test_exact_step_stays_in_domain(self, cosine_psi):
        rng = np.random.default_rng(3)
        for direction, (s, t) in ((Direction.FORWARD, (0.2, 0.3)),
                                  (Direction.BACKWARD, (0.3, 0.2))):
            y = exact_kernel_step(cosine_psi, 0.4, s, t, rng, direction=direction)
            assert 0.0 <= y <= 1.0

    def test_endpoints(self, example1):
        z0, z_final = sample_endpoints(example1, np.random.default_rng(5))
        assert 0.0 <= z0 <= 1.0 and 0.0 <= z_final <= 1.0
        a, b = sample_endpoint_pairs(example1, seed=5, count=600)
        assert a.shape == b.shape == (600,)
        again = sample_endpoint_pairs(example1, seed=5, count=600, batch_size=100)
        np.testing.assert_array_equal(a, again[0])
        rule = example1.measure_rule()
        mean0 = rule.integrate(rule.nodes * example1.marginal_initial(rule.nodes))
        assert abs(a.mean() - mean0) < 4 * a.std(ddof=1) / math.sqrt(600)

    def test_uniform_starts(self):
        ids = np.arange(2000)
        r = uniform_starts(Geometry.DISK_RADIAL, 1, ids)
        # area-uniform radii: P(r <= 1/sqrt 2) = 1/2
        assert abs(np.mean(r <= 1 / math.sqrt(2)) - 0.5) < 4 * 0.5 / math.sqrt(2000)


class TestEnsemble:

    def test_config_validation(self):
        with pytest.raises(pydantic.ValidationError):
            SimConfig(steps=1)
        with pytest.raises(pydantic.ValidationError):
            SimConfig(seed=-1)

    def test_shape_and_order(self, example1):
        paths = simulate_ensemble(example1, SMALL, Direction.BACKWARD, record_every=7, threads=1)
        assert paths.states.shape == (300, len(paths.times))
        assert np.all(np.diff(paths.times) > 0)
        assert paths.times[0] == 0.0 and paths.times[-1] == 1.0
        assert np.all((paths.states >= 0.0) & (paths.states <= 1.0))
        frame = paths.to_frame()
        assert list(frame.columns) == ["path_id", "t", "z"]
        assert len(frame) == paths.states.size

    def test_deterministic_across_threads(self, cosine_psi):
        one = simulate_ensemble(cosine_psi, SMALL, Direction.FORWARD, threads=1)
        two = simulate_ensemble(cosine_psi, SMALL, Direction.FORWARD, threads=2)
        np.testing.assert_array_equal(one.states, two.states)
        again = simulate_ensemble(cosine_psi, SMALL, Direction.FORWARD, threads=1)
        np.testing.assert_array_equal(one.states, again.states)

    def test_default_starts_follow_initial_occupation(self, example1):
        z0 = simulate_ensemble(example1, SimConfig(steps=2, paths=4000, seed=3), threads=1).at(0.0)
        rule = example1.measure_rule()
        mean = rule.integrate(rule.nodes * example1.marginal_initial(rule.nodes))
        assert abs(z0.mean() - mean) < 4 * z0.std(ddof=1) / math.sqrt(len(z0))

    def test_seed_changes_paths(self, example1):
        a = simulate_ensemble(example1, SMALL, threads=1)
        b = simulate_ensemble(example1, SMALL.model_copy(update={"seed": 12}), threads=1)
        assert not np.array_equal(a.states, b.states)

    def test_fixed_starts(self, example1):
        paths = simulate_ensemble(example1, SMALL, Direction.FORWARD, starts=0.25, threads=1)
        np.testing.assert_array_equal(paths.at(0.0), 0.25)

    def test_window(self, example1):
        paths = simulate_ensemble(example1, SMALL, Direction.FORWARD, starts=0.5,
                                  window=(0.2, 0.6), threads=1)
        assert paths.times[0] == pytest.approx(0.2)
        assert paths.times[-1] == pytest.approx(0.6)
        with pytest.raises(DomainError):
            simulate_ensemble(example1, SMALL, window=(0.6, 0.2), threads=1)

    def test_bad_starts(self, example1):
        with pytest.raises(DomainError):
            simulate_ensemble(example1, SMALL, starts=1.5, threads=1)

    def test_disk_radii(self, bessel_psi):
        paths = simulate_ensemble(bessel_psi, SMALL, Direction.FORWARD, threads=1)
        assert np.all((paths.states >= 0.0) & (paths.states <= 1.0))

    def test_exact_scheme(self, cosine_psi):
        cfg = SimConfig(steps=5, paths=40, seed=2, scheme=Scheme.EXACT)
        for direction in Direction:
            paths = simulate_ensemble(cosine_psi, cfg, direction, threads=1)
            assert paths.states.shape == (40, 6)
            assert np.all(paths.reflections == 0)

    def test_weights_need_forward_euler(self, example1):
        with pytest.raises(InsufficientPathDataError):
            simulate_ensemble(example1, SMALL, Direction.BACKWARD, weights=True, threads=1)

    def test_forward_law_at_horizon(self, example1):
        # psi = 1 makes the forward motion a reflected Brownian motion, which the
        # folded Euler scheme reproduces in law; Z_T then has density u(., T)
        cfg = SimConfig(steps=100, paths=4000, seed=21)
        z_final = simulate_ensemble(example1, cfg, record_every=100, threads=1).at(1.0)
        rule = example1.measure_rule()
        mean = rule.integrate(rule.nodes * example1.marginal_final(rule.nodes))
        se = z_final.std(ddof=1) / math.sqrt(len(z_final))
        assert abs(z_final.mean() - mean) < 4 * se


class TestDiskBoundary:

    def test_no_reflection_below_the_rim(self):
        # u = 0 puts the bridge maximum at the larger endpoint
        out, hit = reflect_at_rim(np.array([0.9]), np.array([0.95]), 1e-3, np.array([0.0]))
        assert out[0] == 0.95 and not hit[0]

    def test_overshoot_is_reflected(self):
        rng = np.random.default_rng(8)
        r = rng.uniform(0.9, 1.0, 5000)
        free = r + 0.05 * rng.standard_normal(5000)
        out, hit = reflect_at_rim(r, free, 0.0025, rng.random(5000))
        assert np.all(out <= 1.0) and np.all(out <= free)
        np.testing.assert_array_equal(hit, out < free)
        assert hit[free > 1.0].all()

    def test_start_on_rim_matches_reflected_law(self):
        # from the rim the reflected motion sits at 1 - |N| sqrt(dt)
        rng = np.random.default_rng(9)
        n, dt = 20_000, 0.0025
        free = 1.0 + math.sqrt(dt) * rng.standard_normal(n)
        out, _ = reflect_at_rim(np.ones(n), free, dt, rng.random(n))
        depth = 1.0 - out
        expected = math.sqrt(dt) * math.sqrt(2.0 / math.pi)
        assert abs(depth.mean() - expected) < 4 * depth.std(ddof=1) / math.sqrt(n)
        assert depth.var() == pytest.approx(dt * (1.0 - 2.0 / math.pi), rel=0.05)

    def test_uniform_law_is_kept(self, example2):
        # driftless reflected motion started area-uniform keeps E[r^2] = 1/2
        n = 20_000
        starts = uniform_starts(Geometry.DISK_RADIAL, 3, np.arange(n))
        cfg = SimConfig(paths=n, seed=3, batch_size=2048)
        paths = simulate_ensemble(example2, cfg, starts=starts, driftless=True,
                                  record_every=cfg.steps, threads=1)
        squared = paths.at(1.0) ** 2
        se = squared.std(ddof=1) / math.sqrt(n)
        assert abs(squared.mean() - 0.5) < 3 * se
        assert paths.reflections.sum() > 0

    def test_radii_stay_in_unit_interval(self, bessel_psi):
        cfg = SimConfig(steps=20, paths=500, seed=4)
        for direction in Direction:
            paths = simulate_ensemble(bessel_psi, cfg, direction, threads=1)
            assert np.all((paths.states >= 0.0) & (paths.states <= 1.0))


class TestSinglePaths:

    def test_forward_without_drift_follows_noise(self, example1):
        cfg = SimConfig(steps=10, seed=0)
        path = simulate_forward(example1, cfg, 0.5, noise=np.zeros(10))
        np.testing.assert_allclose(path.states, 0.5)
        assert path.direction == Direction.FORWARD
        np.testing.assert_allclose(path.noise, 0.0)

    def test_backward_path(self, example1):
        cfg = SimConfig(steps=20, seed=4)
        path = simulate_backward(example1, cfg, 0.3)
        assert np.all(np.diff(path.times) > 0)
        assert path.states[-1] == 0.3
        assert len(path.noise) == 20

    def test_noise_shape(self, example1):
        with pytest.raises(DomainError):
            simulate_forward(example1, SimConfig(steps=10), 0.5, noise=np.zeros(9))

    def test_path_validation(self):
        with pytest.raises(ValueError):
            Path(np.array([0.0, 0.5, 0.4]), np.array([0.1, 0.2, 0.3]), Direction.FORWARD)
        with pytest.raises(ValueError):
            Path(np.array([0.0, 1.0]), np.array([0.1, 1.2]), Direction.FORWARD)


class TestGirsanov:

    def test_zero_drift_has_unit_weight(self, example1):
        path = simulate_forward(example1, SimConfig(steps=20, seed=1), 0.5)
        weighted = girsanov_weight(example1, path)
        assert weighted.log_weight == 0.0
        assert weighted.weight == 1.0

    def test_weight_formula(self, cosine_psi):
        path = simulate_forward(cosine_psi, SimConfig(steps=20, seed=1), 0.5)
        dt = np.diff(path.times)
        grad = np.array([cosine_psi.forward_drift(z, t)
                         for z, t in zip(path.states[:-1], path.times[:-1])])
        expected = -np.sum(grad * path.noise) - 0.5 * np.sum(grad ** 2 * dt)
        assert girsanov_weight(cosine_psi, path).log_weight == pytest.approx(expected, rel=1e-12)

    def test_disk_path_carries_positions(self, bessel_psi):
        path = simulate_forward(bessel_psi, SimConfig(steps=20, seed=1), 0.5)
        assert path.positions.shape == (21, 2)
        assert math.isfinite(girsanov_weight(bessel_psi, path).log_weight)

    def test_rejects_backward_and_exact_paths(self, cosine_psi):
        backward = simulate_backward(cosine_psi, SimConfig(steps=10, seed=1), 0.5)
        with pytest.raises(InsufficientPathDataError):
            girsanov_weight(cosine_psi, backward)
        exact = simulate_forward(cosine_psi, SimConfig(steps=5, seed=1, scheme=Scheme.EXACT), 0.5)
        with pytest.raises(InsufficientPathDataError):
            girsanov_weight(cosine_psi, exact)

    @pytest.mark.parametrize("name", ["cosine_psi", "bessel_psi"])
    def test_ensemble_weights_match_single_paths(self, name, request):
        model = request.getfixturevalue(name)
        ensemble = simulate_ensemble(model, SimConfig(steps=20, paths=3, seed=1), starts=0.5,
                                     weights=True, threads=1)
        path = simulate_forward(model, SimConfig(steps=20, seed=1), 0.5)
        np.testing.assert_allclose(ensemble.states[0], path.states, rtol=1e-12)
        assert ensemble.log_weights[0] == pytest.approx(
            girsanov_weight(model, path).log_weight, rel=1e-10, abs=1e-14)
