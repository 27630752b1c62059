"""Numerical verification suite for a Bernstein model.

Checks come in two kinds:

    - quadrature: deterministic identities (Green function laws, kernel laws,
      drift and diffusion limits, Lindeberg tails) measured as maximum
      deviations on fixed grids against absolute thresholds
    - statistical: hypothesis tests on simulated paths (chi-square, KS,
      z-scores) at a fixed test size, with metric = test statistic and
      threshold = critical value

Every :class:`CheckResult` satisfies ``passed == (metric <= threshold)``.

Example:
    >>> from bernstein_lab.core.verify_harness import HarnessConfig, run_all
    >>> results, status = run_all(model, HarnessConfig(seed=7), only=["green", "kernels"])
"""

from dataclasses import dataclass, fields
from enum import Enum
import math
from typing import Callable, Iterable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from ..config import logger
from ..errors import DomainError
from ..utils.quadrature import bin_masses, gauss_rule, rule_for, simpson_with_error
from .bernstein_model import BernsteinModel, measure_weight
from .feynman_kac import estimate_occupation, estimate_u, estimate_v, kernel_consistency
from .sde_engine import (
    Scheme,
    SimConfig,
    sample_endpoint_pairs,
    simulate_ensemble,
    uniform_starts,
)
from .spectral_core import (
    Direction,
    Geometry,
    green,
    green_decay_profile,
    green_images,
    green_spectral,
    neumann_basis,
)

LIMIT_GAPS = (0.04, 0.02, 0.01, 0.005, 0.0025, 0.00125)
LINDEBERG_GAPS = (0.02, 0.01, 0.005, 0.0025, 0.00125)
DISCRETIZATION_STEPS = (50, 200, 800)
FINE_NODES = 2001
LOW_POWER_PATHS = 10_000
EIGENMODE_COUNT = 16
SHORT_GAP = 0.001
Z_THRESHOLD = 3.0


class CheckKind(str, Enum):
    QUADRATURE = "quadrature"
    STATISTICAL = "statistical"


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one check.

    Attributes:
        name: Dotted check name, prefixed by its group
        kind: quadrature or statistical
        metric: Measured deviation or test statistic
        threshold: Largest passing metric
        passed: metric <= threshold
        detail: Human-readable context
    """
    name: str
    kind: CheckKind
    metric: float
    threshold: float
    passed: bool
    detail: str = ""

    def __post_init__(self):
        if self.passed != bool(self.metric <= self.threshold):
            raise ValueError(f"{self.name}: passed must equal metric <= threshold")

    @classmethod
    def judge(cls, name: str, kind: CheckKind, metric: float, threshold: float,
              detail: str = "") -> "CheckResult":
        metric = float(metric)
        result = cls(name, kind, metric, float(threshold), bool(metric <= threshold), detail)
        verdict = "PASS" if result.passed else "FAIL"
        logger.info(f"{verdict} {name}: metric={metric:.4g} threshold={threshold:.4g} {detail}")
        return result


class HarnessConfig(BaseModel):
    """Sample sizes and test size of the verification suite.

    Attributes:
        seed: Root seed of every simulated check
        paths: Paths for occupation, invariance, Feynman-Kac and Girsanov checks
        qv_paths: Paths for quadratic variation, martingale, moment and endpoint checks
        exact_paths: Paths for the exact-kernel two-time test
        control_paths: Paths for the negative controls
        steps: Euler steps over [0, T]
        bins: Histogram bins of the occupation tests
        alpha: Test size of every statistical check
        strict: Rerun failed statistical checks once with 4x paths
        threads: Worker processes
    """
    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, ge=0, description="Root seed")
    paths: int = Field(100_000, ge=100, description="Paths for distribution tests")
    qv_paths: int = Field(10_000, ge=100, description="Paths for local path tests")
    exact_paths: int = Field(20_000, ge=100, description="Paths for exact-kernel test")
    control_paths: int = Field(20_000, ge=100, description="Paths for negative controls")
    steps: int = Field(400, ge=8, description="Euler steps over [0, T]")
    bins: int = Field(20, ge=2, description="Occupation histogram bins")
    alpha: float = Field(0.01, gt=0.0, lt=0.5, description="Test size")
    strict: bool = Field(False, description="Rerun failed statistical checks with 4x paths")
    threads: int | None = Field(None, ge=1, description="Worker processes")

    def sim(self, paths: int, steps: int | None = None, **update) -> SimConfig:
        return SimConfig(paths=paths, steps=steps or self.steps, seed=self.seed,
                         threads=self.threads, **update)

    def scaled(self, factor: int) -> "HarnessConfig":
        return self.model_copy(update={
            name: getattr(self, name) * factor
            for name in ("paths", "qv_paths", "exact_paths", "control_paths")
        })


def _power_note(paths: int) -> str:
    if paths < LOW_POWER_PATHS:
        logger.warning(f"Only {paths} paths: statistical power is low")
        return f" (low power: {paths} < {LOW_POWER_PATHS} paths)"
    return ""


def _bin_edges(geometry: Geometry, bins: int) -> np.ndarray:
    """Uniform bins on the interval, equal-area annuli on the disk."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    return edges if geometry == Geometry.INTERVAL else np.sqrt(edges)


def _radial_correction(geometry: Geometry, x) -> np.ndarray:
    """Ito drift 1/(2r) of the radius of planar Brownian motion (0 on the interval)."""
    x = np.asarray(x, dtype=np.float64)
    if geometry == Geometry.INTERVAL:
        return np.zeros_like(x)
    return 0.5 / np.where(x > 0, x, np.inf)


# ---------------------------------------------------------------------- quadrature checks


def check_green_identities(model: BernsteinModel) -> list[CheckResult]:
    """Identities of g and of the Neumann modes behind it.

    Symmetry, composition law, unit mass with a Simpson-Richardson error
    estimate and the normalization and ordering of the first eigenmodes; on
    the interval also agreement with the image sum and with the free Gaussian
    at a short gap.
    """
    geo, policy = model.geometry, model.policy
    q = CheckKind.QUADRATURE
    x = np.linspace(0.0, 1.0, 21)
    X, Y = x[:, None], x[None, :]
    T = model.horizon
    pairs = [(0.0, 0.1 * T), (0.0, 0.5 * T), (0.2 * T, 0.7 * T)]

    symmetry = max(
        float(np.max(np.abs(np.asarray(green(X, t, Y, s, geo, policy))
                            - np.asarray(green(Y, t, X, s, geo, policy)))))
        for s, t in pairs
    )
    results = [CheckResult.judge("green.symmetry", q, symmetry, 1e-10, "21x21 grid, 3 gaps")]

    rule = rule_for(geo.value, 201)
    z, wz = rule.nodes, rule.weights * (1.0 if geo == Geometry.INTERVAL else rule.nodes)
    xs = np.linspace(0.0, 1.0, 11)
    composition = 0.0
    s, r, t = 0.0, 0.5 * T, T
    for xi in xs:
        left = np.asarray(green(xi, t, z, r, geo, policy)) * wz
        inner = np.asarray(green(z[:, None], r, xs[None, :], s, geo, policy))
        composed = left @ inner
        direct = np.asarray(green(xi, t, xs, s, geo, policy))
        composition = max(composition, float(np.max(np.abs(composed - direct))))
    results.append(CheckResult.judge("green.composition", q, composition, 1e-6,
                                     "201-node quadrature, 11x11 grid"))

    mass = 0.0
    for s, t in pairs:
        kernel = np.asarray(green(xs[:, None], t, z[None, :], s, geo, policy))
        mass = max(mass, float(np.max(np.abs(kernel @ wz - 1.0))))
    results.append(CheckResult.judge("green.mass", q, mass, 1e-8, "radial weight"))

    weight = (lambda y: np.ones_like(y)) if geo == Geometry.INTERVAL else (lambda y: y)
    richardson = 0.0
    for s, t in pairs:
        for xi in xs:
            _, error = simpson_with_error(
                lambda y: np.asarray(green(xi, t, y, s, geo, policy)) * weight(y), 201)
            richardson = max(richardson, error)
    results.append(CheckResult.judge("green.mass_richardson", q, richardson, 1e-8,
                                     "Simpson on 201 and 401 nodes, 11 states, 3 gaps"))
    results.append(_eigenmode_check(geo))

    if geo == Geometry.INTERVAL:
        gap = min(0.1, 0.5 * T)
        images = float(np.max(np.abs(
            np.asarray(green_spectral(X, gap, Y, 0.0, geo, policy))
            - np.asarray(green_images(X, gap, Y, 0.0, policy.image_count))
        )))
        results.append(CheckResult.judge("green.images", q, images, 1e-8, f"gap {gap}"))

        profile = green_decay_profile(0.5, SHORT_GAP, geo, policy)
        centre = profile.loc[(profile["y"] - 0.5).abs().idxmin(), "ratio"]
        logger.debug(f"Green/Gaussian ratio at gap {SHORT_GAP}: "
                     f"min {profile['ratio'].min():.6g}, max {profile['ratio'].max():.6g}")
        results.append(CheckResult.judge("green.short_time", q, abs(centre - 1.0), 1e-6,
                                         f"g / free Gaussian on the diagonal at gap {SHORT_GAP}"))
    return results


def _eigenmode_check(geometry: Geometry) -> CheckResult:
    """Unit normalized norms, lambda_0 = 0 and increasing eigenvalues of the first modes."""
    basis = neumann_basis(geometry, EIGENMODE_COUNT)
    rule = gauss_rule(401)
    values = basis.values(rule.nodes)
    weight = basis.weight(rule.nodes)
    deviation = abs(basis.modes[0].eigenvalue)
    for previous, mode in zip((None,) + basis.modes, basis.modes):
        norm = mode.normalizer * float(rule.integrate(values[:, mode.index] ** 2 * weight))
        deviation = max(deviation, abs(norm - 1.0))
        if previous is not None and mode.eigenvalue <= previous.eigenvalue:
            deviation = math.inf
    return CheckResult.judge("green.eigenmodes", CheckKind.QUADRATURE, deviation, 1e-10,
                             f"{EIGENMODE_COUNT} modes, 401-node Gauss rule")


def _normalization_check(model: BernsteinModel) -> CheckResult:
    rule = model.measure_rule()
    x = rule.nodes
    quad = float(rule.weights @ model.endpoint_density(x[:, None], x[None, :]) @ rule.weights)
    closed = model.mass
    deviation = max(abs(quad - 1.0), abs(closed - 1.0))
    return CheckResult.judge("kernels.normalization", CheckKind.QUADRATURE, deviation, 1e-8,
                             f"closed form {closed:.12g}, quadrature {quad:.12g}")


def check_kernel_laws(model: BernsteinModel) -> list[CheckResult]:
    """Unit mass, Chapman-Kolmogorov, bridge product and reciprocity identities."""
    q = CheckKind.QUADRATURE
    T = model.horizon
    rule = model.measure_rule()
    z, w = rule.nodes, rule.weights
    states = np.linspace(0.0, 1.0, 5)
    time_pairs = [(0.0, T), (0.0, 0.5 * T), (0.25 * T, 0.75 * T), (0.5 * T, T), (0.4 * T, 0.6 * T)]

    mass = 0.0
    for s, t in time_pairs:
        fwd = np.asarray(model.forward_kernel(states[:, None], s, z[None, :], t)) @ w
        bwd = np.asarray(model.backward_kernel(states[:, None], t, z[None, :], s)) @ w
        r = 0.5 * (s + t)
        bridge = np.array([
            np.asarray(model.bernstein_transition(xi, t, z, r, 1.0 - xi, s)) @ w for xi in states
        ])
        mass = max(mass, *(float(np.max(np.abs(v - 1.0))) for v in (fwd, bwd, bridge)))
    results = [CheckResult.judge("kernels.mass", q, mass, 1e-8, "p, m*, m on 5x5 grid")]

    ys = np.linspace(0.0, 1.0, 11)
    ck = 0.0
    for s, r, t in ((0.0, 0.5 * T, T), (0.25 * T, 0.5 * T, 0.75 * T)):
        for xi in states:
            fwd_left = np.asarray(model.forward_kernel(xi, s, z, r)) * w
            fwd_right = np.asarray(model.forward_kernel(z[:, None], r, ys[None, :], t))
            fwd_direct = np.asarray(model.forward_kernel(xi, s, ys, t))
            bwd_left = np.asarray(model.backward_kernel(xi, t, z, r)) * w
            bwd_right = np.asarray(model.backward_kernel(z[:, None], r, ys[None, :], s))
            bwd_direct = np.asarray(model.backward_kernel(xi, t, ys, s))
            ck = max(ck, float(np.max(np.abs(fwd_left @ fwd_right - fwd_direct))),
                     float(np.max(np.abs(bwd_left @ bwd_right - bwd_direct))))
    results.append(CheckResult.judge("kernels.chapman_kolmogorov", q, ck, 1e-6,
                                     "forward and backward kernels"))

    rng = np.random.default_rng(12345)
    s, r, t, t2 = 0.1 * T, 0.35 * T, 0.6 * T, 0.9 * T
    product = 0.0
    for x2, x, zz, y in rng.random((20, 4)):
        lhs = (model.bernstein_transition(x2, t2, x, t, y, s)
               * model.bernstein_transition(x, t, zz, r, y, s))
        rhs = (model.bernstein_transition(x2, t2, zz, r, y, s)
               * model.bernstein_transition(x2, t2, x, t, zz, r))
        product = max(product, abs(lhs - rhs) / max(1.0, abs(lhs)))
    results.append(CheckResult.judge("kernels.bridge_product", q, product, 1e-10,
                                     "20 sampled configurations"))

    grid = np.linspace(0.0, 1.0, 11)
    X, Y = grid[:, None], grid[None, :]
    reciprocity = 0.0
    for s, t in ((0.0, 0.5 * T), (0.25 * T, 0.75 * T), (0.5 * T, T)):
        lhs = np.asarray(model.backward_kernel(Y, t, X, s)) * np.asarray(model.occupation(Y, t))
        rhs = np.asarray(model.occupation(X, s)) * np.asarray(model.forward_kernel(X, s, Y, t))
        reciprocity = max(reciprocity,
                          float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs)))))
    results.append(CheckResult.judge("kernels.reciprocity", q, reciprocity, 1e-9,
                                     "11x11x3 grid"))

    results.append(_normalization_check(model))
    occupation = model.occupation_density().check_mass()
    results.append(CheckResult.judge("kernels.occupation_mass", q, occupation, 1e-8,
                                     "t in {0, T/4, T/2, 3T/4, T}"))
    marginals = max(
        float(np.max(np.abs(model.marginal_initial(grid) - model.occupation(grid, 0.0)))),
        float(np.max(np.abs(model.marginal_final(grid) - model.occupation(grid, T)))),
    )
    results.append(CheckResult.judge("kernels.marginals", q, marginals, 1e-12,
                                     "mu_0, mu_T against rho"))
    return results


def _finite_gap_moments(model: BernsteinModel, x: float, s: float, gap: float,
                        direction: Direction) -> tuple[float, float]:
    rule = model.measure_rule(FINE_NODES)
    y = rule.nodes
    if direction == Direction.FORWARD:
        dens = np.asarray(model.forward_kernel(x, s, y, s + gap))
        step = y - x
    else:
        dens = np.asarray(model.backward_kernel(x, s + gap, y, s))
        step = x - y
    return float(rule.integrate(step * dens)) / gap, float(rule.integrate(step ** 2 * dens)) / gap


def check_drift_limits(model: BernsteinModel, x: float = 0.5, s: float = 0.0) -> list[CheckResult]:
    """Finite-gap first and second moments of m* and m against the drifts.

    Forward: (1/h) int (y - x) m*(x, s; y, s + h) dmu(y) -> b*(x, s).
    Backward: (1/h) int (x - y) m(x, s + h; y, s) dmu(y) -> b(x, s).
    On the disk the radius carries the extra Ito drift 1/(2x), with the sign
    of the direction of travel. Second moments tend to 1.
    """
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must be interior, got {x}")
    gaps = [h for h in LIMIT_GAPS if s + h <= model.horizon]
    if len(gaps) < 3:
        raise DomainError(f"Horizon {model.horizon} too short for the gap sequence from s={s}")
    correction = float(_radial_correction(model.geometry, x))
    targets = {
        Direction.FORWARD: float(model.forward_drift(x, s)) + correction,
        Direction.BACKWARD: float(model.backward_drift(x, s)) - correction,
    }
    q = CheckKind.QUADRATURE
    results = []
    for direction, target in targets.items():
        moments = [_finite_gap_moments(model, x, s, h, direction) for h in gaps]
        errors = np.array([abs(m1 - target) for m1, _ in moments])
        scale = max(1.0, abs(target))
        name = f"limits.{direction.value}"
        sequence = ", ".join(f"{m1:.6f}" for m1, _ in moments)
        results.append(CheckResult.judge(
            f"{name}.drift", q, errors[-1] / scale, 0.02,
            f"target {target:.6f}, moments over gaps {gaps}: {sequence}"))
        results.append(CheckResult.judge(
            f"{name}.monotone", q, float(np.max(np.diff(errors))), 1e-9,
            "largest error increase along the gap sequence"))
        results.append(CheckResult.judge(
            f"{name}.diffusion", q, abs(moments[-1][1] - 1.0), 0.02,
            f"second moment {moments[-1][1]:.6f} at gap {gaps[-1]}"))
    return results


def lindeberg_ratios(model: BernsteinModel, x: float, s: float, eps: float,
                     direction: Direction, gaps: Sequence[float] = LINDEBERG_GAPS) -> np.ndarray:
    """(1/h) * mass of the kernel outside |y - x| <= eps, for each gap h."""
    rule = model.measure_rule(FINE_NODES)
    y = rule.nodes
    outside = np.abs(y - x) > eps
    ratios = []
    for h in gaps:
        if direction == Direction.FORWARD:
            dens = np.asarray(model.forward_kernel(x, s, y, s + h))
        else:
            dens = np.asarray(model.backward_kernel(x, s + h, y, s))
        ratios.append(float(rule.integrate(dens * outside)) / h)
    return np.array(ratios)


def check_lindeberg(model: BernsteinModel, x: float = 0.5, s: float = 0.0,
                    eps: float = 0.2) -> list[CheckResult]:
    """Tail mass ratios of m* and m must vanish as the gap shrinks.

    Along the gaps (0.02, ..., 0.00125) the ratios must not increase, must
    drop at least 10x per halving once h <= eps^2 / 8, and end below 1e-3.
    """
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    q = CheckKind.QUADRATURE
    results = []
    for direction in Direction:
        ratios = lindeberg_ratios(model, x, s, eps, direction)
        with np.errstate(divide="ignore", invalid="ignore"):
            halving = np.where(ratios[:-1] > 0, ratios[1:] / ratios[:-1], 0.0)
        small = np.array(LINDEBERG_GAPS[:-1]) <= eps * eps / 8
        name = f"lindeberg.{direction.value}"
        detail = ", ".join(f"{r:.3e}" for r in ratios)
        results.append(CheckResult.judge(f"{name}.tail", q, ratios[-1], 1e-3, f"ratios {detail}"))
        results.append(CheckResult.judge(
            f"{name}.decay", q, float(halving[small].max()) if small.any() else 0.0, 0.1,
            f"halving factors from gap {eps * eps / 8:.4g} down"))
        results.append(CheckResult.judge(
            f"{name}.monotone", q, float(halving.max()), 1.0, "no increase along the gaps"))
    return results


def check_drift_peak(model: BernsteinModel) -> list[CheckResult]:
    """|b| vanishes on both ends of [0, 1] and peaks strictly inside."""
    worst, detail = 0.0, []
    for t in (0.0, 0.5 * model.horizon):
        ends = np.abs(np.asarray(model.backward_drift(np.array([0.0, 1.0]), t)))
        peak_at, peak = model.drift_peak(t)
        metric = float(ends.max())
        if peak > 1e-12 and not 0.0 < peak_at < 1.0:
            metric = math.inf
        worst = max(worst, metric)
        detail.append(f"t={t:g}: peak {peak:.6f} at {peak_at:.4f}")
    return [CheckResult.judge("drift_peak.boundary", CheckKind.QUADRATURE, worst, 1e-12,
                              "; ".join(detail))]


# ---------------------------------------------------------------------- statistical checks


def _chi2_result(name: str, samples: np.ndarray, probabilities: np.ndarray,
                 edges: np.ndarray, alpha: float, detail: str = "") -> CheckResult:
    counts, _ = np.histogram(samples, bins=edges)
    expected = probabilities / probabilities.sum() * len(samples)
    statistic = float(np.sum((counts - expected) ** 2 / expected))
    critical = float(stats.chi2.ppf(1.0 - alpha, len(expected) - 1))
    return CheckResult.judge(name, CheckKind.STATISTICAL, statistic, critical,
                             f"chi2 with {len(expected) - 1} dof{detail}")


def _occupation_masses(model: BernsteinModel, t: float, edges: np.ndarray) -> np.ndarray:
    return bin_masses(lambda p: model.occupation(p, t), edges,
                      weight=lambda p: measure_weight(model.geometry, p))


def _occupation_checks(model: BernsteinModel, cfg: HarnessConfig,
                       directions: Iterable[Direction] = tuple(Direction),
                       prefix: str = "paths.occupation") -> list[CheckResult]:
    T = model.horizon
    edges = _bin_edges(model.geometry, cfg.bins)
    note = _power_note(cfg.paths)
    steps = 4 * max(1, cfg.steps // 4)
    results = []
    for direction in directions:
        ensemble = simulate_ensemble(model, cfg.sim(cfg.paths, steps), direction,
                                     record_every=steps // 4, threads=cfg.threads)
        for label, t in (("quarter", 0.25 * T), ("half", 0.5 * T)):
            results.append(_chi2_result(
                f"{prefix}.{direction.value}.{label}", ensemble.at(t),
                _occupation_masses(model, t, edges), edges, cfg.alpha, f" at t={t:g}{note}"))
    return results


def check_uniform_invariance(model: BernsteinModel, cfg: HarnessConfig) -> list[CheckResult]:
    """KS tests that driftless reflected motion keeps the uniform law (z^2 on the disk)."""
    T = model.horizon
    steps = 10 * max(1, cfg.steps // 10)
    starts = uniform_starts(model.geometry, cfg.seed, np.arange(cfg.paths))
    ensemble = simulate_ensemble(model, cfg.sim(cfg.paths, steps), Direction.FORWARD,
                                 starts=starts, driftless=True, record_every=steps // 10,
                                 threads=cfg.threads)
    critical = float(stats.kstwo.ppf(1.0 - cfg.alpha, cfg.paths))
    note = _power_note(cfg.paths)
    results = []
    for fraction in (0.1, 0.5, 1.0):
        z = ensemble.at(fraction * T)
        sample = z if model.geometry == Geometry.INTERVAL else z ** 2
        statistic = float(stats.kstest(sample, "uniform").statistic)
        results.append(CheckResult.judge(
            f"paths.uniform_start.t{fraction:g}", CheckKind.STATISTICAL, statistic, critical,
            f"KS D at t={fraction * T:g}{note}"))
    return results


def _quadratic_variation_check(model: BernsteinModel, cfg: HarnessConfig) -> CheckResult:
    window = min(0.02, model.horizon)
    ensemble = simulate_ensemble(model, cfg.sim(cfg.qv_paths, 200), Direction.FORWARD,
                                 starts=0.5, window=(0.0, window), record_every=200,
                                 threads=cfg.threads)
    qv = ensemble.quadratic_variation
    se = float(np.std(qv, ddof=1)) / math.sqrt(len(qv))
    z = abs(float(np.mean(qv)) - window) / se
    return CheckResult.judge("paths.quadratic_variation", CheckKind.STATISTICAL, z, Z_THRESHOLD,
                             f"mean {np.mean(qv):.6g} vs {window:g}{_power_note(cfg.qv_paths)}")


def _martingale_check(model: BernsteinModel, cfg: HarnessConfig) -> CheckResult:
    s = 0.5 * model.horizon
    t = min(s + 0.005, model.horizon)
    steps = 10
    ensemble = simulate_ensemble(model, cfg.sim(cfg.qv_paths, steps), Direction.FORWARD,
                                 window=(s, t), threads=cfg.threads)
    dt = (t - s) / steps
    z = ensemble.states
    compensator = np.zeros(len(z))
    for k in range(steps):
        drift = np.asarray(model.forward_drift(z[:, k], ensemble.times[k]))
        compensator += (drift + _radial_correction(model.geometry, z[:, k])) * dt
    increments = z[:, -1] - z[:, 0] - compensator
    edges = np.linspace(0.25, 0.75, 6)
    which = np.digitize(z[:, 0], edges) - 1
    worst, used = 0.0, 0
    for b in range(len(edges) - 1):
        sample = increments[which == b]
        if len(sample) < 30:
            continue
        used += 1
        se = float(np.std(sample, ddof=1)) / math.sqrt(len(sample))
        worst = max(worst, abs(float(np.mean(sample))) / se)
    return CheckResult.judge("paths.martingale", CheckKind.STATISTICAL, worst, Z_THRESHOLD,
                             f"max |z| over {used} bins of Z_s in [0.25, 0.75]"
                             f"{_power_note(cfg.qv_paths)}")


def _moment_scaling_check(model: BernsteinModel, cfg: HarnessConfig) -> CheckResult:
    window = min(0.01, model.horizon)
    ensemble = simulate_ensemble(model, cfg.sim(cfg.qv_paths, 10), Direction.FORWARD,
                                 starts=0.5, window=(0.0, window), threads=cfg.threads)
    gaps = ensemble.times[1:] - ensemble.times[0]
    fourth = np.mean((ensemble.states[:, 1:] - ensemble.states[:, :1]) ** 4, axis=0)
    slope = float(np.polyfit(np.log(gaps), np.log(fourth), 1)[0])
    return CheckResult.judge("paths.moment_scaling", CheckKind.STATISTICAL, abs(slope - 2.0), 0.2,
                             f"slope {slope:.4f} of log E|dZ|^4 over a decade of gaps")


def _exact_kernel_check(model: BernsteinModel, cfg: HarnessConfig, cells: int = 5) -> CheckResult:
    T = model.horizon
    ensemble = simulate_ensemble(model, cfg.sim(cfg.exact_paths, 2, scheme=Scheme.EXACT),
                                 Direction.FORWARD, threads=cfg.threads)
    edges = _bin_edges(model.geometry, cells)
    rule = gauss_rule(12)
    masses = np.empty((cells, cells))
    for i in range(cells):
        a = edges[i] + (edges[i + 1] - edges[i]) * rule.nodes
        wa = rule.weights * (edges[i + 1] - edges[i]) * measure_weight(model.geometry, a)
        for j in range(cells):
            b = edges[j] + (edges[j + 1] - edges[j]) * rule.nodes
            wb = rule.weights * (edges[j + 1] - edges[j]) * measure_weight(model.geometry, b)
            joint = np.asarray(model.finite_dimensional_density(
                [a[:, None], b[None, :]], [0.5 * T, T]))
            masses[i, j] = wa @ joint @ wb
    counts, _, _ = np.histogram2d(ensemble.at(0.5 * T), ensemble.at(T), bins=[edges, edges])
    expected = masses / masses.sum() * len(ensemble)
    statistic = float(np.sum((counts - expected) ** 2 / expected))
    dof = cells * cells - 1
    critical = float(stats.chi2.ppf(1.0 - cfg.alpha, dof))
    return CheckResult.judge("paths.exact_two_time", CheckKind.STATISTICAL, statistic, critical,
                             f"joint (Z_T/2, Z_T), chi2 with {dof} dof"
                             f"{_power_note(cfg.exact_paths)}")


def _discretization_check(model: BernsteinModel, cfg: HarnessConfig) -> CheckResult:
    t = 0.5 * model.horizon
    rule = model.measure_rule()
    exact = float(rule.integrate(rule.nodes * model.occupation(rule.nodes, t)))
    errors, ses = [], []
    for steps in DISCRETIZATION_STEPS:
        ensemble = simulate_ensemble(model, cfg.sim(cfg.qv_paths, steps), Direction.BACKWARD,
                                     record_every=steps // 2, threads=cfg.threads)
        z = ensemble.at(t)
        errors.append(abs(float(np.mean(z)) - exact))
        ses.append(float(np.std(z, ddof=1)) / math.sqrt(len(z)))
    worst = max(
        (errors[k + 1] - errors[k]) / math.hypot(ses[k], ses[k + 1])
        for k in range(len(errors) - 1)
    )
    detail = ", ".join(f"{n}: {e:.2e}" for n, e in zip(DISCRETIZATION_STEPS, errors))
    return CheckResult.judge("paths.discretization", CheckKind.STATISTICAL, worst, Z_THRESHOLD,
                             f"|mean error| by steps {detail}")


def _endpoint_checks(model: BernsteinModel, cfg: HarnessConfig) -> list[CheckResult]:
    z0, z_final = sample_endpoint_pairs(model, cfg.seed, cfg.qv_paths)
    rule = model.measure_rule()
    x, w = rule.nodes, rule.weights
    mean0 = float(w @ (x * model.marginal_initial(x)))
    joint = np.asarray(model.endpoint_density(x[:, None], x[None, :])) * np.outer(w, w)
    mean_final = float(np.sum(joint * x[None, :]))
    covariance = float(np.sum(joint * np.outer(x - mean0, x - mean_final)))

    n = len(z0)
    z_mean = (float(np.mean(z0)) - mean0) / (float(np.std(z0, ddof=1)) / math.sqrt(n))
    products = (z0 - z0.mean()) * (z_final - z_final.mean())
    z_cov = (float(np.mean(products)) - covariance) / (float(np.std(products, ddof=1)) / math.sqrt(n))
    s = CheckKind.STATISTICAL
    return [
        CheckResult.judge("paths.endpoints.mean", s, abs(z_mean), Z_THRESHOLD,
                          f"E[Z_0] exact {mean0:.6f}"),
        CheckResult.judge("paths.endpoints.covariance", s, abs(z_cov), Z_THRESHOLD,
                          f"Cov(Z_0, Z_T) exact {covariance:.6f}"),
    ]


def check_path_statistics(model: BernsteinModel, config: HarnessConfig) -> list[CheckResult]:
    """Statistical checks on simulated paths.

    Occupation chi-square (forward and backward, T/4 and T/2), invariance of
    the uniform law under driftless reflected motion, quadratic variation,
    martingale increments, fourth-moment scaling, the exact-kernel two-time
    law, step refinement and the endpoint law.
    """
    results = _occupation_checks(model, config)
    results += check_uniform_invariance(model, config)
    results.append(_quadratic_variation_check(model, config))
    results.append(_martingale_check(model, config))
    results.append(_moment_scaling_check(model, config))
    results.append(_exact_kernel_check(model, config))
    results.append(_discretization_check(model, config))
    results += _endpoint_checks(model, config)
    return results


def check_feynman_kac(model: BernsteinModel, config: HarnessConfig) -> list[CheckResult]:
    """Monte Carlo u, v and u v against the spectral values (and kernel quadrature if V0 = 0)."""
    T = model.horizon
    sim = config.sim(config.paths)
    s = CheckKind.STATISTICAL
    disk = model.geometry == Geometry.DISK_RADIAL
    t_u = min(0.1, 0.5 * T)
    t_v = T - min(0.2 if disk else 0.1, 0.5 * T)
    x_v = 0.0 if disk else 0.5
    checks = [
        ("feynman_kac.u", estimate_u(model, 0.0, t_u, sim, config.threads)),
        ("feynman_kac.v", estimate_v(model, x_v, t_v, sim, config.threads)),
        ("feynman_kac.product", estimate_occupation(model, 0.5, 0.5 * T, sim, config.threads)),
    ]
    if model.potential == 0.0:
        pair = kernel_consistency(model, 0.5, 0.5 * T, sim, config.threads)
        checks += [("feynman_kac.kernel_consistency.u", pair.u),
                   ("feynman_kac.kernel_consistency.v", pair.v)]
    else:
        logger.info("Skipping kernel consistency: model has a nonzero potential")
    return [
        CheckResult.judge(name, s, abs(report.z_score), Z_THRESHOLD,
                          f"estimate {report.estimate:.6f} +- {report.std_error:.2e}, "
                          f"{report.target_label} {report.target:.6f}{_power_note(config.paths)}")
        for name, report in checks
    ]


def check_girsanov(model: BernsteinModel, config: HarnessConfig) -> list[CheckResult]:
    """Unit mean weight and reweighted occupation against the driftless law."""
    T = model.horizon
    steps = 2 * max(1, config.steps // 2)
    ensemble = simulate_ensemble(model, config.sim(config.paths, steps), Direction.FORWARD,
                                 record_every=steps // 2, weights=True, threads=config.threads)
    weights = np.exp(ensemble.log_weights)
    n = len(weights)
    se = float(np.std(weights, ddof=1)) / math.sqrt(n)
    gap = float(np.mean(weights)) - 1.0
    z = abs(gap) / se if se > 0 else (0.0 if abs(gap) <= 1e-12 else math.inf)
    results = [CheckResult.judge("girsanov.mean_weight", CheckKind.STATISTICAL, z, Z_THRESHOLD,
                                 f"mean weight {1.0 + gap:.6f} +- {se:.2e}")]

    t = 0.5 * T
    rule = model.measure_rule()
    start_mass = rule.weights * np.asarray(model.marginal_initial(rule.nodes))
    unscale = math.exp(model.potential * t)

    def driftless_density(p: np.ndarray) -> np.ndarray:
        kernel = np.asarray(model.kernel(p[..., None], t, rule.nodes, 0.0))
        return unscale * (kernel @ start_mass)

    edges = _bin_edges(model.geometry, config.bins)
    masses = bin_masses(driftless_density, edges,
                        weight=lambda p: measure_weight(model.geometry, p))
    which = np.clip(np.digitize(ensemble.at(t), edges) - 1, 0, config.bins - 1)
    statistic = 0.0
    used = 0
    for b in range(config.bins):
        contribution = weights * (which == b)
        se_b = float(np.std(contribution, ddof=1)) / math.sqrt(n)
        if se_b == 0.0:
            continue
        used += 1
        statistic += ((float(np.mean(contribution)) - masses[b]) / se_b) ** 2
    critical = float(stats.chi2.ppf(1.0 - config.alpha, max(used, 1)))
    results.append(CheckResult.judge(
        "girsanov.reweighted_occupation", CheckKind.STATISTICAL, statistic, critical,
        f"weighted bin masses at t={t:g}, chi2 with {used} dof{_power_note(config.paths)}"))
    return results


# ---------------------------------------------------------------------- negative controls


@dataclass(frozen=True)
class SignFlippedModel(BernsteinModel):
    """Model whose backward drift has the wrong sign."""

    def backward_drift(self, x, t: float):
        return -super().backward_drift(x, t)


def sign_flipped(model: BernsteinModel) -> SignFlippedModel:
    return SignFlippedModel(**{f.name: getattr(model, f.name) for f in fields(model)})


def unnormalized_half_psi(model: BernsteinModel) -> BernsteinModel:
    """Copy of the model with psi halved and no renormalization."""
    return BernsteinModel(model.geometry, model.horizon, model.phi, model.psi.scaled(0.5),
                          model.potential, model.policy, model.normalization_scale * 0.5)


def _control(name: str, designated: CheckResult) -> CheckResult:
    # passes iff the designated check fails, i.e. its metric reaches its threshold
    metric = designated.threshold / designated.metric if designated.metric > 0 else math.inf
    return CheckResult.judge(name, designated.kind, metric, 1.0,
                             f"{designated.name} must fail: metric {designated.metric:.4g} "
                             f"vs threshold {designated.threshold:.4g}")


def check_negative_controls(model: BernsteinModel, config: HarnessConfig) -> list[CheckResult]:
    """Corrupted models must fail their designated checks."""
    results = []
    _, peak = model.drift_peak(0.5 * model.horizon)
    if peak < 1e-9:
        results.append(CheckResult.judge(
            "controls.sign_flip", CheckKind.STATISTICAL, 0.0, 1.0,
            "not applicable: backward drift vanishes"))
    else:
        flipped_cfg = config.model_copy(update={"paths": config.control_paths})
        occupation = _occupation_checks(sign_flipped(model), flipped_cfg,
                                        directions=(Direction.BACKWARD,),
                                        prefix="controls.sign_flip.occupation")
        half = next(r for r in occupation if r.name.endswith(".half"))
        results.append(_control("controls.sign_flip", half))
    results.append(_control("controls.half_psi", _normalization_check(unnormalized_half_psi(model))))
    return results


# ---------------------------------------------------------------------- suite


CheckGroup = Callable[[BernsteinModel, HarnessConfig], list[CheckResult]]

CHECK_GROUPS: dict[str, CheckGroup] = {
    "green": lambda model, cfg: check_green_identities(model),
    "kernels": lambda model, cfg: check_kernel_laws(model),
    "limits": lambda model, cfg: check_drift_limits(model),
    "lindeberg": lambda model, cfg: check_lindeberg(model),
    "drift_peak": lambda model, cfg: check_drift_peak(model),
    "paths": check_path_statistics,
    "feynman_kac": check_feynman_kac,
    "girsanov": check_girsanov,
    "controls": check_negative_controls,
}


def _selected(name: str, only: Sequence[str] | None) -> bool:
    return only is None or any(name == o or name.startswith(o + ".") for o in only)


def run_all(model: BernsteinModel, config: HarnessConfig,
            only: Sequence[str] | None = None) -> tuple[list[CheckResult], int]:
    """Run every check group (or those named in ``only``).

    ``only`` entries are group names ("paths") or dotted check names
    ("paths.martingale"); a group runs if any entry selects it or one of its
    checks.

    Returns:
        (results in group order, exit status 0 if all passed else 1)
    """
    if only is not None:
        unknown = [o for o in only if o.split(".")[0] not in CHECK_GROUPS]
        if unknown:
            raise DomainError(f"Unknown checks {unknown}; groups are {sorted(CHECK_GROUPS)}")
    results: list[CheckResult] = []
    for group, run in CHECK_GROUPS.items():
        if only is not None and not any(o.split(".")[0] == group for o in only):
            continue
        logger.info(f"Running check group '{group}'")
        group_results = [r for r in run(model, config) if _selected(r.name, only)]
        failed = [r.name for r in group_results
                  if not r.passed and r.kind == CheckKind.STATISTICAL]
        if config.strict and failed:
            logger.warning(f"Strict mode: rerunning {failed} with 4x paths")
            rerun = {r.name: r for r in run(model, config.scaled(4))}
            group_results = [rerun.get(r.name, r) if r.name in failed else r
                             for r in group_results]
        results.extend(group_results)

    failures = [r.name for r in results if not r.passed]
    if failures:
        logger.error(f"{len(failures)} of {len(results)} checks failed: {failures}")
    else:
        logger.success(f"All {len(results)} checks passed")
    return results, int(bool(failures))
