"""Monte Carlo estimates of u and v through their Feynman-Kac representations.

With a constant potential V0 and the plain reflected Wiener process W,

    u(x, t) = E[exp(-V0 t) phi(W_0) | W_t = x]          (backward paths)
    v(x, t) = E[exp(-V0 (T - t)) psi(W_T) | W_t = x]    (forward paths)

Every estimate comes with its standard error and, where available, the
spectral value it should reproduce.
"""

from dataclasses import dataclass
import math

import numpy as np

from ..config import logger
from ..errors import DomainError, PreconditionError
from .bernstein_model import BernsteinModel
from .sde_engine import SimConfig, simulate_ensemble
from .spectral_core import Direction


@dataclass(frozen=True)
class EstimatorReport:
    """Monte Carlo estimate with its standard error.

    Attributes:
        estimate: Sample mean
        std_error: Sample standard deviation / sqrt(samples)
        samples: Number of Monte Carlo samples (0 for exact shortcuts)
        target: Reference value, if any
        target_label: Provenance of the reference ("spectral", "quadrature", ...)
    """
    estimate: float
    std_error: float
    samples: int
    target: float | None = None
    target_label: str = ""

    @property
    def z_score(self) -> float | None:
        """(estimate - target) / std_error; 0 when both the error and the gap vanish."""
        if self.target is None:
            return None
        gap = self.estimate - self.target
        if self.std_error == 0.0:
            return 0.0 if abs(gap) <= 1e-12 * max(1.0, abs(self.target)) else math.inf
        return gap / self.std_error

    def within(self, sigmas: float = 3.0) -> bool:
        z = self.z_score
        return z is not None and abs(z) <= sigmas


def summarize(samples: np.ndarray, target: float | None = None,
              target_label: str = "") -> EstimatorReport:
    """EstimatorReport of a sample vector."""
    samples = np.asarray(samples, dtype=np.float64)
    n = len(samples)
    std = float(np.std(samples, ddof=1)) if n > 1 else 0.0
    return EstimatorReport(float(np.mean(samples)), std / math.sqrt(n), n, target, target_label)


def _check_state(x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")


def _window_steps(config: SimConfig, length: float, horizon: float) -> SimConfig:
    """Scale the step count to the window so dt matches the full-horizon grid."""
    steps = max(2, int(round(config.steps * length / horizon)))
    return config.model_copy(update={"steps": steps})


def estimate_u(model: BernsteinModel, x: float, t: float, config: SimConfig,
               threads: int | None = None) -> EstimatorReport:
    """Estimate u(x, t) from driftless backward paths started at (x, t).

    At t = 0 the value phi(x) is returned exactly with zero error.
    """
    _check_state(x)
    if not 0.0 <= t <= model.horizon:
        raise DomainError(f"t must lie in [0, T={model.horizon}], got {t}")
    target = float(model.u(x, t))
    if t == 0.0:
        logger.warning("estimate_u at t = 0 has a degenerate horizon; returning phi(x)")
        return EstimatorReport(float(model.phi.datum(x)), 0.0, 0, target, "spectral")

    cfg = _window_steps(config, t, model.horizon)
    paths = simulate_ensemble(model, cfg, Direction.BACKWARD, starts=x, window=(0.0, t),
                              driftless=True, record_every=cfg.steps, threads=threads)
    values = math.exp(-model.potential * t) * model.phi.datum(paths.at(0.0))
    report = summarize(values, target, "spectral")
    logger.info(f"u({x}, {t}) ~ {report.estimate:.6f} +- {report.std_error:.2e} "
                f"(spectral {target:.6f})")
    return report


def estimate_v(model: BernsteinModel, x: float, t: float, config: SimConfig,
               threads: int | None = None) -> EstimatorReport:
    """Estimate v(x, t) from driftless forward paths started at (x, t).

    At t = T the value psi(x) is returned exactly with zero error.
    """
    _check_state(x)
    if not 0.0 <= t <= model.horizon:
        raise DomainError(f"t must lie in [0, T={model.horizon}], got {t}")
    target = float(model.v(x, t))
    if t == model.horizon:
        logger.warning("estimate_v at t = T has a degenerate horizon; returning psi(x)")
        return EstimatorReport(float(model.psi.datum(x)), 0.0, 0, target, "spectral")

    remaining = model.horizon - t
    cfg = _window_steps(config, remaining, model.horizon)
    paths = simulate_ensemble(model, cfg, Direction.FORWARD, starts=x,
                              window=(t, model.horizon), driftless=True,
                              record_every=cfg.steps, threads=threads)
    values = math.exp(-model.potential * remaining) * model.psi.datum(paths.at(model.horizon))
    report = summarize(values, target, "spectral")
    logger.info(f"v({x}, {t}) ~ {report.estimate:.6f} +- {report.std_error:.2e} "
                f"(spectral {target:.6f})")
    return report


def estimate_occupation(model: BernsteinModel, x: float, t: float, config: SimConfig,
                        threads: int | None = None) -> EstimatorReport:
    """Estimate rho(x, t) = u v as the product of two independent estimates.

    The v estimate runs on the seed after ``config.seed``; the standard error
    follows the delta method, sqrt(v^2 se_u^2 + u^2 se_v^2).
    """
    u = estimate_u(model, x, t, config, threads)
    v = estimate_v(model, x, t, config.model_copy(update={"seed": config.seed + 1}), threads)
    std_error = math.hypot(v.estimate * u.std_error, u.estimate * v.std_error)
    return EstimatorReport(u.estimate * v.estimate, std_error, max(u.samples, v.samples),
                           float(model.occupation(x, t)), "spectral")


@dataclass(frozen=True)
class ConsistencyReport:
    """Monte Carlo estimates of u and v, each targeted at its quadrature value."""
    u: EstimatorReport
    v: EstimatorReport


def kernel_consistency(model: BernsteinModel, x: float, t: float, config: SimConfig,
                       threads: int | None = None) -> ConsistencyReport:
    """Compare E[phi(W_0) | W_t = x] and E[psi(W_T) | W_t = x] with kernel quadrature.

    The quadrature sides are int k(x, t; y, 0) phi(y) dmu(y) and
    int k(y, T; x, t) psi(y) dmu(y).

    Raises:
        PreconditionError: If the model has a nonzero potential
        DomainError: Unless 0 < t < T
    """
    if model.potential != 0.0:
        raise PreconditionError(
            f"Kernel consistency needs V0 = 0, model has V0 = {model.potential}"
        )
    if not 0.0 < t < model.horizon:
        raise DomainError(f"t must lie in (0, T={model.horizon}), got {t}")
    rule = model.measure_rule()
    y = rule.nodes
    u_quad = float(rule.integrate(model.kernel(x, t, y, 0.0) * model.phi.datum(y)))
    v_quad = float(rule.integrate(model.kernel(y, model.horizon, x, t) * model.psi.datum(y)))

    u = estimate_u(model, x, t, config, threads)
    v = estimate_v(model, x, t, config, threads)
    return ConsistencyReport(
        u=EstimatorReport(u.estimate, u.std_error, u.samples, u_quad, "quadrature"),
        v=EstimatorReport(v.estimate, v.std_error, v.samples, v_quad, "quadrature"),
    )
