"""Sample paths of a Bernstein diffusion.

Three schemes generate paths of a :class:`BernsteinModel`:

    - forward Euler-Maruyama with drift b* and unit diffusion, stepping 0 -> T
    - backward Euler-Maruyama with drift b, stepping T -> 0 as
      Z_{t-dt} = Z_t - b(Z_t, t) dt - sqrt(dt) xi
    - exact kernel stepping, drawing each transition from m* (forward) or m
      (backward) by inverse-CDF sampling on a grid

Interval Euler states are folded back into [0, 1] after every step. Disk
paths are simulated in the plane (unit diffusion, radial drift field) and the
radius is recorded. Within a few step deviations of the rim a disk step is
taken in polar coordinates instead: the radius makes a free Euler step with
the Ito drift 1/(2r) and is reflected at 1 through the maximum of the
Brownian bridge joining the two radii. Planar overshoots elsewhere fall back
to the area-preserving fold r -> sqrt(2 - r^2).

Every path owns independent random streams keyed by (seed, path_id, purpose),
and paths are processed in fixed-size batches, so results do not depend on
the number of worker processes.
"""

from dataclasses import dataclass
from enum import Enum
from functools import partial
import math
import multiprocessing as mp
import sys

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from ..config import default_threads, logger
from ..errors import (
    DomainError,
    InsufficientPathDataError,
    KernelIntegrationError,
    NumericalBlowupError,
)
from ..utils.rng import StreamPurpose, stacked_normals, stacked_uniforms
from .bernstein_model import BernsteinModel, measure_weight
from .spectral_core import Direction, Geometry

MIN_KERNEL_MASS = 0.999
# disk steps starting within this many sqrt(dt) of the rim are taken in polar form
BOUNDARY_LAYER = 6.0
MIN_POLAR_RADIUS = 0.5


class Scheme(str, Enum):
    """Path generation scheme."""
    EULER = "euler_reflected"
    EXACT = "exact_kernel"


class SimConfig(BaseModel):
    """Simulation settings.

    Attributes:
        steps: Uniform time steps over the simulated window
        paths: Number of paths
        seed: Root seed of all random streams
        scheme: Euler with reflection or exact kernel stepping
        kernel_grid: Grid points for inverse-CDF sampling
        batch_size: Paths per work unit (fixed so results do not depend on threads)
        threads: Worker processes (None: BERNSTEIN_LAB_THREADS or core count)
    """
    model_config = ConfigDict(frozen=True)

    steps: int = Field(400, ge=2, description="Time steps over the window")
    paths: int = Field(10_000, ge=1, description="Number of sample paths")
    seed: int = Field(0, ge=0, lt=2**64, description="Root seed")
    scheme: Scheme = Field(Scheme.EULER, description="Path generation scheme")
    kernel_grid: int = Field(401, ge=64, description="Inverse-CDF grid size")
    batch_size: int = Field(256, ge=1, description="Paths per work unit")
    threads: int | None = Field(None, ge=1, description="Worker processes")


@dataclass(frozen=True)
class Path:
    """One sample path on an increasing time grid.

    Attributes:
        times: Increasing times in [0, T]
        states: States in [0, 1] (the radius for disk paths)
        direction: Direction in which the path was generated
        noise: Gaussian increments sqrt(dt) xi used per step, in generation
            order; shape (len(times) - 1,) or (len(times) - 1, 2) for the disk;
            None for exact-kernel paths
        positions: Planar positions for disk Euler paths, shape (len(times), 2)
        reflections: Number of folding reflections applied
    """
    times: np.ndarray
    states: np.ndarray
    direction: Direction
    noise: np.ndarray | None = None
    positions: np.ndarray | None = None
    reflections: int = 0

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("Path times must be strictly increasing")
        if np.any((self.states < 0.0) | (self.states > 1.0)):
            raise ValueError("Path states must lie in [0, 1]")
        if self.noise is not None and len(self.noise) != len(self.times) - 1:
            raise ValueError(
                f"Noise record has {len(self.noise)} increments for {len(self.times)} times"
            )


@dataclass(frozen=True)
class WeightedPath:
    """Forward path with its Girsanov log-weight."""
    path: Path
    log_weight: float

    def __post_init__(self):
        if not math.isfinite(self.log_weight):
            raise ValueError(f"log_weight must be finite, got {self.log_weight}")

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)


@dataclass
class PathEnsemble:
    """Recorded states of many paths.

    Attributes:
        times: Increasing recorded times
        states: Array (paths, len(times)); radii for the disk
        direction: Generation direction
        path_ids: Stream index of each row
        reflections: Folding reflections per path
        quadratic_variation: Sum of squared (increment - drift dt) per path
        log_weights: Girsanov log-weights (forward Euler with weights requested)
    """
    times: np.ndarray
    states: np.ndarray
    direction: Direction
    path_ids: np.ndarray
    reflections: np.ndarray
    quadratic_variation: np.ndarray
    log_weights: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.path_ids)

    def at(self, t: float) -> np.ndarray:
        """States at the recorded time closest to ``t``."""
        column = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[column], t, rel_tol=0, abs_tol=1e-9):
            logger.debug(f"Requested t={t}, using recorded t={self.times[column]}")
        return self.states[:, column]

    def to_frame(self) -> pd.DataFrame:
        """Long table with columns path_id, t, z ordered by path then time."""
        n_paths, n_times = self.states.shape
        return pd.DataFrame({
            "path_id": np.repeat(self.path_ids, n_times),
            "t": np.tile(self.times, n_paths),
            "z": self.states.ravel(),
        })


# ---------------------------------------------------------------------- sampling


def fold(x: np.ndarray) -> np.ndarray:
    """Reflect values into [0, 1] about 0 and 1 (as many times as needed)."""
    y = np.mod(x, 2.0)
    return np.where(y > 1.0, 2.0 - y, y)


def fold_radius(r: np.ndarray) -> np.ndarray:
    """Reflect radii above 1 back into the disk, preserving area.

    r > 1 maps to sqrt(2 - r^2), so 1 - r'^2 = r^2 - 1: the overshoot annulus
    lands on an inner annulus of equal area.
    """
    return np.where(r > 1.0, np.sqrt(np.clip(2.0 - r * r, 0.0, 1.0)), r)


def reflect_at_rim(r: np.ndarray, free: np.ndarray, dt: float,
                   uniforms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reflect a free radial step from ``r`` to ``free`` at the rim r = 1.

    The maximum of the Brownian bridge from r to ``free`` over a step of
    length ``dt`` is drawn by inverting P(M > m) = exp(-2 (m - r)(m - free) / dt);
    the reflected radius is ``free - max(M - 1, 0)``, the Skorokhod map of a
    motion with drift frozen over the step.

    Returns:
        (reflected radii, whether the bridge reached the rim)
    """
    peak = 0.5 * (r + free + np.sqrt((free - r) ** 2 - 2.0 * dt * np.log1p(-uniforms)))
    overshoot = np.maximum(peak - 1.0, 0.0)
    return free - overshoot, overshoot > 0.0


def _disk_step(state: np.ndarray, drift: np.ndarray, dw: np.ndarray, dt: float,
               sign: float, uniforms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    step_drift, noise = sign * drift, sign * dw
    moved = state + step_drift * dt + noise
    r = np.linalg.norm(state, axis=1)
    polar = r > max(MIN_POLAR_RADIUS, 1.0 - BOUNDARY_LAYER * math.sqrt(dt))
    hits = np.zeros(len(state), dtype=bool)
    if np.any(polar):
        rp = r[polar]
        e_r = state[polar] / rp[:, None]
        e_t = np.stack([-e_r[:, 1], e_r[:, 0]], axis=1)
        a, n = step_drift[polar], noise[polar]
        free = rp + (np.einsum("ij,ij->i", a, e_r) + 0.5 / rp) * dt + np.einsum("ij,ij->i", n, e_r)
        new_r, hits[polar] = reflect_at_rim(rp, free, dt, uniforms[polar])
        angle = (np.einsum("ij,ij->i", a, e_t) * dt + np.einsum("ij,ij->i", n, e_t)) / rp
        moved[polar] = new_r[:, None] * (np.cos(angle)[:, None] * e_r + np.sin(angle)[:, None] * e_t)
    radius = np.linalg.norm(moved, axis=1)
    outside = radius > 1.0
    moved[outside] *= (fold_radius(radius[outside]) / radius[outside])[:, None]
    return moved, hits | outside


def _log_weight_increment(grad: np.ndarray, dw: np.ndarray, dt, disk: bool) -> np.ndarray:
    """-X.dW - |X|^2 dt / 2 per step; X and dW carry a trailing axis of 2 on the disk."""
    if disk:
        return -np.sum(grad * dw, axis=-1) - 0.5 * np.sum(grad ** 2, axis=-1) * dt
    return -grad * dw - 0.5 * grad ** 2 * dt


def inverse_cdf(grid: np.ndarray, density: np.ndarray, uniforms: np.ndarray,
                check_mass: bool = True) -> np.ndarray:
    """Sample ``density`` on ``grid`` at the given uniforms.

    ``density`` holds one row per uniform, or a single row shared by all of
    them. The CDF is the cumulative trapezoid rule, normalized per row, and is
    inverted by linear interpolation inside cells.

    Args:
        grid: Increasing grid on [0, 1]
        density: Shape (len(uniforms), len(grid)) or (len(grid),)
        uniforms: Uniforms on [0, 1)
        check_mass: Require each row to integrate to at least 0.999 (transition
            kernels); off for densities known only up to a constant

    Raises:
        KernelIntegrationError: If ``check_mass`` and a row integrates to less than 0.999
    """
    density = np.atleast_2d(density)
    uniforms = np.atleast_1d(np.asarray(uniforms, dtype=np.float64))
    if density.shape[0] not in (1, len(uniforms)):
        raise ValueError(f"{density.shape[0]} density rows for {len(uniforms)} uniforms")
    dy = np.diff(grid)
    cells = 0.5 * (density[:, 1:] + density[:, :-1]) * dy
    cdf = np.concatenate([np.zeros((density.shape[0], 1)), np.cumsum(cells, axis=1)], axis=1)
    mass = cdf[:, -1]
    if check_mass and np.any(mass < MIN_KERNEL_MASS):
        raise KernelIntegrationError(
            f"Discretized kernel mass {mass.min():.6f} below {MIN_KERNEL_MASS}; increase kernel_grid"
        )
    if np.any(mass <= 0.0):
        raise KernelIntegrationError("Density has no mass on the grid")
    cdf = np.broadcast_to(cdf / mass[:, None], (len(uniforms), len(grid)))
    upper = np.clip(np.argmax(cdf >= uniforms[:, None], axis=1), 1, len(grid) - 1)
    rows = np.arange(len(uniforms))
    lo, hi = cdf[rows, upper - 1], cdf[rows, upper]
    frac = np.where(hi > lo, (uniforms - lo) / np.where(hi > lo, hi - lo, 1.0), 0.5)
    return grid[upper - 1] + np.clip(frac, 0.0, 1.0) * dy[upper - 1]


def _grid(model: BernsteinModel, n: int) -> tuple[np.ndarray, np.ndarray]:
    grid = np.linspace(0.0, 1.0, n)
    return grid, measure_weight(model.geometry, grid)


def _endpoint_batch(model: BernsteinModel, uniforms: np.ndarray,
                    kernel_grid: int) -> tuple[np.ndarray, np.ndarray]:
    grid, weight = _grid(model, kernel_grid)
    z0 = inverse_cdf(grid, model.marginal_initial(grid) * weight, uniforms[:, 0])
    # each slice y -> mu(z0, y) has mass phi(z0) v(z0, 0), not 1
    conditional = model.endpoint_density(z0[:, None], grid[None, :]) * weight
    z_final = inverse_cdf(grid, conditional, uniforms[:, 1], check_mass=False)
    return z0, z_final


def sample_endpoints(model: BernsteinModel, rng: np.random.Generator,
                     kernel_grid: int = 401) -> tuple[float, float]:
    """Draw (Z_0, Z_T) from the endpoint density.

    Z_0 comes from the initial marginal phi v(., 0), then Z_T from the
    normalized slice y -> mu(Z_0, y).
    """
    z0, z_final = _endpoint_batch(model, rng.random((1, 2)), kernel_grid)
    return float(z0[0]), float(z_final[0])


def sample_endpoint_pairs(model: BernsteinModel, seed: int, count: int,
                          kernel_grid: int = 401,
                          batch_size: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` endpoint pairs, pair i from the ENDPOINTS stream of path i."""
    ids = np.arange(count, dtype=np.int64)
    uniforms = stacked_uniforms(seed, ids, (2,), StreamPurpose.ENDPOINTS)
    pairs = [_endpoint_batch(model, uniforms[i:i + batch_size], kernel_grid)
             for i in range(0, count, batch_size)]
    return np.concatenate([p[0] for p in pairs]), np.concatenate([p[1] for p in pairs])


def _kernel_density(model: BernsteinModel, x: np.ndarray, s: float, t: float,
                    grid: np.ndarray, weight: np.ndarray, direction: Direction) -> np.ndarray:
    if direction == Direction.FORWARD:
        dens = model.forward_kernel(x[:, None], s, grid[None, :], t)
    else:
        dens = model.backward_kernel(x[:, None], s, grid[None, :], t)
    return dens * weight


def exact_kernel_step(model: BernsteinModel, x: float, s: float, t: float,
                      rng: np.random.Generator, kernel_grid: int = 401,
                      direction: Direction = Direction.FORWARD) -> float:
    """Draw one exact transition.

    Forward: y ~ m*(x, s; ., t) with s < t. Backward: y ~ m(x, s; ., t) with
    t < s (the kernel is evaluated from the later time s back to t).

    Raises:
        KernelIntegrationError: If the discretized kernel loses more than 0.1% mass
    """
    grid, weight = _grid(model, kernel_grid)
    dens = _kernel_density(model, np.array([float(x)]), s, t, grid, weight, direction)
    return float(inverse_cdf(grid, dens, np.array([rng.random()]))[0])


def uniform_starts(geometry: Geometry, seed: int, path_ids: np.ndarray) -> np.ndarray:
    """Starting states uniform for the geometry's measure (r = sqrt(U) on the disk)."""
    u = stacked_uniforms(seed, path_ids, (), StreamPurpose.START)
    return u if geometry == Geometry.INTERVAL else np.sqrt(u)


# ---------------------------------------------------------------------- batches


@dataclass(frozen=True)
class _BatchPlan:
    """Everything a worker needs besides the path ids."""
    model: BernsteinModel
    config: SimConfig
    direction: Direction
    t_start: float
    t_end: float
    record_steps: np.ndarray
    driftless: bool
    weights: bool
    keep_noise: bool


@dataclass
class _BatchResult:
    states: np.ndarray
    reflections: np.ndarray
    quadratic_variation: np.ndarray
    log_weights: np.ndarray | None
    noise: np.ndarray | None
    positions: np.ndarray | None


def _default_starts(plan: _BatchPlan, path_ids: np.ndarray) -> np.ndarray:
    model, cfg = plan.model, plan.config
    grid, weight = _grid(model, cfg.kernel_grid)
    t0 = plan.t_start if plan.direction == Direction.FORWARD else plan.t_end
    u = stacked_uniforms(cfg.seed, path_ids, (), StreamPurpose.START)
    return inverse_cdf(grid, model.occupation(grid, t0) * weight, u)


def _run_batch(batch: tuple[np.ndarray, np.ndarray | None], plan: _BatchPlan) -> _BatchResult:
    path_ids, starts = batch
    if starts is None:
        starts = _default_starts(plan, path_ids)
    if plan.config.scheme == Scheme.EXACT:
        return _exact_batch(plan, path_ids, starts)
    return _euler_batch(plan, path_ids, starts)


def _step_times(plan: _BatchPlan) -> np.ndarray:
    """Times in generation order (ascending forward, descending backward)."""
    times = np.linspace(plan.t_start, plan.t_end, plan.config.steps + 1)
    return times if plan.direction == Direction.FORWARD else times[::-1]


def _euler_batch(plan: _BatchPlan, path_ids: np.ndarray, starts: np.ndarray,
                 xi: np.ndarray | None = None) -> _BatchResult:
    model, cfg = plan.model, plan.config
    disk = model.geometry == Geometry.DISK_RADIAL
    times = _step_times(plan)
    dt = (plan.t_end - plan.t_start) / cfg.steps
    sqrt_dt = math.sqrt(dt)
    forward = plan.direction == Direction.FORWARD
    n = len(path_ids)

    if xi is None:
        xi = stacked_normals(cfg.seed, path_ids, (cfg.steps, 2) if disk else (cfg.steps,))
    increments = sqrt_dt * xi
    bridge = stacked_uniforms(cfg.seed, path_ids, (cfg.steps,), StreamPurpose.BRIDGE) if disk else None
    if disk:
        state = np.zeros((n, 2))
        state[:, 0] = starts
        drift_fn = model.forward_drift_vector if forward else model.backward_drift_vector
    else:
        state = np.asarray(starts, dtype=np.float64).copy()
        drift_fn = model.forward_drift if forward else model.backward_drift
    sign = 1.0 if forward else -1.0

    radius = (lambda p: np.minimum(np.linalg.norm(p, axis=1), 1.0)) if disk else (lambda p: p)
    records = np.empty((n, len(plan.record_steps)))
    record_slot = {int(k): j for j, k in enumerate(plan.record_steps)}
    reflections = np.zeros(n, dtype=np.int64)
    qv = np.zeros(n)
    log_w = np.zeros(n) if plan.weights else None
    positions = np.empty((n, cfg.steps + 1, 2)) if (disk and plan.keep_noise) else None

    if 0 in record_slot:
        records[:, record_slot[0]] = radius(state)
    if positions is not None:
        positions[:, 0] = state
    for k in range(cfg.steps):
        t = times[k]
        drift = np.zeros_like(state) if plan.driftless else np.asarray(drift_fn(state, t))
        dw = increments[:, k]
        if disk:
            moved, outside = _disk_step(state, drift, dw, dt, sign, bridge[:, k])
            new_r, old_r = radius(moved), radius(state)
            # radial drift is the component of the planar drift along the position
            radial_drift = np.einsum("ij,ij->i", drift, state) / np.where(old_r > 0, old_r, 1.0)
            qv += (new_r - old_r - sign * radial_drift * dt) ** 2
        else:
            moved = state + sign * (drift * dt + dw)
            outside = (moved < 0.0) | (moved > 1.0)
            moved = fold(moved)
            qv += (moved - state - sign * drift * dt) ** 2
        if not np.all(np.isfinite(moved)):
            raise NumericalBlowupError(k + 1)
        if log_w is not None:
            grad = drift if not plan.driftless else np.asarray(drift_fn(state, t))
            log_w += _log_weight_increment(grad, dw, dt, disk)
        reflections += outside
        state = moved
        if positions is not None:
            positions[:, k + 1] = state
        if k + 1 in record_slot:
            records[:, record_slot[k + 1]] = radius(state)

    return _BatchResult(records, reflections, qv, log_w,
                        increments if plan.keep_noise else None, positions)


def _exact_batch(plan: _BatchPlan, path_ids: np.ndarray, starts: np.ndarray) -> _BatchResult:
    model, cfg = plan.model, plan.config
    times = _step_times(plan)
    grid, weight = _grid(model, cfg.kernel_grid)
    u = stacked_uniforms(cfg.seed, path_ids, (cfg.steps,), StreamPurpose.KERNEL)
    n = len(path_ids)

    state = np.asarray(starts, dtype=np.float64).copy()
    records = np.empty((n, len(plan.record_steps)))
    record_slot = {int(k): j for j, k in enumerate(plan.record_steps)}
    qv = np.zeros(n)
    if 0 in record_slot:
        records[:, record_slot[0]] = state
    for k in range(cfg.steps):
        dens = _kernel_density(model, state, times[k], times[k + 1], grid, weight, plan.direction)
        moved = inverse_cdf(grid, dens, u[:, k])
        qv += (moved - state) ** 2
        state = moved
        if k + 1 in record_slot:
            records[:, record_slot[k + 1]] = state
    return _BatchResult(records, np.zeros(n, dtype=np.int64), qv, None, None, None)


def _record_steps(steps: int, record_every: int) -> np.ndarray:
    if record_every < 1:
        raise DomainError(f"record_every must be >= 1, got {record_every}")
    recorded = np.arange(0, steps + 1, record_every)
    if recorded[-1] != steps:
        recorded = np.append(recorded, steps)
    return recorded


def _map_batches(plan: _BatchPlan, batches: list, threads: int, desc: str) -> list[_BatchResult]:
    worker = partial(_run_batch, plan=plan)
    show = sys.stderr.isatty() and len(batches) > 1
    if threads <= 1 or len(batches) == 1:
        return [worker(b) for b in tqdm(batches, desc=desc, disable=not show, file=sys.stderr)]
    with mp.Pool(processes=min(threads, len(batches))) as pool:
        # imap keeps batch order, so output is canonical for any worker count
        return list(tqdm(pool.imap(worker, batches), total=len(batches), desc=desc,
                         disable=not show, file=sys.stderr))


def _validate_window(model: BernsteinModel, window: tuple[float, float] | None) -> tuple[float, float]:
    t_start, t_end = window if window is not None else (0.0, model.horizon)
    if not 0.0 <= t_start < t_end <= model.horizon:
        raise DomainError(f"Window ({t_start}, {t_end}) must satisfy 0 <= start < end <= T")
    return float(t_start), float(t_end)


def simulate_ensemble(model: BernsteinModel, config: SimConfig,
                      direction: Direction = Direction.FORWARD, starts=None,
                      window: tuple[float, float] | None = None, driftless: bool = False,
                      record_every: int = 1, threads: int | None = None,
                      weights: bool = False) -> PathEnsemble:
    """Simulate ``config.paths`` paths and keep every ``record_every``-th step.

    Args:
        model: Bernstein model
        config: Simulation settings
        direction: FORWARD steps from the window start, BACKWARD from its end
        starts: Scalar or per-path starting states; None draws them from the
            occupation density at the starting time (mu_0 or mu_T on the full window)
        window: Time window (default [0, T])
        driftless: Simulate reflected Brownian motion (zero drift)
        record_every: Thinning of the recorded grid (the last step is always kept)
        threads: Worker processes (default: config.threads, then BERNSTEIN_LAB_THREADS)
        weights: Accumulate Girsanov log-weights of the forward drift

    Returns:
        PathEnsemble with times in increasing order

    Raises:
        DomainError: On invalid starts or window
        NumericalBlowupError: If a state becomes non-finite
        KernelIntegrationError: If exact stepping meets a degenerate kernel
    """
    t_start, t_end = _validate_window(model, window)
    if weights and (direction != Direction.FORWARD or config.scheme != Scheme.EULER):
        raise InsufficientPathDataError("Girsanov weights need forward Euler paths")
    path_ids = np.arange(config.paths, dtype=np.int64)
    if starts is not None:
        starts = np.broadcast_to(np.asarray(starts, dtype=np.float64), (config.paths,))
        if np.any((starts < 0.0) | (starts > 1.0)):
            raise DomainError("Starting states must lie in [0, 1]")

    record = _record_steps(config.steps, record_every)
    plan = _BatchPlan(model, config, direction, t_start, t_end, record, driftless, weights, False)
    batches = [
        (path_ids[i:i + config.batch_size],
         None if starts is None else np.array(starts[i:i + config.batch_size]))
        for i in range(0, config.paths, config.batch_size)
    ]
    threads = threads or config.threads or default_threads()
    logger.info(
        f"Simulating {config.paths} {direction.value} paths ({config.scheme.value}, "
        f"{config.steps} steps, {len(batches)} batches, {threads} workers)"
    )
    results = _map_batches(plan, batches, threads, f"{direction.value} paths")

    grid_times = np.linspace(t_start, t_end, config.steps + 1)
    recorded_times = grid_times[record] if direction == Direction.FORWARD else grid_times[::-1][record]
    states = np.concatenate([r.states for r in results])
    order = np.argsort(recorded_times)
    reflections = np.concatenate([r.reflections for r in results])
    logger.debug(f"Reflections per path: mean {reflections.mean():.3f}, max {reflections.max()}")
    return PathEnsemble(
        times=recorded_times[order],
        states=states[:, order],
        direction=direction,
        path_ids=path_ids,
        reflections=reflections,
        quadratic_variation=np.concatenate([r.quadratic_variation for r in results]),
        log_weights=np.concatenate([r.log_weights for r in results]) if weights else None,
    )


def _single_path(model: BernsteinModel, config: SimConfig, start: float,
                 direction: Direction, noise: np.ndarray | None) -> Path:
    if not 0.0 <= start <= 1.0:
        raise DomainError(f"Starting state must lie in [0, 1], got {start}")
    single = config.model_copy(update={"paths": 1})
    plan = _BatchPlan(model, single, direction, 0.0, model.horizon,
                      np.arange(single.steps + 1), False, False, True)
    ids, starts = np.zeros(1, dtype=np.int64), np.array([float(start)])
    if noise is not None and single.scheme == Scheme.EULER:
        result = _euler_with_noise(plan, starts, np.asarray(noise, dtype=np.float64))
    else:
        result = _run_batch((ids, starts), plan)

    states = result.states[0]
    step_noise = None if result.noise is None else result.noise[0]
    positions = None if result.positions is None else result.positions[0]
    times = _step_times(plan)
    if direction == Direction.BACKWARD:
        times, states = times[::-1], states[::-1]
        positions = None if positions is None else positions[::-1]
    return Path(times, states, direction, step_noise, positions, int(result.reflections[0]))


def _euler_with_noise(plan: _BatchPlan, starts: np.ndarray, xi: np.ndarray) -> _BatchResult:
    disk = plan.model.geometry == Geometry.DISK_RADIAL
    expected = (plan.config.steps, 2) if disk else (plan.config.steps,)
    if xi.shape != expected:
        raise DomainError(f"Injected noise must have shape {expected}, got {xi.shape}")
    return _euler_batch(plan, np.zeros(1, dtype=np.int64), starts, xi[None, ...])


def simulate_forward(model: BernsteinModel, config: SimConfig, z0: float,
                     noise: np.ndarray | None = None) -> Path:
    """One forward path from Z_0 = z0 with its noise record.

    ``noise`` optionally injects the standard normal draws (one per step).
    """
    return _single_path(model, config, z0, Direction.FORWARD, noise)


def simulate_backward(model: BernsteinModel, config: SimConfig, z_final: float,
                      noise: np.ndarray | None = None) -> Path:
    """One backward path from Z_T = z_final, stepping toward t = 0."""
    return _single_path(model, config, z_final, Direction.BACKWARD, noise)


def girsanov_weight(model: BernsteinModel, path: Path) -> WeightedPath:
    """Attach the log-weight removing the forward drift from a forward path.

    log_weight = -sum X(Z_i, t_i) dW_i - 1/2 sum |X(Z_i, t_i)|^2 dt with
    X = grad ln v, evaluated at left endpoints.

    Raises:
        InsufficientPathDataError: If the path is not forward or has no noise
            record (or no planar positions on the disk)
    """
    if path.direction != Direction.FORWARD:
        raise InsufficientPathDataError("Girsanov weights are defined for forward paths")
    if path.noise is None:
        raise InsufficientPathDataError("Path carries no noise record")
    dt = np.diff(path.times)
    disk = model.geometry == Geometry.DISK_RADIAL
    if disk:
        if path.positions is None:
            raise InsufficientPathDataError("Disk path carries no planar positions")
        grad = np.stack([model.forward_drift_vector(path.positions[i], path.times[i])
                         for i in range(len(dt))])
    else:
        grad = np.array([model.forward_drift(path.states[i], path.times[i])
                         for i in range(len(dt))])
    return WeightedPath(path, float(np.sum(_log_weight_increment(grad, path.noise, dt, disk))))
