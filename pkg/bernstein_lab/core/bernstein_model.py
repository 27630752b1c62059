"""Bernstein diffusion built from an initial datum phi and a final datum psi.

Given the Neumann Green function g of the geometry, data phi, psi > 0, a
horizon T and a constant potential V0, the model assembles

    - the endpoint density  mu(x, y) = phi(x) k(y, T; x, 0) psi(y)
    - u(x, t) = int k(x, t; y, 0) phi(y) dmu(y)        (forward solution)
    - v(x, t) = int k(y, T; x, t) psi(y) dmu(y)        (final-value solution)
    - the forward kernel   m*(x, s; y, t) = k(y, t; x, s) v(y, t) / v(x, s)
    - the backward kernel  m(x, t; y, s)  = k(x, t; y, s) u(y, s) / u(x, t)
    - the bridge density   p(x, t; z, r; y, s)
    - the occupation density rho = u v and the drifts b* = d ln v, b = -d ln u

where k = exp(-V0 (t - s)) g / A and dmu is the geometry's measure (dx on the
interval, the area element 2 pi r dr on the disk, A = 1 or 2 pi).

Example:
    >>> import numpy as np
    >>> from bernstein_lab.core.bernstein_model import BernsteinModel
    >>> from bernstein_lab.core.spectral_core import Geometry
    >>> model = BernsteinModel.from_data(
    ...     Geometry.INTERVAL, 1.0, lambda x: 1 + 0.5 * np.cos(np.pi * x), lambda x: np.ones_like(x)
    ... )
    >>> model.backward_drift(0.5, 0.0)  # pi / 2
    1.5707963267948966
"""

from dataclasses import dataclass, field
import math
from typing import Callable, Sequence, Union

import numpy as np

from ..config import logger
from ..errors import DomainError, InvalidDatumError, OrderingError, UnderflowError
from ..utils.quadrature import DEFAULT_NODES, QuadratureRule, RuleName, rule_for
from .spectral_core import (
    DEFAULT_POLICY,
    Direction,
    Geometry,
    SpectralExpansion,
    TruncationPolicy,
    green,
    neumann_basis,
    project_datum,
)

POSITIVITY_FLOOR = 1e-9
POSITIVITY_GRID = 201
POSITIVITY_TIMES = 11
UNDERFLOW_FLOOR = 1e-300

Datum = Union[SpectralExpansion, Callable[[np.ndarray], np.ndarray], Sequence[float]]


def area_factor(geometry: Geometry) -> float:
    """Total measure of the unit domain divided by its radial measure (1 or 2 pi)."""
    return 1.0 if geometry == Geometry.INTERVAL else 2.0 * math.pi


def measure_weight(geometry: Geometry, x) -> np.ndarray:
    """Density of dmu_geom against dx (1 on the interval, 2 pi r on the disk)."""
    x = np.asarray(x, dtype=np.float64)
    return np.ones_like(x) if geometry == Geometry.INTERVAL else 2.0 * math.pi * x


def measure_rule(geometry: Geometry, n: int = DEFAULT_NODES,
                 rule: RuleName | None = None) -> QuadratureRule:
    """Quadrature rule for dmu_geom on [0, 1] (measure weight folded into the weights)."""
    base = rule_for(geometry.value, n, rule)
    return QuadratureRule(base.nodes, base.weights * measure_weight(geometry, base.nodes),
                          f"{base.name}-{geometry.value}")


def as_expansion(datum: Datum, geometry: Geometry, direction: Direction,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> SpectralExpansion:
    """Turn a callable, a coefficient list or an expansion into a SpectralExpansion."""
    if isinstance(datum, SpectralExpansion):
        if datum.geometry != geometry:
            raise InvalidDatumError(
                f"Datum geometry {datum.geometry.value} does not match model geometry {geometry.value}"
            )
        return SpectralExpansion(geometry, datum.coefficients, direction, policy.prune_tol)
    if callable(datum):
        return project_datum(datum, geometry, policy.max_modes, direction, policy)
    coefficients = np.asarray(datum, dtype=np.float64)
    if coefficients.size > policy.max_modes:
        raise InvalidDatumError(
            f"{coefficients.size} coefficients exceed max_modes={policy.max_modes}"
        )
    return SpectralExpansion(geometry, coefficients, direction, policy.prune_tol)


def normalization_constant(phi: SpectralExpansion, psi: SpectralExpansion, horizon: float,
                           potential: float = 0.0) -> float:
    """Closed-form mass of the endpoint density.

    Z = exp(-V0 T) sum_n a_n b_n exp(-lambda_n T) A / c_n, using the orthogonality
    of the modes (A = area factor, c_n = mode normalizer).
    """
    count = min(phi.modes, psi.modes)
    basis = neumann_basis(phi.geometry, count)
    terms = (phi.coefficients[:count] * psi.coefficients[:count]
             * np.exp(-basis.eigenvalues * horizon) / basis.normalizers)
    return float(math.exp(-potential * horizon) * area_factor(phi.geometry) * terms.sum())


@dataclass(frozen=True)
class BernsteinModel:
    """Immutable Bernstein structure for one problem instance.

    Use :meth:`from_data` to build a normalized model. ``psi`` is already
    rescaled; ``normalization_scale`` records the factor that was applied.

    Attributes:
        geometry: State space
        horizon: Final time T > 0
        phi: Forward expansion of the initial datum
        psi: Backward expansion of the (rescaled) final datum
        potential: Constant potential V0
        policy: Spectral truncation policy
        normalization_scale: Factor applied to psi at construction
    """
    geometry: Geometry
    horizon: float
    phi: SpectralExpansion
    psi: SpectralExpansion
    potential: float = 0.0
    policy: TruncationPolicy = field(default=DEFAULT_POLICY, repr=False)
    normalization_scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError(f"Horizon T must be positive and finite, got {self.horizon}")
        if not math.isfinite(self.potential):
            raise DomainError(f"Potential must be finite, got {self.potential}")
        if self.phi.geometry != self.geometry or self.psi.geometry != self.geometry:
            raise InvalidDatumError("phi, psi and the model must share one geometry")
        self._check_positivity()

    @classmethod
    def from_data(cls, geometry: Geometry, horizon: float, phi: Datum, psi: Datum,
                  potential: float = 0.0, policy: TruncationPolicy = DEFAULT_POLICY,
                  normalize: bool = True) -> "BernsteinModel":
        """Build a model, rescaling psi so the endpoint density has unit mass.

        Args:
            geometry: State space
            horizon: T > 0
            phi: Initial datum (callable, coefficient list or expansion)
            psi: Final datum (callable, coefficient list or expansion)
            potential: Constant V0
            policy: Truncation policy
            normalize: Skip the rescaling when False (used by negative controls)

        Raises:
            InvalidDatumError: If a datum is non-positive, non-finite or has zero mass
            DomainError: If T or V0 are invalid
        """
        if not (math.isfinite(horizon) and horizon > 0):
            raise DomainError(f"Horizon T must be positive and finite, got {horizon}")
        if not math.isfinite(potential):
            raise DomainError(f"Potential must be finite, got {potential}")
        phi_exp = as_expansion(phi, geometry, Direction.FORWARD, policy)
        psi_exp = as_expansion(psi, geometry, Direction.BACKWARD, policy)
        scale = 1.0
        if normalize:
            mass = normalization_constant(phi_exp, psi_exp, horizon, potential)
            if not (math.isfinite(mass) and mass > 0):
                raise InvalidDatumError(f"Endpoint density has non-positive mass {mass}")
            scale = 1.0 / mass
            psi_exp = psi_exp.scaled(scale)
            if abs(scale - 1.0) > 1e-12:
                logger.debug(f"Rescaled psi by {scale:.12g} to normalize the endpoint density")
        return cls(geometry, float(horizon), phi_exp, psi_exp, float(potential), policy, scale)

    def _check_positivity(self) -> None:
        x = np.linspace(0.0, 1.0, POSITIVITY_GRID)
        for name, expansion in (("u", self.phi), ("v", self.psi)):
            low = min(
                float(np.min(expansion.value(x, t, self.horizon)))
                for t in np.linspace(0.0, self.horizon, POSITIVITY_TIMES)
            )
            if low < POSITIVITY_FLOOR:
                raise InvalidDatumError(
                    f"{name} falls to {low:.3e} on the validation grid (floor {POSITIVITY_FLOOR})"
                )

    def _check_time(self, *times: float) -> None:
        for t in times:
            if not (0.0 <= t <= self.horizon):
                raise DomainError(f"Time {t} outside [0, T={self.horizon}]")

    # ------------------------------------------------------------------ solutions

    @property
    def mass(self) -> float:
        """Mass of the endpoint density (1 after normalization)."""
        return normalization_constant(self.phi, self.psi, self.horizon, self.potential)

    def measure_rule(self, n: int = DEFAULT_NODES, rule: RuleName | None = None) -> QuadratureRule:
        return measure_rule(self.geometry, n, rule)

    def u(self, x, t: float):
        """u(x, t) including the potential factor exp(-V0 t)."""
        return self.phi.value(x, t, self.horizon) * math.exp(-self.potential * t)

    def v(self, x, t: float):
        """v(x, t) including the potential factor exp(-V0 (T - t))."""
        return self.psi.value(x, t, self.horizon) * math.exp(-self.potential * (self.horizon - t))

    def kernel(self, x, t: float, y, s: float):
        """Heat kernel k(x, t; y, s) against dmu_geom, with the potential factor."""
        self._check_time(s, t)
        g = np.asarray(green(x, t, y, s, self.geometry, self.policy))
        out = g * (math.exp(-self.potential * (t - s)) / area_factor(self.geometry))
        return float(out) if out.ndim == 0 else out

    # ------------------------------------------------------------------ densities

    def endpoint_density(self, x, y):
        """Joint density of (Z_0, Z_T) against dmu_geom x dmu_geom."""
        k = self.kernel(y, self.horizon, x, 0.0)
        out = np.asarray(self.phi.datum(x)) * k * np.asarray(self.psi.datum(y))
        return float(out) if np.ndim(out) == 0 else out

    def bernstein_transition(self, x, t: float, z, r: float, y, s: float):
        """Bridge density p(x, t; z, r; y, s) of Z_r given Z_s = y and Z_t = x.

        Raises:
            OrderingError: Unless s < r < t
            UnderflowError: If the pinning kernel k(x, t; y, s) is below 1e-300
        """
        if not s < r < t:
            raise OrderingError(f"Bridge density needs s < r < t, got s={s}, r={r}, t={t}")
        denominator = np.asarray(self.kernel(x, t, y, s))
        if np.any(denominator < UNDERFLOW_FLOOR):
            raise UnderflowError(
                f"Bridge denominator {float(denominator.min()):.3e} below {UNDERFLOW_FLOOR}"
            )
        out = np.asarray(self.kernel(x, t, z, r)) * np.asarray(self.kernel(z, r, y, s)) / denominator
        return float(out) if out.ndim == 0 else out

    def forward_kernel(self, x, s: float, y, t: float):
        """Forward transition density m*(x, s; y, t), a density in y."""
        if not s < t:
            raise OrderingError(f"Forward kernel needs s < t, got s={s}, t={t}")
        out = (np.asarray(self.kernel(y, t, x, s)) * np.asarray(self.v(y, t))
               / np.asarray(self.v(x, s)))
        return float(out) if out.ndim == 0 else out

    def backward_kernel(self, x, t: float, y, s: float):
        """Backward transition density m(x, t; y, s), a density in y."""
        if not s < t:
            raise OrderingError(f"Backward kernel needs s < t, got s={s}, t={t}")
        out = (np.asarray(self.kernel(x, t, y, s)) * np.asarray(self.u(y, s))
               / np.asarray(self.u(x, t)))
        return float(out) if out.ndim == 0 else out

    def occupation(self, x, t: float):
        """Occupation density rho(x, t) = u(x, t) v(x, t) against dmu_geom."""
        self._check_time(t)
        return self.u(x, t) * self.v(x, t)

    def occupation_density(self) -> "OccupationDensity":
        return OccupationDensity(self)

    def marginal_initial(self, x):
        """Law of Z_0: phi(x) v(x, 0)."""
        out = np.asarray(self.phi.datum(x)) * np.asarray(self.v(x, 0.0))
        return float(out) if out.ndim == 0 else out

    def marginal_final(self, y):
        """Law of Z_T: psi(y) u(y, T)."""
        out = np.asarray(self.psi.datum(y)) * np.asarray(self.u(y, self.horizon))
        return float(out) if out.ndim == 0 else out

    def finite_dimensional_density(self, states: Sequence, times: Sequence[float]):
        """Joint density of (Z_t1, ..., Z_tn) for 0 <= t1 < ... < tn <= T.

        u(x1, t1) prod_k k(x_{k+1}, t_{k+1}; x_k, t_k) v(xn, tn); states may be
        broadcastable arrays.
        """
        if len(states) != len(times) or not times:
            raise DomainError("states and times must be non-empty and of equal length")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise OrderingError(f"Times must be strictly increasing, got {list(times)}")
        self._check_time(times[0], times[-1])
        out = np.asarray(self.u(states[0], times[0]))
        for k in range(len(times) - 1):
            out = out * np.asarray(self.kernel(states[k + 1], times[k + 1], states[k], times[k]))
        out = out * np.asarray(self.v(states[-1], times[-1]))
        return float(out) if out.ndim == 0 else out

    # ------------------------------------------------------------------ drifts

    def forward_drift(self, x, t: float):
        """b*(x, t) = d/dx ln v(x, t) from the differentiated series."""
        return self.psi.gradient(x, t, self.horizon) / self.psi.value(x, t, self.horizon)

    def backward_drift(self, x, t: float):
        """b(x, t) = -d/dx ln u(x, t); exactly 0 at the disk centre."""
        return -self.phi.gradient(x, t, self.horizon) / self.phi.value(x, t, self.horizon)

    def _drift_vector(self, drift: Callable, points, t: float) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if self.geometry == Geometry.INTERVAL:
            return np.asarray(drift(points, t))
        radius = np.linalg.norm(points, axis=-1)
        if np.any(radius > 1.0 + 1e-12):
            raise DomainError(f"Planar point outside the unit disk (|z| = {radius.max()})")
        radius = np.minimum(radius, 1.0)
        radial = np.asarray(drift(radius, t))
        safe = np.where(radius > 0.0, radius, 1.0)
        scale = np.where(radius > 0.0, radial / safe, 0.0)
        return points * scale[..., None]

    def forward_drift_vector(self, points, t: float) -> np.ndarray:
        """b* as a planar field on the disk (scalar drift on the interval)."""
        return self._drift_vector(self.forward_drift, points, t)

    def backward_drift_vector(self, points, t: float) -> np.ndarray:
        """b as a planar field on the disk (scalar drift on the interval)."""
        return self._drift_vector(self.backward_drift, points, t)

    def drift_peak(self, t: float, grid: int = 401) -> tuple[float, float]:
        """Location and value of max |b(., t)| on a uniform grid of [0, 1]."""
        x = np.linspace(0.0, 1.0, grid)
        magnitude = np.abs(self.backward_drift(x, t))
        peak = int(np.argmax(magnitude))
        return float(x[peak]), float(magnitude[peak])


class OccupationDensity:
    """Occupation density of a model with a per-grid evaluation cache.

    The cache is a plain dict filled on first use; concurrent readers see
    either a miss (and recompute) or a complete entry.
    """

    def __init__(self, model: BernsteinModel):
        self.model = model
        self._cache: dict[tuple[bytes, float], np.ndarray] = {}

    def __call__(self, x, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        key = (x.tobytes(), float(t))
        if key not in self._cache:
            self._cache[key] = np.asarray(self.model.occupation(x, t))
        return self._cache[key]

    def mass(self, t: float, n: int = DEFAULT_NODES) -> float:
        rule = self.model.measure_rule(n)
        return float(rule.integrate(self(rule.nodes, t)))

    def check_mass(self, times: Sequence[float] | None = None, tol: float = 1e-8) -> float:
        """Largest |mass - 1| over ``times`` (default 0, T/4, T/2, 3T/4, T)."""
        if times is None:
            times = self.model.horizon * np.linspace(0.0, 1.0, 5)
        deviation = max(abs(self.mass(t) - 1.0) for t in times)
        if deviation > tol:
            logger.warning(f"Occupation mass deviates by {deviation:.3e} (tol {tol})")
        return deviation
