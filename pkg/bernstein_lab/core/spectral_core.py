"""Neumann eigenfunction expansions and parabolic Green functions.

Two geometries are supported, both with state space [0, 1]:

    - ``Geometry.INTERVAL``: the unit interval, modes cos(pi n x),
      eigenvalues pi^2 n^2 / 2, Green normalizers 1 (n = 0) and 2 (n >= 1)
    - ``Geometry.DISK_RADIAL``: radius of the unit disk for radially symmetric
      functions, modes J0(sqrt(mu_n) r), eigenvalues mu_n / 2, normalizers
      2 / J0(sqrt(mu_n))^2 against the radial weight r dr

The Green function is the heat kernel of (1/2) Laplacian with Neumann boundary
conditions,

    g(x, t; y, s) = sum_n c_n e_n(x) e_n(y) exp(-lambda_n (t - s)),

truncated to ``TruncationPolicy.max_modes`` modes. For short gaps on the
interval the method-of-images form converges faster and is used instead.

Example:
    >>> from bernstein_lab.core.spectral_core import Geometry, project_datum, evaluate_expansion
    >>> import numpy as np
    >>> phi = project_datum(lambda x: 1 + 0.5 * np.cos(np.pi * x), Geometry.INTERVAL, 64)
    >>> evaluate_expansion(phi, 0.0, 0.0, horizon=1.0)
    1.5
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
import math
from typing import Callable

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import logger
from ..errors import (
    DomainError,
    InvalidDatumError,
    OrderingError,
    TruncationPolicyError,
    UnsupportedGeometryError,
)
from ..utils.quadrature import gauss_rule, trapezoid_rule
from .special_functions import bessel_j0, bessel_j1, mcmahon_root_estimate, neumann_eigenvalues

POSITIVITY_GRID = 201
DISK_PROJECTION_NODES = 512
TAIL_TERMS = 4096


class Geometry(str, Enum):
    """State space of the process; both variants live on [0, 1]."""
    INTERVAL = "interval"
    DISK_RADIAL = "disk"


class Direction(str, Enum):
    """Time orientation of an expansion or a path."""
    FORWARD = "forward"
    BACKWARD = "backward"


def tail_bound(geometry: Geometry, modes: int, gap: float) -> float:
    """Bound on the spectral terms discarded beyond ``modes`` at time gap ``gap``.

    Sums amplitude bounds times exp(-lambda_n gap) for n >= modes, using the
    exact interval eigenvalues and McMahon estimates of the disk roots.
    """
    if gap <= 0:
        return math.inf
    n = np.arange(modes, modes + TAIL_TERMS, dtype=np.float64)
    if geometry == Geometry.INTERVAL:
        lam = 0.5 * (np.pi * n) ** 2
        amp = np.full_like(n, 2.0)
    else:
        # 0-based mode n is the (n+1)-th eigenvalue
        roots = np.array([mcmahon_root_estimate(int(k) + 1) for k in n])
        lam = 0.5 * roots ** 2
        amp = np.pi * roots + 2.0
    terms = amp * np.exp(-lam * gap)
    remainder = terms[-1] / max(1e-300, 1.0 - np.exp(-(lam[-1] - lam[-2]) * gap))
    return float(terms.sum() + remainder)


class TruncationPolicy(BaseModel):
    """Controls the length of every spectral sum.

    Attributes:
        max_modes: Number of eigenmodes N kept in series (1-64)
        min_gap: Smallest t - s evaluated by the pure spectral form
        tail_tol: Bound the discarded tail must meet for gaps >= min_gap
        image_count: Images per side in the method-of-images sum
        prune_tol: Coefficients below prune_tol * max|coef| are skipped in evaluation
    """
    model_config = ConfigDict(frozen=True)

    max_modes: int = Field(64, ge=1, le=64, description="Spectral modes N")
    min_gap: float = Field(0.01, gt=0.0, description="Smallest gap for the spectral form")
    tail_tol: float = Field(1e-10, gt=0.0, description="Tail bound at min_gap")
    image_count: int = Field(8, ge=0, description="Images per side (interval)")
    prune_tol: float = Field(1e-13, ge=0.0, lt=1.0, description="Relative coefficient cutoff")

    @model_validator(mode="after")
    def check_tail(self) -> "TruncationPolicy":
        """Assert the spectral tail bound at min_gap for both geometries."""
        worst = max(tail_bound(g, self.max_modes, self.min_gap) for g in Geometry)
        if worst > self.tail_tol:
            raise ValueError(
                f"Spectral tail {worst:.3e} at min_gap={self.min_gap} exceeds "
                f"tail_tol={self.tail_tol}; increase max_modes or min_gap"
            )
        return self


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class EigenMode:
    """One Neumann eigenmode.

    Attributes:
        index: Mode index n (0 is the constant mode)
        eigenvalue: lambda_n in 1/time, without any potential offset
        normalizer: c_n = 1 / ||e_n||^2 in the geometry's weight
    """
    index: int
    eigenvalue: float
    normalizer: float


@dataclass(frozen=True)
class NeumannBasis:
    """First ``count`` Neumann eigenmodes of a geometry."""
    geometry: Geometry
    count: int
    frequencies: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    normalizers: np.ndarray = field(repr=False)

    @property
    def modes(self) -> tuple[EigenMode, ...]:
        return tuple(
            EigenMode(n, float(lam), float(c))
            for n, (lam, c) in enumerate(zip(self.eigenvalues, self.normalizers))
        )

    def weight(self, x: np.ndarray) -> np.ndarray:
        """Measure weight of the spectral inner product (1 or r)."""
        x = np.asarray(x, dtype=np.float64)
        return np.ones_like(x) if self.geometry == Geometry.INTERVAL else x

    def values(self, x, indices: np.ndarray | None = None) -> np.ndarray:
        """Mode values e_n(x), shape ``x.shape + (len(indices),)``."""
        freq = self.frequencies if indices is None else self.frequencies[indices]
        arg = np.multiply.outer(np.asarray(x, dtype=np.float64), freq)
        if self.geometry == Geometry.INTERVAL:
            return np.cos(arg)
        return bessel_j0(arg)

    def slopes(self, x, indices: np.ndarray | None = None) -> np.ndarray:
        """Mode derivatives e_n'(x), shape ``x.shape + (len(indices),)``."""
        freq = self.frequencies if indices is None else self.frequencies[indices]
        arg = np.multiply.outer(np.asarray(x, dtype=np.float64), freq)
        if self.geometry == Geometry.INTERVAL:
            return -freq * np.sin(arg)
        return -freq * bessel_j1(arg)


@lru_cache(maxsize=16)
def neumann_basis(geometry: Geometry, count: int) -> NeumannBasis:
    """Cached Neumann basis with ``count`` modes."""
    if geometry == Geometry.INTERVAL:
        freq = np.pi * np.arange(count, dtype=np.float64)
        normalizers = np.full(count, 2.0)
        normalizers[0] = 1.0
    else:
        roots = neumann_eigenvalues(count)
        freq = roots.sqrt_values
        normalizers = 2.0 / bessel_j0(freq) ** 2
    eigenvalues = 0.5 * freq ** 2
    for arr in (freq, eigenvalues, normalizers):
        arr.setflags(write=False)
    return NeumannBasis(geometry, count, freq, eigenvalues, normalizers)


def _check_states(x: np.ndarray, name: str = "x") -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} must be finite")
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got range [{x.min()}, {x.max()}]")


def _scalar_or_array(values: np.ndarray):
    return float(values) if np.ndim(values) == 0 else values


@dataclass(frozen=True)
class SpectralExpansion:
    """Neumann-series representation of u_phi (forward) or v_psi (backward).

    Attributes:
        geometry: Geometry of the modes
        coefficients: a_n (forward) or b_n (backward), one per mode
        direction: FORWARD evolves from t = 0, BACKWARD toward t = T
        prune_tol: Relative cutoff below which coefficients are skipped in evaluation
    """
    geometry: Geometry
    coefficients: np.ndarray
    direction: Direction = Direction.FORWARD
    prune_tol: float = DEFAULT_POLICY.prune_tol

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=np.float64)
        if coefficients.ndim != 1 or coefficients.size == 0:
            raise InvalidDatumError("Expansion needs a non-empty 1-d coefficient sequence")
        if not np.all(np.isfinite(coefficients)):
            raise InvalidDatumError("Expansion coefficients must be finite")
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

        grid = np.linspace(0.0, 1.0, POSITIVITY_GRID)
        minimum = float(self.datum(grid).min())
        # the heat semigroup preserves positivity, so t = 0 suffices
        if minimum <= 0.0:
            raise InvalidDatumError(
                f"Datum must be strictly positive on [0, 1]; grid minimum is {minimum:.3e}"
            )

    @property
    def modes(self) -> int:
        return len(self.coefficients)

    @property
    def basis(self) -> NeumannBasis:
        return neumann_basis(self.geometry, self.modes)

    @property
    def active(self) -> np.ndarray:
        """Indices of coefficients used in evaluation."""
        mags = np.abs(self.coefficients)
        return np.flatnonzero(mags > self.prune_tol * mags.max())

    def scaled(self, factor: float) -> "SpectralExpansion":
        return SpectralExpansion(self.geometry, self.coefficients * factor,
                                 self.direction, self.prune_tol)

    def datum(self, x) -> np.ndarray:
        """The represented datum (expansion at its own starting time)."""
        x = np.asarray(x, dtype=np.float64)
        idx = self.active
        return self.basis.values(x, idx) @ self.coefficients[idx]

    def _decay(self, t: float, horizon: float, idx: np.ndarray) -> np.ndarray:
        if not (0.0 <= t <= horizon) or not math.isfinite(t):
            raise DomainError(f"t must lie in [0, T={horizon}], got {t}")
        elapsed = t if self.direction == Direction.FORWARD else horizon - t
        return self.coefficients[idx] * np.exp(-self.basis.eigenvalues[idx] * elapsed)

    def value(self, x, t: float, horizon: float):
        x = np.asarray(x, dtype=np.float64)
        _check_states(x)
        idx = self.active
        return _scalar_or_array(self.basis.values(x, idx) @ self._decay(t, horizon, idx))

    def gradient(self, x, t: float, horizon: float):
        x = np.asarray(x, dtype=np.float64)
        _check_states(x)
        idx = self.active
        return _scalar_or_array(self.basis.slopes(x, idx) @ self._decay(t, horizon, idx))


def project_datum(datum: Callable[[np.ndarray], np.ndarray], geometry: Geometry, modes: int,
                  direction: Direction = Direction.FORWARD,
                  policy: TruncationPolicy = DEFAULT_POLICY) -> SpectralExpansion:
    """Project a datum on [0, 1] onto the first ``modes`` Neumann modes.

    Interval: a_n = w_n * int_0^1 phi(x) cos(pi n x) dx with w_0 = 1, w_n = 2,
    integrated by the trapezoid rule on 4 * modes + 1 nodes (exact for cosine
    data below that band). Disk: a_n = 2 J0(sqrt(mu_n))^-2 int_0^1 r phi(r)
    J0(sqrt(mu_n) r) dr with 512 Gauss-Legendre nodes.

    Args:
        datum: Vectorized function on [0, 1]
        geometry: Target geometry
        modes: Number of coefficients (>= 1)
        direction: Direction recorded on the expansion
        policy: Supplies the pruning tolerance

    Returns:
        SpectralExpansion with ``modes`` coefficients

    Raises:
        InvalidDatumError: If the datum is non-finite on the quadrature nodes or
            the projection is not strictly positive
        DomainError: If modes < 1
    """
    if modes < 1:
        raise DomainError(f"modes must be >= 1, got {modes}")
    basis = neumann_basis(geometry, modes)
    if geometry == Geometry.INTERVAL:
        rule = trapezoid_rule(4 * modes + 1)
    else:
        rule = gauss_rule(DISK_PROJECTION_NODES)
    values = np.asarray(datum(rule.nodes), dtype=np.float64)
    if values.shape != rule.nodes.shape:
        values = np.broadcast_to(values, rule.nodes.shape)
    if not np.all(np.isfinite(values)):
        raise InvalidDatumError("Datum has non-finite values on [0, 1]")

    weighted = values * basis.weight(rule.nodes)
    coefficients = basis.normalizers * rule.integrate(basis.values(rule.nodes).T * weighted)
    logger.debug(
        f"Projected datum onto {modes} {geometry.value} modes "
        f"(leading coefficients {np.round(coefficients[:3], 6).tolist()})"
    )
    return SpectralExpansion(geometry, coefficients, direction, policy.prune_tol)


def evaluate_expansion(expansion: SpectralExpansion, x, t: float, horizon: float):
    """Evaluate u_phi(x, t) (forward) or v_psi(x, t) (backward).

    Forward expansions decay as exp(-lambda_n t), backward ones as
    exp(-lambda_n (T - t)).

    Raises:
        DomainError: If t is outside [0, T] or x outside [0, 1]
    """
    return expansion.value(x, t, horizon)


def _gap(t: float, s: float) -> float:
    if not t > s:
        raise OrderingError(f"Green function needs t > s, got t={t}, s={s}")
    return t - s


def green_spectral_raw(x, t: float, y, s: float, geometry: Geometry,
                       policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Unclamped truncated eigenfunction sum (may dip below zero by round-off)."""
    gap = _gap(t, s)
    if gap < policy.min_gap:
        if geometry == Geometry.INTERVAL:
            raise TruncationPolicyError(
                f"t - s = {gap} is below min_gap = {policy.min_gap}; use green_images"
            )
        logger.debug(f"Disk Green at gap {gap} < min_gap: reduced resolution, "
                     f"tail bound {tail_bound(geometry, policy.max_modes, gap):.2e}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_states(x, "x")
    _check_states(y, "y")

    basis = neumann_basis(geometry, policy.max_modes)
    weights = basis.normalizers * np.exp(-basis.eigenvalues * gap)
    live = np.flatnonzero(weights > 0.0)
    ex = basis.values(x, live)
    ey = basis.values(y, live)
    total = np.zeros(np.broadcast_shapes(x.shape, y.shape))
    for k, n in enumerate(live):
        total = total + weights[n] * ex[..., k] * ey[..., k]
    return total


def green_spectral(x, t: float, y, s: float, geometry: Geometry,
                   policy: TruncationPolicy = DEFAULT_POLICY):
    """Spectral Green function g(x, t; y, s), clamped at zero.

    Interval: 1 + 2 sum cos(pi n x) cos(pi n y) exp(-pi^2 n^2 (t - s) / 2).
    Disk: 2 sum J0(sqrt(mu_n))^-2 J0(sqrt(mu_n) x) J0(sqrt(mu_n) y) exp(-mu_n (t - s) / 2),
    with unit mass against y dy.

    Raises:
        OrderingError: If t <= s
        TruncationPolicyError: If t - s < min_gap on the interval
    """
    raw = green_spectral_raw(x, t, y, s, geometry, policy)
    low = float(raw.min()) if raw.size else 0.0
    if low < 0.0:
        logger.debug(f"Clamped Green truncation residue of magnitude {-low:.2e}")
        raw = np.maximum(raw, 0.0)
    return _scalar_or_array(raw)


def green_images(x, t: float, y, s: float, image_count: int = DEFAULT_POLICY.image_count,
                 geometry: Geometry = Geometry.INTERVAL):
    """Method-of-images Neumann heat kernel on [0, 1].

    (2 pi (t - s))^-1/2 sum_{|n| <= image_count}
        (exp(-(x + y + 2n)^2 / 2(t - s)) + exp(-(x - y - 2n)^2 / 2(t - s)))

    Raises:
        UnsupportedGeometryError: For the disk
        OrderingError: If t <= s
    """
    if geometry != Geometry.INTERVAL:
        raise UnsupportedGeometryError("Image sum is only available on the interval")
    gap = _gap(t, s)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_states(x, "x")
    _check_states(y, "y")

    total = np.zeros(np.broadcast_shapes(x.shape, y.shape))
    for n in range(-image_count, image_count + 1):
        total = total + np.exp(-((x + y + 2 * n) ** 2) / (2 * gap))
        total = total + np.exp(-((x - y - 2 * n) ** 2) / (2 * gap))
    return _scalar_or_array(total / np.sqrt(2 * np.pi * gap))


def green(x, t: float, y, s: float, geometry: Geometry,
          policy: TruncationPolicy = DEFAULT_POLICY):
    """Green function with automatic choice of representation.

    Interval gaps below ``policy.min_gap`` use the image sum; everything else
    the spectral sum.
    """
    if geometry == Geometry.INTERVAL and _gap(t, s) < policy.min_gap:
        return green_images(x, t, y, s, policy.image_count)
    return green_spectral(x, t, y, s, geometry, policy)


def green_decay_profile(x: float, gap: float, geometry: Geometry,
                        policy: TruncationPolicy = DEFAULT_POLICY,
                        points: int = 101) -> pd.DataFrame:
    """Compare g(x, gap; y, 0) with the free Gaussian kernel over y.

    Returns:
        DataFrame with columns y, green, gaussian, ratio (green / gaussian)
    """
    y = np.linspace(0.0, 1.0, points)
    g = np.asarray(green(x, gap, y, 0.0, geometry, policy))
    gaussian = np.exp(-((x - y) ** 2) / (2 * gap)) / np.sqrt(2 * np.pi * gap)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(gaussian > 0, g / gaussian, np.nan)
    return pd.DataFrame({"y": y, "green": g, "gaussian": gaussian, "ratio": ratio})
