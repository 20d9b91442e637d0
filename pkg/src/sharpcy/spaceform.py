"""Space-form primitives: curvature-parameterised sine/cosine, model charts,
and the metric conversions between a conformal chart and its flat metric.

All functions accept scalars or numpy arrays for the radial argument and
return a float for scalar input.  The curvature ``K`` is always a scalar.

Charts are centred at the ball centre.  For curvature ``K`` the sphere
(``K > 0``) and hyperbolic space (``K < 0``) are represented on R^n with
metric ``g = lam(y)^2 |dy|^2`` where ``lam(y) = 2 / (1 + K |y|^2)``; this is
the unit-curvature stereographic / Poincare model with lengths rescaled by
``sqrt(|K|)``, so chart radius and geodesic radius are related by
``|y| = sn_K(r/2) / cs_K(r/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

# |K| r^2 below this uses the Taylor branch of sn/cs
SMALL_KR2 = 1e-10


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def sn(K: float, r):
    """sin(sqrt(K) r)/sqrt(K), r, or sinh(sqrt(-K) r)/sqrt(-K) by sign of K."""
    K = float(K)
    r = np.asarray(r, dtype=float)
    x = K * r * r
    small = np.abs(x) < SMALL_KR2
    if K > 0:
        s = math.sqrt(K)
        big = np.sin(s * r) / s
    elif K < 0:
        s = math.sqrt(-K)
        big = np.sinh(s * r) / s
    else:
        return _out(r.copy())
    taylor = r * (1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0)
    return _out(np.where(small, taylor, big))


def cs(K: float, r):
    """Derivative of :func:`sn` in r; cs(K, 0) = 1."""
    K = float(K)
    r = np.asarray(r, dtype=float)
    x = K * r * r
    small = np.abs(x) < SMALL_KR2
    if K > 0:
        big = np.cos(math.sqrt(K) * r)
    elif K < 0:
        big = np.cosh(math.sqrt(-K) * r)
    else:
        return _out(np.ones_like(r))
    taylor = 1.0 - x / 2.0 + x * x / 24.0 - x * x * x / 720.0
    return _out(np.where(small, taylor, big))


def max_radius(K: float) -> float:
    """Supremum of admissible geodesic radii: pi/sqrt(K) for K > 0, else inf."""
    return math.pi / math.sqrt(K) if K > 0 else math.inf


def chart_domain_radius(K: float) -> float:
    """Radius of the chart image of the whole space form (inf unless K < 0)."""
    return 1.0 / math.sqrt(-K) if K < 0 else math.inf


def _check_geodesic(K, r, *, strict_upper=True):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise DomainError("geodesic radius must be finite and >= 0")
    if K > 0 and np.any(r >= max_radius(K)):
        raise DomainError(f"geodesic radius must be < pi/sqrt(K) = {max_radius(K)!r}")
    return r


def chart_radius(K: float, r):
    """Chart (Euclidean) norm of a point at geodesic distance r from the centre.

    tan(r/2) for K = 1, tanh(r/2) for K = -1, r itself for K = 0.
    """
    K = float(K)
    r = _check_geodesic(K, r)
    if K == 0:
        return _out(r.copy())
    half = r / 2.0
    return _out(np.asarray(sn(K, half)) / np.asarray(cs(K, half)))


def geodesic_radius(K: float, rho):
    """Inverse of :func:`chart_radius`."""
    K = float(K)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise DomainError("chart radius must be finite and >= 0")
    if K == 0:
        return _out(rho.copy())
    s = math.sqrt(abs(K))
    if K > 0:
        big = 2.0 * np.arctan(s * rho) / s
    else:
        if np.any(s * rho >= 1.0):
            raise DomainError(f"chart radius must be < 1/sqrt(-K) = {1.0 / s!r}")
        big = 2.0 * np.arctanh(s * rho) / s
    x = K * rho * rho
    taylor = 2.0 * rho * (1.0 - x / 3.0 + x * x / 5.0 - x * x * x / 7.0)
    return _out(np.where(np.abs(x) < SMALL_KR2, taylor, big))


def laplacian_comparison(n: int, K: float, r):
    """Model Laplacian of the distance function, (n-1) cs_K(r)/sn_K(r)."""
    K = float(K)
    r = _check_geodesic(K, r)
    if np.any(r == 0):
        raise DomainError("laplacian_comparison is singular at r = 0")
    return _out((n - 1) * np.asarray(cs(K, r)) / np.asarray(sn(K, r)))


class ChartKind(str, Enum):
    EUCLIDEAN = "euclidean"
    SPHERE_STEREO = "sphere_stereo"
    POINCARE_BALL = "poincare_ball"


@dataclass(frozen=True)
class CurvedChart:
    """Model geometry of constant curvature K in its conformal chart."""

    kind: ChartKind
    K: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ChartKind(self.kind))
        object.__setattr__(self, "K", float(self.K))
        if int(self.n) != self.n or self.n < 2:
            raise DomainError("dimension n must be an integer >= 2")
        object.__setattr__(self, "n", int(self.n))
        expected = {
            ChartKind.EUCLIDEAN: self.K == 0,
            ChartKind.SPHERE_STEREO: self.K > 0,
            ChartKind.POINCARE_BALL: self.K < 0,
        }[self.kind]
        if not expected:
            raise DomainError(f"curvature K={self.K} inconsistent with chart {self.kind.value}")

    @classmethod
    def for_curvature(cls, K: float, n: int) -> "CurvedChart":
        if K > 0:
            kind = ChartKind.SPHERE_STEREO
        elif K < 0:
            kind = ChartKind.POINCARE_BALL
        else:
            kind = ChartKind.EUCLIDEAN
        return cls(kind, K, n)

    @property
    def domain_radius(self) -> float:
        return chart_domain_radius(self.K)

    def check_points(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.n:
            raise DomainError(f"chart points must have trailing dimension {self.n}")
        if self.K < 0:
            if np.any(np.linalg.norm(y, axis=-1) >= self.domain_radius):
                raise DomainError("point outside the Poincare ball")
        return y


@dataclass(frozen=True)
class GeodesicBall:
    """Geodesic ball of radius R centred at the chart origin."""

    R: float
    chart: CurvedChart

    def __post_init__(self):
        if not (self.R > 0 and math.isfinite(self.R)):
            raise DomainError("ball radius must be positive and finite")
        if self.chart.K > 0 and self.R >= max_radius(self.chart.K):
            raise DomainError("R must be < pi/sqrt(K) for K > 0")

    @property
    def chart_R(self) -> float:
        return chart_radius(self.chart.K, self.R)

    def geodesic_radius_of(self, y):
        """Geodesic distance r from the centre for chart points y."""
        y = self.chart.check_points(y)
        return geodesic_radius(self.chart.K, np.linalg.norm(y, axis=-1))


def conformal_factor(chart: CurvedChart, y):
    """lam(y) with g = lam^2 * (flat chart metric)."""
    y = chart.check_points(y)
    if chart.kind is ChartKind.EUCLIDEAN:
        return _out(np.ones(y.shape[:-1]))
    sq = np.sum(y * y, axis=-1)
    return _out(2.0 / (1.0 + chart.K * sq))


def grad_norm_convert(chart: CurvedChart, y, flat_grad_norm):
    """Curved-metric gradient norm from the flat chart gradient norm."""
    flat = np.asarray(flat_grad_norm, dtype=float)
    return _out(flat / np.asarray(conformal_factor(chart, y)))
