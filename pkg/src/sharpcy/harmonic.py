"""Exact positive harmonic functions on Euclidean balls and their conformal
pullbacks to the sphere and hyperbolic space.

The test family is finite positive mixtures of Poisson kernels

    P(x, y) = (R^2 - |x|^2) / (n * omega_n * R * |y - x|^n),   |y| = R,

which have closed-form log-gradients.  A mixture ``u~`` on the chart ball of
radius ``R~ = chart_radius(K, R)`` is transported to the space form of
curvature K by

    u(y) = (1 + K |y|^2)^((n-2)/2) * u~(y),

which solves ``-Delta_g u + n(n-2)K/4 u = 0`` exactly and is harmonic when
n = 2.  With this normalisation cs_K(r/2)^(n-2) * u = u~.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import finite_diff
from .errors import DomainError, StepSizeError
from .spaceform import (
    ChartKind,
    CurvedChart,
    chart_radius,
    conformal_factor,
    geodesic_radius,
    max_radius,
)

# relative tolerance on |pole| = R
POLE_RTOL = 1e-12


def omega_n(n: int) -> float:
    """Volume of the unit n-ball."""
    if int(n) != n or n < 2:
        raise DomainError("n must be an integer >= 2")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _check_inside(x, R, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise DomainError(f"points must have trailing dimension {n}")
    if np.any(np.sum(x * x, axis=-1) >= R * R):
        raise DomainError("point outside the open ball")
    return x


@dataclass(frozen=True)
class PoissonKernelSpec:
    n: int
    R: float
    pole: tuple

    def __post_init__(self):
        pole = np.asarray(self.pole, dtype=float)
        if self.n < 2 or pole.shape != (self.n,):
            raise DomainError("pole must be a vector of length n >= 2")
        if not self.R > 0:
            raise DomainError("R must be positive")
        if abs(np.linalg.norm(pole) - self.R) > POLE_RTOL * self.R:
            raise DomainError("pole must lie on the boundary sphere |y| = R")
        object.__setattr__(self, "pole", tuple(pole.tolist()))


def poisson_eval(spec: PoissonKernelSpec, x):
    """Poisson kernel of B(R) with pole ``spec.pole`` at interior point(s) x."""
    x = _check_inside(x, spec.R, spec.n)
    pole = np.asarray(spec.pole)
    d2 = np.sum((pole - x) ** 2, axis=-1)
    num = spec.R**2 - np.sum(x * x, axis=-1)
    val = num / (spec.n * omega_n(spec.n) * spec.R * d2 ** (spec.n / 2.0))
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True, eq=False)
class PoissonMixture:
    """u(x) = sum_i weights[i] * P(x, poles[i]) on B(R) in R^n."""

    n: int
    R: float
    weights: np.ndarray
    poles: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        p = np.array(self.poles, dtype=float).reshape(-1, self.n)
        if self.n < 2:
            raise DomainError("n must be >= 2")
        if not self.R > 0:
            raise DomainError("R must be positive")
        if w.size == 0 or w.size != p.shape[0]:
            raise DomainError("need one positive weight per pole, at least one term")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise DomainError("mixture weights must be positive")
        norms = np.linalg.norm(p, axis=1)
        if np.any(np.abs(norms - self.R) > POLE_RTOL * self.R):
            raise DomainError("all poles must lie on |y| = R")
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "poles", p)

    @classmethod
    def from_directions(cls, n, R, weights, directions):
        """Build from unit (or any nonzero) directions, scaled onto |y| = R."""
        d = np.array(directions, dtype=float).reshape(-1, n)
        norms = np.linalg.norm(d, axis=1)
        if np.any(norms == 0):
            raise DomainError("pole direction must be nonzero")
        return cls(n, R, weights, R * d / norms[:, None])

    @classmethod
    def single(cls, n, R, direction, weight=1.0):
        return cls.from_directions(n, R, [weight], [direction])

    @classmethod
    def random(cls, n, R, count, rng):
        """Random mixture with directions uniform on the sphere."""
        d = rng.standard_normal((count, n))
        w = rng.uniform(0.1, 1.0, size=count)
        return cls.from_directions(n, R, w, d)

    @classmethod
    def from_dict(cls, data):
        """Parse {n, R, terms: [{lambda, pole: [...]}, ...]}; poles are directions."""
        try:
            n = int(data["n"])
            R = float(data["R"])
            terms = data["terms"]
            weights = [float(t["lambda"]) for t in terms]
            dirs = [list(map(float, t["pole"])) for t in terms]
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed mixture document: {exc}") from exc
        return cls.from_directions(n, R, weights, dirs)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {
            "n": self.n,
            "R": self.R,
            "terms": [
                {"lambda": float(w), "pole": (p / self.R).tolist()}
                for w, p in zip(self.weights, self.poles)
            ],
        }

    def _terms(self, x):
        # per-term kernel values, shape (..., m), and y_i - x, |y_i - x|^2
        diff = self.poles - x[..., None, :]
        d2 = np.sum(diff * diff, axis=-1)
        num = self.R**2 - np.sum(x * x, axis=-1)
        c = self.n * omega_n(self.n) * self.R
        kern = num[..., None] / (c * d2 ** (self.n / 2.0))
        return kern, diff, d2, num

    def value(self, x):
        x = _check_inside(x, self.R, self.n)
        kern = self._terms(x)[0]
        return np.sum(kern * self.weights, axis=-1)

    def eval_grad(self, x):
        """Value and gradient of ln u at x."""
        x = _check_inside(x, self.R, self.n)
        kern, diff, d2, num = self._terms(x)
        wk = kern * self.weights
        u = np.sum(wk, axis=-1)
        share = wk / u[..., None]
        grad = -2.0 * x / num[..., None] + self.n * np.sum(
            (share / d2)[..., None] * diff, axis=-2
        )
        return u, grad

    def gradient(self, x):
        u, g = self.eval_grad(x)
        return u[..., None] * g

    def as_field(self) -> "ScalarField":
        chart = CurvedChart(ChartKind.EUCLIDEAN, 0.0, self.n)
        return ScalarField(
            value=self.value,
            grad=self.gradient,
            chart=chart,
            radius=self.R,
            positive=True,
        )


def mixture_eval_grad(mix: PoissonMixture, x):
    """(value, grad_log) of a Poisson mixture; scalar value for a single point."""
    u, g = mix.eval_grad(x)
    if np.ndim(u) == 0:
        return float(u), g
    return u, g


@dataclass(frozen=True, eq=False)
class PulledBackSolution:
    """A Poisson mixture on the chart ball transported to curvature K."""

    base: PoissonMixture
    chart: CurvedChart

    def __post_init__(self):
        if self.base.n != self.chart.n:
            raise DomainError("mixture and chart dimensions differ")
        if self.chart.K < 0 and self.base.R >= self.chart.domain_radius:
            raise DomainError("chart ball exceeds the Poincare ball")

    @classmethod
    def on_geodesic_ball(cls, chart: CurvedChart, R, weights, directions):
        """Mixture with poles on the chart image of the geodesic sphere of radius R."""
        if chart.K > 0 and R >= max_radius(chart.K):
            raise DomainError("R must be < pi/sqrt(K)")
        if chart.kind is ChartKind.EUCLIDEAN:
            Rt = float(R)
        else:
            Rt = chart_radius(chart.K, R)
        return cls(PoissonMixture.from_directions(chart.n, Rt, weights, directions), chart)

    @property
    def n(self):
        return self.chart.n

    @property
    def chart_R(self) -> float:
        return self.base.R

    @property
    def R(self) -> float:
        """Geodesic radius of the ball."""
        if self.chart.kind is ChartKind.EUCLIDEAN:
            return self.base.R
        return geodesic_radius(self.chart.K, self.base.R)

    def _weight(self, y):
        # (1 + K|y|^2)^((n-2)/2) = cs_K(r/2)^-(n-2)
        if self.chart.kind is ChartKind.EUCLIDEAN or self.n == 2:
            return np.ones(np.shape(y)[:-1])
        sq = np.sum(y * y, axis=-1)
        return (1.0 + self.chart.K * sq) ** ((self.n - 2) / 2.0)

    def value(self, y):
        y = np.asarray(y, dtype=float)
        return self._weight(y) * self.base.value(y)

    def grad_log_norm(self, y, weighted=True):
        """Metric norm of grad ln(cs_K(r/2)^(n-2) u), or of grad ln u if not weighted."""
        y = np.asarray(y, dtype=float)
        _, g = self.base.eval_grad(y)
        if not weighted and self.n > 2 and self.chart.kind is not ChartKind.EUCLIDEAN:
            sq = np.sum(y * y, axis=-1)
            g = g + ((self.n - 2) * self.chart.K / (1.0 + self.chart.K * sq))[..., None] * y
        flat = np.linalg.norm(g, axis=-1)
        return flat / np.asarray(conformal_factor(self.chart, y))

    def as_field(self) -> "ScalarField":
        return ScalarField(value=self.value, chart=self.chart, radius=self.chart_R, positive=True)


def pullback_eval(sol: PulledBackSolution, y):
    val = sol.value(y)
    return float(val) if np.ndim(val) == 0 else val


def pullback_grad_log_norm(sol: PulledBackSolution, y):
    val = sol.grad_log_norm(y)
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class ScalarField:
    """A function on a chart ball, evaluated on arrays of chart points."""

    value: Callable
    chart: CurvedChart
    radius: float
    grad: Optional[Callable] = None
    positive: bool = False
    meta: dict = field(default_factory=dict)


def conformal_laplacian_residual(chart: CurvedChart, field: ScalarField, y, h,
                                 richardson=False, return_scale=False):
    """Finite-difference value of -Delta_g u + n(n-2)K/4 u at chart point(s) y.

    Delta_g f = lam^-2 (Delta~ f + (n-2) lam^-1 <grad~ lam, grad~ f>) in the
    conformal chart.  With ``return_scale`` also returns the sum of absolute
    values of the individual terms, the natural size against which the
    residual is judged.
    """
    Rt = field.radius
    if not (1e-6 * Rt <= h <= 1e-2 * Rt):
        raise StepSizeError(f"h={h!r} outside [1e-6, 1e-2] * {Rt!r}")
    y = chart.check_points(y)
    if np.any(np.linalg.norm(y, axis=-1) + 2.0 * h > Rt):
        raise DomainError("stencil leaves the domain; need margin >= 2h")
    n, K = chart.n, chart.K
    f = field.value
    u = np.asarray(f(y), dtype=float)
    d2 = finite_diff.second_diagonal(f, y, h, richardson)
    g = finite_diff.gradient(f, y, h, richardson)
    lam = np.asarray(conformal_factor(chart, y))
    # lam^-1 grad lam = -K lam y
    dlog_lam = (-K * lam)[..., None] * y
    drift = (n - 2) * np.sum(dlog_lam * g, axis=-1)
    lap_flat = np.sum(d2, axis=-1)
    zeroth = n * (n - 2) * K / 4.0 * u
    res = -(lap_flat + drift) / lam**2 + zeroth
    if not return_scale:
        return float(res) if res.ndim == 0 else res
    scale = (np.sum(np.abs(d2), axis=-1) + np.abs(drift) + np.abs(u) / Rt**2) / lam**2 + np.abs(zeroth)
    if res.ndim == 0:
        return float(res), float(scale)
    return res, scale


@dataclass(frozen=True, eq=False)
class AffineFunction:
    """u(x) = offset + <slope, x> on the Euclidean ball B(R); positive when offset > |slope| R."""

    n: int
    R: float
    offset: float
    slope: tuple

    def __post_init__(self):
        slope = np.asarray(self.slope, dtype=float).reshape(-1)
        if slope.size != self.n:
            raise DomainError("slope must have length n")
        if not self.offset > np.linalg.norm(slope) * self.R:
            raise DomainError("affine function is not positive on the closed ball")
        object.__setattr__(self, "slope", tuple(slope.tolist()))

    @property
    def chart(self):
        return CurvedChart(ChartKind.EUCLIDEAN, 0.0, self.n)

    @property
    def chart_R(self):
        return self.R

    def value(self, x):
        x = _check_inside(x, self.R, self.n)
        return self.offset + x @ np.asarray(self.slope)

    def eval_grad(self, x):
        u = self.value(x)
        return u, np.asarray(self.slope) / u[..., None]

    def grad_log_norm(self, x, weighted=True):
        return np.linalg.norm(self.eval_grad(x)[1], axis=-1)
