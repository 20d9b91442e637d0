"""Sharp log-gradient bounds, Harnack envelopes and the barrier constructions
behind them.

Every bound takes the geodesic distance ``r`` from the ball centre, except
:func:`bound_euclid` whose argument is the Euclidean norm ``s = |x|`` (the two
coincide for K = 0).  Radii above ``R * (1 - 1e-9)`` are rejected since all
bounds diverge at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .spaceform import cs, max_radius, sn

BOUNDARY_CUTOFF = 1e-9


class BoundKind(str, Enum):
    EUCLID = "euclid"
    CONFORMAL = "conformal"
    SURFACE2D = "surface2d"
    MANIFOLD = "manifold"


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _check(K, R, r, *, open_left=False):
    R = np.asarray(R, dtype=float)
    if not np.all((R > 0) & np.isfinite(R)):
        raise DomainError("R must be positive and finite")
    if K > 0 and np.any(R >= max_radius(K)):
        raise DomainError("R must be < pi/sqrt(K) when K > 0")
    r = np.asarray(r, dtype=float)
    if open_left:
        if np.any(r <= 0):
            raise DomainError("r must be > 0")
    elif np.any(r < 0):
        raise DomainError("r must be >= 0")
    if np.any(r > R * (1.0 - BOUNDARY_CUTOFF)) or not np.all(np.isfinite(r)):
        raise DomainError("r must be < R (boundary cutoff 1e-9 R)")
    return r


def _check_n(n, low=2):
    if int(n) != n or n < low:
        raise DomainError(f"n must be an integer >= {low}")
    return int(n)


def _half_sn(K, R, r):
    return np.asarray(sn(K, (R - r) / 2.0)), np.asarray(sn(K, (R + r) / 2.0))


def bound_euclid(n: int, R: float, s):
    """(n-1)/(R-s) + 1/(R+s) for |x| = s in the Euclidean ball B(R)."""
    n = _check_n(n)
    s = _check(0.0, R, s)
    return _out((n - 1) / (R - s) + 1.0 / (R + s))


def bound_conformal(n: int, K: float, R: float, r):
    """Bound on |grad ln(cs_K(r/2)^(n-2) u)| for solutions of the conformal Laplacian."""
    n = _check_n(n)
    r = _check(K, R, r)
    a, b = _half_sn(K, R, r)
    pref = cs(K, R / 2.0) / np.asarray(cs(K, r / 2.0))
    return _out(pref * ((n - 1) / (2.0 * a) + 1.0 / (2.0 * b)))


def bound_2d(K: float, R: float, r):
    """sn_K(R) / (2 sn_K((R+r)/2) sn_K((R-r)/2)); equals 2R/(R^2-r^2) at K = 0."""
    r = _check(K, R, r)
    a, b = _half_sn(K, R, r)
    return _out(sn(K, R) / (2.0 * a * b))


def bound_manifold(n: int, K: float, R: float, r):
    """(2n-3) times :func:`bound_2d`."""
    n = _check_n(n)
    return _out((2 * n - 3) * np.asarray(bound_2d(K, R, r)))


def evaluate_bound(kind, n, K, R, r):
    kind = BoundKind(kind)
    if kind is BoundKind.EUCLID:
        if K != 0:
            raise DomainError("the Euclidean bound requires K = 0")
        return bound_euclid(n, R, r)
    if kind is BoundKind.CONFORMAL:
        return bound_conformal(n, K, R, r)
    if kind is BoundKind.SURFACE2D:
        return bound_2d(K, R, r)
    return bound_manifold(n, K, R, r)


def harnack_envelope(n: int, K: float, R: float, r):
    """(lower, upper) multipliers of u(p) bounding u at distance r."""
    n = _check_n(n)
    r = _check(K, R, r)
    a, b = _half_sn(K, R, r)
    lower = (a / b) ** (2 * n - 3)
    return _out(lower), _out(1.0 / lower)


# ---------------------------------------------------------------------------
# proof constants


def q_nu(n, nu):
    """(n-2)^2 / (2(n-1) nu) - n / (2(n-1)); exact for Fraction input."""
    if isinstance(nu, Fraction):
        return Fraction((n - 2) ** 2, 2 * (n - 1)) / nu - Fraction(n, 2 * (n - 1))
    return (n - 2) ** 2 / (2.0 * (n - 1) * nu) - n / (2.0 * (n - 1))


def c_squared(n, nu):
    """Barrier constant ((n-2)^2 + (2n-3) nu) / ((1-nu) nu)."""
    return ((n - 2) ** 2 + (2 * n - 3) * nu) / ((1 - nu) * nu)


@dataclass(frozen=True)
class BarrierParams:
    n: int
    nu: float
    q: float
    C2: float


def barrier_constants(n: int, nu) -> BarrierParams:
    n = _check_n(n, 3)
    if not 0 < nu < 1:
        raise DomainError("nu must lie in (0, 1)")
    q = q_nu(n, nu)
    C2 = c_squared(n, nu)
    return BarrierParams(n, nu, q, C2)


def optimal_nu(n: int):
    """Exact minimiser and minimum of C^2(nu) over (0, 1)."""
    n = _check_n(n, 3)
    return Fraction(n - 2, 2 * n - 3), Fraction((2 * n - 3) ** 2)


def barrier_F_2d(K, R, r):
    """F(r) = 2 ln(sn(R) / (2 sn((R+r)/2) sn((R-r)/2)))."""
    return _out(2.0 * np.log(np.asarray(bound_2d(K, R, r))))


def barrier_residual_2d(K: float, R: float, r):
    """F'' + F' cs/sn - 2 exp(F) - 2K with closed-form derivatives; vanishes identically."""
    r = _check(K, R, r, open_left=True)
    a, b = _half_sn(K, R, r)
    P = a * b
    s, c = np.asarray(sn(K, r)), np.asarray(cs(K, r))
    dF = s / P
    # d/dr (sn_a sn_b) = -sn(r)/2
    d2F = c / P + s * s / (2.0 * P * P)
    expF = (np.asarray(sn(K, R)) / (2.0 * P)) ** 2
    return _out(d2F + dF * c / s - 2.0 * expF - 2.0 * K)


def barrier_chain_slack(n: int, nu: float, K: float, R: float, r):
    """Final upper bound for Delta v~ minus the intermediate one.

    With v~ = (C sn(R) / (2 sn_a sn_b))^(2(q+1)) and C^2 from
    :func:`c_squared`, the intermediate bound is

        n(q+1) cs(r)/P v~ - 2(q+1)(2q+3) cs_a cs_b / P v~
            + 2(q+1)(2q+3)/C^2 v~^((q+2)/(q+1))

    and the final one is 2(1-nu)(q+1)/(n-1) v~^((q+2)/(q+1)) + 2(n-1)(q+1) K v~.
    Non-negative slack certifies the inequality step of the barrier argument.
    """
    p = barrier_constants(n, nu)
    n, q, C2 = p.n, p.q, p.C2
    r = _check(K, R, r, open_left=True)
    a, b = _half_sn(K, R, r)
    ca, cb = np.asarray(cs(K, (R - r) / 2.0)), np.asarray(cs(K, (R + r) / 2.0))
    P = a * b
    w = math.sqrt(C2) * float(sn(K, R)) / (2.0 * P)
    v = w ** (2.0 * (q + 1.0))
    vpow = w ** (2.0 * (q + 2.0))
    c = np.asarray(cs(K, r))
    intermediate = (
        n * (q + 1.0) * c / P * v
        - 2.0 * (q + 1.0) * (2.0 * q + 3.0) * ca * cb / P * v
        + 2.0 * (q + 1.0) * (2.0 * q + 3.0) / C2 * vpow
    )
    final = 2.0 * (1.0 - nu) * (q + 1.0) / (n - 1) * vpow + 2.0 * (n - 1) * (q + 1.0) * K * v
    return _out(final - intermediate)

