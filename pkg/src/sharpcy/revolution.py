"""Harmonic functions on rotationally symmetric surfaces dr^2 + phi(r)^2 dtheta^2.

Separating u(r, theta) = sum_m c_m a_m(r) e^{i m theta} gives the mode ODE

    a'' + (phi'/phi) a' - (m^2 / phi^2) a = 0,

which has a regular singular point at r = 0.  Each mode is started from its
Frobenius series r^m (1 + alpha_2 r^2 + alpha_4 r^4) at r0 = 1e-3 R and
integrated outward with an adaptive Runge-Kutta 4(5) scheme, then normalised
so that a_m(R) = 1.

A second-order finite-difference solver for the flat unit disk is provided as
an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import ConvergenceError, DomainError, IntegrationError, PositivityError
from .spaceform import cs, max_radius, sn

LAUNCH_FRACTION = 1e-3
SERIES_SWITCH = 1e-2
GRID_POINTS = 2001
DEFAULT_MODE_CAP = 16


@dataclass(frozen=True, eq=False)
class WarpProfile:
    """phi with closed-form phi', phi'' and the Taylor data of phi/r at 0.

    ``taylor`` holds (c2, c4) with phi(r) = r (1 + c2 r^2 + c4 r^4 + ...).
    """

    name: str
    phi: Callable
    dphi: Callable
    ddphi: Callable
    taylor: tuple
    r_max: float = math.inf

    def curvature(self, r):
        return curvature(self, r)


def space_form_warp(K: float) -> WarpProfile:
    """phi = sn_K: flat (K=0), round sphere (K>0) or hyperbolic plane (K<0)."""
    K = float(K)
    name = "flat" if K == 0 else ("sphere" if K > 0 else "hyperbolic")
    if abs(K) != 1 and K != 0:
        name = f"{name}(K={K:g})"
    return WarpProfile(
        name=name,
        phi=lambda r: np.asarray(sn(K, r)),
        dphi=lambda r: np.asarray(cs(K, r)),
        ddphi=lambda r: -K * np.asarray(sn(K, r)),
        taylor=(-K / 6.0, K * K / 120.0),
        r_max=max_radius(K),
    )


def polynomial_warp(coeffs, name=None) -> WarpProfile:
    """phi(r) = r + sum_k b_k r^k over odd k >= 3; ``coeffs`` maps k -> b_k."""
    coeffs = {int(k): float(b) for k, b in dict(coeffs).items()}
    for k in coeffs:
        if k < 3 or k % 2 == 0:
            raise DomainError("polynomial warp terms must have odd degree >= 3")
    poly = np.polynomial.Polynomial([0.0, 1.0] + [coeffs.get(k, 0.0) for k in range(2, max(coeffs, default=1) + 1)])
    d1, d2 = poly.deriv(1), poly.deriv(2)
    roots = [z.real for z in poly.roots() if abs(z.imag) < 1e-12 and z.real > 1e-12]
    r_max = min(roots) if roots else math.inf
    label = name or "poly(" + ",".join(f"b{k}={b:g}" for k, b in sorted(coeffs.items())) + ")"
    return WarpProfile(
        name=label,
        phi=lambda r: poly(np.asarray(r, dtype=float)),
        dphi=lambda r: d1(np.asarray(r, dtype=float)),
        ddphi=lambda r: d2(np.asarray(r, dtype=float)),
        taylor=(coeffs.get(3, 0.0), coeffs.get(5, 0.0)),
        r_max=r_max,
    )


BUILTIN_WARPS = {"flat": 0.0, "sphere": 1.0, "hyperbolic": -1.0}


def warp_by_name(name: str) -> WarpProfile:
    try:
        return space_form_warp(BUILTIN_WARPS[name])
    except KeyError:
        raise DomainError(f"unknown warp {name!r}; expected one of {sorted(BUILTIN_WARPS)}") from None


def curvature(warp: WarpProfile, r):
    """Gaussian curvature -phi''/phi of the warped metric."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r >= warp.r_max):
        raise DomainError("curvature needs 0 < r < r_max")
    val = -np.asarray(warp.ddphi(r)) / np.asarray(warp.phi(r))
    return float(val) if val.ndim == 0 else val


def check_curvature_lower_bound(warp: WarpProfile, R: float, K: float, grid_size: int = 1000):
    """(ok, min curvature) for curvature >= K - 1e-10 on a grid of [1e-6, R]."""
    if grid_size < 100:
        raise DomainError("grid_size must be >= 100")
    grid = np.linspace(1e-6, R, grid_size)
    kmin = float(np.min(curvature(warp, grid)))
    return kmin >= K - 1e-10, kmin


def frobenius_coefficients(warp: WarpProfile, m: int):
    """(alpha_2, alpha_4) of the regular solution r^m (1 + alpha_2 r^2 + alpha_4 r^4 + ...)."""
    c2, c4 = warp.taylor
    # phi^2 / r^2 = 1 + s2 r^2 + s4 r^4 + ...
    s2 = 2.0 * c2
    s4 = c2 * c2 + 2.0 * c4
    alpha2 = -m * s2 / 4.0
    alpha4 = -(alpha2 * s2 * (m + 3) + m * s4) / 8.0
    return alpha2, alpha4


@dataclass(frozen=True, eq=False)
class RadialMode:
    """Regular solution a_m of the mode ODE with a_m(R) = 1."""

    m: int
    R: float
    warp: WarpProfile
    alpha: tuple = (0.0, 0.0)
    log_kappa: float = 0.0
    spline: object = None
    dspline: object = None

    def _series(self, r):
        a2, a4 = self.alpha
        r2 = r * r
        S = 1.0 + a2 * r2 + a4 * r2 * r2
        dS = 2.0 * a2 * r + 4.0 * a4 * r2 * r
        return S, dS

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.R * (1 + 1e-12)):
            raise DomainError("mode evaluated outside [0, R]")
        return r

    def value(self, r):
        r = self._check(r)
        if self.m == 0:
            return np.ones_like(r)
        small = r < SERIES_SWITCH * self.R
        out = np.empty_like(r)
        if np.any(small):
            rs = r[small]
            S, _ = self._series(rs)
            out[small] = np.exp(self.log_kappa) * rs**self.m * S
        if np.any(~small):
            out[~small] = self.spline(r[~small])
        return out

    def derivative(self, r):
        r = self._check(r)
        if self.m == 0:
            return np.zeros_like(r)
        small = r < SERIES_SWITCH * self.R
        out = np.empty_like(r)
        if np.any(small):
            rs = r[small]
            S, dS = self._series(rs)
            out[small] = np.exp(self.log_kappa) * (self.m * rs ** (self.m - 1) * S + rs**self.m * dS)
        if np.any(~small):
            out[~small] = self.dspline(r[~small])
        return out

    def over_phi(self, r):
        """a_m / phi, regular at r = 0."""
        r = self._check(r)
        if self.m == 0:
            raise DomainError("a_0/phi is singular at 0 and never needed")
        small = r < SERIES_SWITCH * self.R
        out = np.empty_like(r)
        if np.any(small):
            rs = r[small]
            S, _ = self._series(rs)
            c2, c4 = self.warp.taylor
            rs2 = rs * rs
            out[small] = np.exp(self.log_kappa) * rs ** (self.m - 1) * S / (1.0 + c2 * rs2 + c4 * rs2 * rs2)
        if np.any(~small):
            rb = r[~small]
            out[~small] = self.spline(rb) / np.asarray(self.warp.phi(rb))
        return out

    __call__ = value


def solve_mode(warp: WarpProfile, R: float, m: int, grid_points: int = GRID_POINTS) -> RadialMode:
    """Integrate the regular solution of mode m from the series launch to R."""
    m = int(m)
    if m < 0:
        raise DomainError("mode index must be >= 0")
    if not (0 < R < warp.r_max):
        raise DomainError("R must lie below the first zero of phi")
    probe = np.linspace(R / grid_points, R, grid_points)
    if np.any(np.asarray(warp.phi(probe)) <= 0):
        raise DomainError("phi vanishes inside (0, R]")
    if m == 0:
        return RadialMode(0, R, warp)

    alpha = frobenius_coefficients(warp, m)
    r0 = LAUNCH_FRACTION * R
    # unknown scaled by r0^-m so the start value is O(1)
    S0 = 1.0 + alpha[0] * r0**2 + alpha[1] * r0**4
    dS0 = 2.0 * alpha[0] * r0 + 4.0 * alpha[1] * r0**3
    y0 = [S0, m / r0 * S0 + dS0]

    def rhs(r, y):
        ph = float(warp.phi(r))
        return [y[1], -float(warp.dphi(r)) / ph * y[1] + m * m / (ph * ph) * y[0]]

    grid = np.linspace(SERIES_SWITCH * R, R, grid_points)
    sol = solve_ivp(rhs, (r0, R), y0, method="RK45", t_eval=grid, rtol=1e-12, atol=1e-300)
    if not sol.success or sol.t.size != grid.size:
        raise IntegrationError(f"mode {m}: {sol.message}")
    a, da = sol.y
    AR = a[-1]
    if not (AR > 0 and np.all(np.isfinite(a))):
        raise IntegrationError(f"mode {m}: non-finite or non-positive solution")
    log_kappa = -m * math.log(r0) - math.log(AR)
    phi = np.asarray(warp.phi(grid))
    dda = -np.asarray(warp.dphi(grid)) / phi * da + m * m / (phi * phi) * a
    spline = CubicHermiteSpline(grid, a / AR, da / AR)
    dspline = CubicHermiteSpline(grid, da / AR, dda / AR)
    return RadialMode(m, R, warp, alpha, log_kappa, spline, dspline)


# ---------------------------------------------------------------------------
# Dirichlet problems


@dataclass(frozen=True, eq=False)
class DirichletProblem:
    """Positive trigonometric boundary data on the geodesic circle of radius R.

    ``modes`` maps m >= 0 to c_m; the boundary function is
    c_0 + sum_{m>0} 2 Re(c_m e^{i m theta}), i.e. c_{-m} = conj(c_m).
    """

    warp: WarpProfile
    R: float
    modes: dict
    mode_cap: int = DEFAULT_MODE_CAP

    def __post_init__(self):
        modes = {int(m): complex(c) for m, c in self.modes.items()}
        if not modes or any(m < 0 for m in modes):
            raise DomainError("modes must be a nonempty map from m >= 0")
        if max(modes) > self.mode_cap:
            raise DomainError(f"mode index exceeds cap M = {self.mode_cap}")
        if abs(modes.get(0, 0).imag) > 1e-14:
            raise DomainError("c_0 must be real")
        modes[0] = complex(modes.get(0, 0).real, 0.0)
        object.__setattr__(self, "modes", dict(sorted(modes.items())))
        if not (0 < self.R < self.warp.r_max):
            raise DomainError("R must lie below the first zero of phi")
        M = max(self.modes)
        theta = np.linspace(0.0, 2 * np.pi, max(4 * M, 64), endpoint=False)
        if np.min(self.boundary(theta)) <= 0:
            raise PositivityError("boundary data must be strictly positive")

    @classmethod
    def from_entries(cls, warp, R, entries, **kw):
        """From (m, Re c_m, Im c_m) triples; a negative m supplies conj(c_|m|)."""
        modes = {}
        for m, re, im in entries:
            m = int(m)
            c = complex(re, im)
            key, val = (m, c) if m >= 0 else (-m, c.conjugate())
            if key in modes and abs(modes[key] - val) > 1e-14:
                raise DomainError(f"inconsistent coefficients for modes +/-{key}")
            modes[key] = val
        return cls(warp, R, modes, **kw)

    @classmethod
    def from_trig(cls, warp, R, a0, cos=None, sin=None, **kw):
        """Boundary a0 + sum a_m cos(m theta) + b_m sin(m theta)."""
        modes = {0: complex(a0)}
        for m, a in (cos or {}).items():
            modes[m] = modes.get(m, 0) + a / 2.0
        for m, b in (sin or {}).items():
            modes[m] = modes.get(m, 0) - 1j * b / 2.0
        return cls(warp, R, modes, **kw)

    def boundary(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape, self.modes.get(0, 0).real)
        for m, c in self.modes.items():
            if m > 0:
                out = out + 2.0 * np.real(c * np.exp(1j * m * theta))
        return out

    def entries(self):
        return [(m, c.real, c.imag) for m, c in self.modes.items()]


@lru_cache(maxsize=256)
def _cached_mode(warp, R, m):
    return solve_mode(warp, R, m)


@dataclass(frozen=True, eq=False)
class SolvedHarmonic:
    problem: DirichletProblem
    radial: dict = field(default_factory=dict)

    @property
    def R(self):
        return self.problem.R

    def _parts(self, r, theta, need_grad):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        u = np.zeros(r.shape)
        ur = np.zeros(r.shape)
        ut_phi = np.zeros(r.shape)
        for m, c in self.problem.modes.items():
            if m == 0:
                u = u + c.real
                continue
            e = c * np.exp(1j * m * theta)
            mode = self.radial[m]
            u = u + 2.0 * np.real(e) * mode.value(r)
            if need_grad:
                ur = ur + 2.0 * np.real(e) * mode.derivative(r)
                ut_phi = ut_phi + 2.0 * np.real(1j * m * e) * mode.over_phi(r)
        return u, ur, ut_phi

    def eval(self, r, theta):
        return self._parts(r, theta, False)[0]

    def gradient(self, r, theta):
        """(u, du/dr, (1/phi) du/dtheta)."""
        return self._parts(r, theta, True)

    def grad_log_norm(self, r, theta):
        u, ur, ut = self._parts(r, theta, True)
        if np.any(u <= 0):
            raise PositivityError("solution is not positive at an evaluation point")
        return np.hypot(ur, ut) / u


def assemble_and_eval(problem: DirichletProblem, positivity_grid=(64, None)) -> SolvedHarmonic:
    """Solve every mode of the problem and assemble u = sum c_m a_|m| e^{i m theta}."""
    radial = {m: _cached_mode(problem.warp, problem.R, m) for m in problem.modes if m > 0}
    sol = SolvedHarmonic(problem, radial)
    n_r, n_t = positivity_grid
    n_t = n_t or max(4 * max(problem.modes), 64)
    rr, tt = np.meshgrid(np.linspace(0.0, problem.R, n_r), np.linspace(0, 2 * np.pi, n_t, endpoint=False))
    if np.min(sol.eval(rr, tt)) <= 0:
        raise PositivityError("assembled solution is not positive on the sample grid")
    return sol


# ---------------------------------------------------------------------------
# finite-difference oracle on the flat unit disk


@dataclass(frozen=True, eq=False)
class FDDiskSolution:
    r: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    residual: float
    iterations: int

    def nodes(self):
        rr, tt = np.meshgrid(self.r, self.theta, indexing="ij")
        return rr, tt


def fd_disk_oracle(boundary, resolution: int, n_theta=None, tol=1e-10, maxiter=5000) -> FDDiskSolution:
    """Five-point polar finite differences for the flat Laplacian on the unit disk.

    Radial nodes sit at r_i = (i - 1/2) h, i = 1..N, with h = 1/(N + 1/2), so
    the boundary r = 1 is node N+1 and the origin needs no special stencil.
    ``boundary`` is a callable of theta or an array of values at n_theta
    equispaced angles.  The system is solved by ILU-preconditioned BiCGSTAB
    to a relative residual ``tol``.
    """
    N = int(resolution)
    if N < 64:
        raise DomainError("resolution must be >= 64")
    if callable(boundary):
        n_theta = int(n_theta or 4 * N)
        theta = 2 * np.pi * np.arange(n_theta) / n_theta
        g = np.asarray(boundary(theta), dtype=float)
    else:
        g = np.asarray(boundary, dtype=float)
        n_theta = g.size
        theta = 2 * np.pi * np.arange(n_theta) / n_theta
    h = 1.0 / (N + 0.5)
    dt = 2 * np.pi / n_theta
    r = (np.arange(1, N + 1) - 0.5) * h
    r_out = r + h / 2
    r_in = r - h / 2

    east = r_out / (r * h * h)
    west = r_in / (r * h * h)
    ang = 1.0 / (r * r * dt * dt)
    idx = np.arange(N * n_theta).reshape(N, n_theta)

    rows, cols, vals = [], [], []

    def add(i_rows, i_cols, v):
        rows.append(i_rows.ravel())
        cols.append(i_cols.ravel())
        vals.append(np.broadcast_to(v, i_rows.shape).ravel())

    centre = -(east + west + 2 * ang)[:, None] * np.ones((1, n_theta))
    add(idx, idx, centre)
    add(idx, np.roll(idx, 1, axis=1), ang[:, None] * np.ones((1, n_theta)))
    add(idx, np.roll(idx, -1, axis=1), ang[:, None] * np.ones((1, n_theta)))
    add(idx[:-1], idx[1:], east[:-1, None] * np.ones((1, n_theta)))
    add(idx[1:], idx[:-1], west[1:, None] * np.ones((1, n_theta)))
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(N * n_theta,) * 2,
    )
    b = np.zeros((N, n_theta))
    b[-1] = -east[-1] * g
    # unit diagonal; the residual target then refers to O(1) equations
    inv_diag = sp.diags(-1.0 / centre.ravel())
    A = (inv_diag @ A).tocsr()
    b = inv_diag @ b.ravel()

    ilu = spla.spilu(A.tocsc(), drop_tol=1e-6, fill_factor=20)
    M = spla.LinearOperator(A.shape, ilu.solve)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.bicgstab(A, b, x0=np.full(b.shape, float(np.mean(g))), rtol=tol * 1e-2,
                            atol=0.0, maxiter=maxiter, M=M, callback=cb)
    res = float(np.linalg.norm(A @ x - b) / np.linalg.norm(b))
    if info != 0 and res > tol:
        raise ConvergenceError(f"BiCGSTAB stopped after {count[0]} iterations, residual {res:.3e}")
    if res > tol:
        raise ConvergenceError(f"residual {res:.3e} above target {tol:.1e}")
    return FDDiskSolution(r, theta, x.reshape(N, n_theta), res, count[0])
