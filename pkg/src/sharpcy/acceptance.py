"""The eleven acceptance criteria, runnable from the CLI or from pytest.

Each criterion returns a :class:`CriterionResult` whose ``measured`` value is
compared against ``threshold`` (``measured <= threshold`` passes) together
with any extra conditions folded into ``passed``.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .harmonic import conformal_laplacian_residual
from .revolution import check_curvature_lower_bound
from .verify import (
    Geometry,
    Sampling,
    VerificationTask,
    barrier_components,
    bochner_terms,
    build_function,
    parse_warp,
    report_json,
    run_task,
    task_rngs,
    solver_components,
)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: float
    threshold: float
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.number:2d} {self.name}: measured={self.measured:.3e} "
                f"threshold={self.threshold:.1e} ({self.seconds:.1f}s)")


def _timed(number, name, threshold, body, time_limit=None):
    started = time.perf_counter()
    measured, ok, details = body()
    seconds = time.perf_counter() - started
    if time_limit is not None:
        details["time_limit_s"] = time_limit
        ok = ok and seconds <= time_limit
    return CriterionResult(number, name, bool(ok and measured <= threshold), float(measured),
                           threshold, seconds, details)


def _mixture_tasks(count, geometries, seed0, samples=10_000, bound=None):
    rng = np.random.default_rng(seed0)
    tasks = []
    for i in range(count):
        K, n, R = geometries[i % len(geometries)]
        poles = int(rng.integers(1, 9))
        tasks.append(VerificationTask(
            kind="bounds",
            geometry=Geometry(K, n, R),
            function={"type": "random_mixture", "poles": poles},
            sampling=Sampling(seed=seed0 + i, count=samples),
            bound=bound,
        ))
    return tasks


def criterion_1():
    def body():
        tasks = _mixture_tasks(20, [(0.0, 2, 1.0), (0.0, 3, 1.0), (0.0, 4, 2.0)], 1000, bound="euclid")
        worst = max(run_task(t).max_violation for t in tasks)
        return worst, True, {"functions": len(tasks)}

    return _timed(1, "Euclidean bound validity on 20 Poisson mixtures", 1e-9, body, time_limit=30.0)


def criterion_2():
    def body():
        rep = run_task(VerificationTask(
            kind="equality", geometry=Geometry(0.0, 3, 1.0),
            function={"type": "kernel", "direction": [0.0, 0.6, 0.8]},
            sampling=Sampling(seed=7),
        ))
        d = rep.details
        ok = d["off_segment_strict"] and d["fit_deviation"] <= 1e-12
        return d["segment_max_gap"], ok, {
            "off_segment_min_margin": d["off_segment_min_margin"], "fit_deviation": d["fit_deviation"]}

    return _timed(2, "rigidity: equality on the pole segment, strict elsewhere", 1e-10, body)


def criterion_3(residual_points=200):
    def body():
        geoms = [(1.0, 2, 1.0), (1.0, 3, 1.0), (-1.0, 2, 2.0), (-1.0, 3, 2.0)]
        tasks = _mixture_tasks(8, geoms, 3000, bound="conformal")
        worst_bound = -np.inf
        worst_res = 0.0
        for t in tasks:
            worst_bound = max(worst_bound, run_task(t).max_violation)
            fn = build_function(t, task_rngs(t.sampling.seed)[0])
            sol = fn.source
            rng = np.random.default_rng(t.sampling.seed + 1)
            r = rng.uniform(0, 0.9 * t.geometry.R, residual_points)
            d = rng.standard_normal((residual_points, fn.n))
            d /= np.linalg.norm(d, axis=1)[:, None]
            y = fn.coords(r, d)
            res, scale = conformal_laplacian_residual(sol.chart, sol.as_field(), y, 1e-3 * sol.chart_R,
                                                      richardson=True, return_scale=True)
            worst_res = max(worst_res, float(np.max(np.abs(res) / scale)))
        return worst_bound, worst_res <= 1e-5, {"max_residual_over_scale": worst_res}

    return _timed(3, "conformal bound on K = +-1 space forms", 1e-8, body)


def criterion_4(points=1000):
    def body():
        rng = np.random.default_rng(4)
        t = rng.uniform(0.0, 0.99, points)
        R = rng.uniform(0.1, 3.0, points)
        r = t * R
        errs = {}

        def rel(a, b):
            a, b = np.asarray(a), np.asarray(b)
            return float(np.max(np.abs(a - b) / np.abs(b)))

        errs["conformal_K0_vs_euclid"] = max(
            rel(bounds.bound_conformal(n, 0.0, R, r), bounds.bound_euclid(n, R, r)) for n in range(2, 7))
        e2 = []
        for K in (-2.0, -1.0, -0.3, 0.0, 0.5, 1.0):
            RK = R if K <= 0 else np.minimum(R, 0.95 * np.pi / np.sqrt(K))
            rK = t * RK
            e2.append(rel(bounds.bound_conformal(2, K, RK, rK), bounds.bound_2d(K, RK, rK)))
            e2.append(rel(bounds.bound_manifold(2, K, RK, rK), bounds.bound_2d(K, RK, rK)))
        errs["n2_reductions"] = max(e2)
        errs["bound_2d_K0_closed_form"] = rel(bounds.bound_2d(0.0, R, r), 2 * R / (R * R - r * r))
        return max(errs.values()), True, errs

    return _timed(4, "reduction identities between bounds", 1e-12, body)


def _components(comps, names):
    picked = [c for c in comps if c[0] in names]
    worst = max(e / tol for _, e, tol in picked)
    return worst, {name: {"error": e, "tol": tol} for name, e, tol in picked}


def criterion_5():
    def body():
        worst = 0.0
        for K in (-2.0, -1.0, 0.0, 1.0, 2.0):
            Rs = (0.5, 1.0, 2.0) if K > 0 else (0.5, 1.0, 3.0)
            for R in Rs:
                r = R * np.arange(1, 51) / 51
                worst = max(worst, float(np.max(np.abs(bounds.barrier_residual_2d(K, R, r)))))
        return worst, True, {}

    return _timed(5, "barrier ODE identity", 1e-10, body)


def criterion_6():
    def body():
        comps = barrier_components()
        worst, det = _components(comps, {"barrier_chain_slack", "optimal_nu_argmin", "optimal_nu_minimum"})
        return worst, True, det

    return _timed(6, "optimal nu and chain slack (normalised errors)", 1.0, body)


def criterion_7():
    def body():
        comps = solver_components()
        worst, det = _components(comps, {c[0] for c in comps})
        return worst, True, det

    return _timed(7, "mode solver cross-validation (normalised errors)", 1.0, body, time_limit=60.0)


FEJER = [(0, 1.001, 0.0)] + [(m, 1.0 - m / 17.0, 0.0) for m in range(1, 17)]
CURVED_WARPS = [("poly:3=-0.05", 0.0), ("poly:3=0.08333333333333333", -0.5)]


def criterion_8(samples=10_000):
    def body():
        worst = -np.inf
        kmins = {}
        for warp, K in CURVED_WARPS:
            ok, kmin = check_curvature_lower_bound(parse_warp(warp), 1.0, K)
            kmins[warp] = {"K": K, "curvature_min": kmin, "ok": bool(ok)}
            rep = run_task(VerificationTask(
                kind="bounds", geometry=Geometry(K, 2, 1.0),
                function={"type": "warp", "warp": warp, "boundary": FEJER},
                sampling=Sampling(seed=8, count=samples), bound="surface2d", tol=1e-4,
            ))
            worst = max(worst, rep.max_violation)
        return worst, all(v["ok"] for v in kmins.values()), kmins

    return _timed(8, "surface bound on non-constant-curvature warps", 1e-4, body)


def _cor_functions():
    out = [
        (Geometry(0.0, 2, 1.0), {"type": "constant"}),
        (Geometry(0.0, 2, 1.0), {"type": "kernel"}),
        (Geometry(0.0, 2, 1.0), {"type": "random_mixture", "poles": 4}),
        (Geometry(0.0, 3, 1.0), {"type": "random_mixture", "poles": 3}),
    ]
    for K, R in ((-1.0, 1.5), (1.0, 1.0)):
        out.append((Geometry(K, 2, R), {"type": "kernel", "direction": [0.0, 1.0]}))
        out.append((Geometry(K, 2, R), {"type": "random_mixture", "poles": 2}))
        out.append((Geometry(K, 2, R), {"type": "random_mixture", "poles": 6}))
    return out


def criterion_9(samples=10_000):
    def body():
        mono = -np.inf
        harn = -np.inf
        for i, (g, fn) in enumerate(_cor_functions()):
            s = Sampling(seed=900 + i, count=samples, radii=10)
            mono = max(mono, run_task(VerificationTask("monotonicity", g, fn, s)).max_violation)
            harn = max(harn, run_task(VerificationTask("harnack", g, fn, s)).max_violation)
        R = 1.0
        r = np.linspace(0.0, 0.99, 100)
        _, upper = bounds.harnack_envelope(2, 0.0, R, r)
        exp_err = float(np.max(np.abs(upper - (R + r) / (R - r)) / ((R + r) / (R - r))))
        ok = harn <= 1e-9 and exp_err <= 1e-12
        return mono, ok, {"harnack_max_violation": harn, "exponent_check_error": exp_err,
                          "functions": len(_cor_functions())}

    return _timed(9, "scaled extrema monotone and Harnack envelope", 1e-8, body)


def criterion_10(samples=1000):
    def body():
        g = Geometry(0.0, 3, 1.0)
        aff = build_function(VerificationTask("bochner", g, {"type": "affine", "offset": 2.0,
                                                            "slope": [1.0, 0.0, 0.0]}), None)
        rng = np.random.default_rng(10)
        r = rng.uniform(0, 0.9, samples)
        d = rng.standard_normal((samples, 3))
        d /= np.linalg.norm(d, axis=1)[:, None]
        gap, scale = bochner_terms(aff, aff.coords(r, d), 1e-3)
        eq_err = float(np.max(np.abs(gap) / scale))
        worst = -np.inf
        for i, direction in enumerate(([1.0, 0.0, 0.0], [0.0, -0.6, 0.8])):
            rep = run_task(VerificationTask("bochner", g, {"type": "kernel", "direction": direction},
                                            Sampling(seed=100 + i, count=samples)))
            worst = max(worst, rep.max_violation)
        return eq_err, worst <= 1e-5, {"kernel_max_violation": worst}

    return _timed(10, "Bochner inequality by finite differences", 1e-6, body)


def criterion_11():
    def body():
        task = _mixture_tasks(1, [(0.0, 3, 1.0)], 11)[0]
        a = report_json(run_task(task), include_wall_time=False)
        b = report_json(run_task(task), include_wall_time=False)
        task.workers = 4
        c = run_task(task)
        same = a == b and json.loads(a)["result"]["max_violation"] == c.max_violation
        return 0.0 if same else 1.0, True, {"serial_parallel_equal": same}

    return _timed(11, "deterministic reports", 0.0, body)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


def run_all(selected=None, echo=print):
    results = []
    for i, crit in enumerate(CRITERIA, start=1):
        if selected and i not in selected:
            continue
        res = crit()
        if echo:
            echo(res.line())
        results.append(res)
    return results
