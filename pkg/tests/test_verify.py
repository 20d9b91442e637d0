import csv
import json

import numpy as np
import pytest

from sharpcy import bounds
from sharpcy.errors import DomainError
from sharpcy.verify import (
    Geometry,
    Sampling,
    VerificationReport,
    VerificationTask,
    build_function,
    emit_report,
    report_json,
    run_task,
    sphere_directions,
    task_rngs,
    worst_index,
)


def task(kind, K=0.0, n=2, R=1.0, function=None, seed=0, count=2000, **kw):
    return VerificationTask(
        kind=kind,
        geometry=Geometry(K, n, R),
        function=function or {"type": "random_mixture", "poles": 5},
        sampling=Sampling(seed=seed, count=count, radii=kw.pop("radii", 10)),
        **kw,
    )


class TestBoundCheck:
    def test_flat_mixture_seed_42(self):
        rep = run_task(task("bounds", seed=42, count=10_000))
        assert rep.passed and rep.max_violation <= 1e-9
        assert rep.sampling == {"seed": 42, "count": 10_000}
        assert rep.details["bound"] == "euclid"

    def test_sphere_n3_conformal(self):
        rep = run_task(task("bounds", K=1.0, n=3, bound="conformal"))
        assert rep.passed
        assert rep.geometry == {"kind": "sphere_stereo", "K": 1.0, "n": 3, "R": 1.0}

    def test_kernel_on_pole_radius_attains_bound(self):
        # directions restricted to the pole: observed = bound to 1e-10
        fn_task = task("bounds", n=3, function={"type": "kernel", "direction": [0, 0, 1]})
        fn = build_function(fn_task, None)
        r = np.linspace(0, 0.99, 200)
        d = np.tile([0.0, 0.0, 1.0], (200, 1))
        obs = fn.grad_rd(r, d)
        assert np.max(np.abs(obs - bounds.bound_euclid(3, 1.0, r)) / bounds.bound_euclid(3, 1.0, r)) <= 1e-10

    def test_detects_violation_of_a_too_small_bound(self, monkeypatch):
        real = bounds.evaluate_bound
        monkeypatch.setattr(bounds, "evaluate_bound", lambda *a: 0.9 * np.asarray(real(*a)))
        rep = run_task(task("bounds", n=3, function={"type": "kernel"}))
        assert not rep.passed
        # observed <= bound, so the violation against 0.9 * bound is at most 1/0.9 - 1
        assert 0.05 < rep.max_violation <= 1 / 0.9 - 1 + 1e-12

    def test_surface_bound_needs_a_surface(self):
        with pytest.raises(DomainError):
            run_task(task("bounds", n=3, bound="surface2d"))

    def test_curves(self):
        rep = run_task(task("bounds", radii=7))
        assert len(rep.curves) == 7
        for row in rep.curves:
            assert row["observed_min"] <= row["observed_max"] <= row["bound"]

    def test_tolerance_override(self):
        rep = run_task(task("bounds", tol=-1.0))
        assert not rep.passed

    def test_worst_point_reproduces_violation(self):
        rep = run_task(task("bounds", n=3, seed=5))
        fn = build_function(task("bounds", n=3, seed=5), task_rngs(5)[0])
        y = np.asarray(rep.worst_point)
        obs = fn.source.grad_log_norm(y[None, :], False)[0]
        bnd = bounds.bound_euclid(3, 1.0, rep.details["worst_r"])
        assert abs((obs - bnd) / bnd - rep.max_violation) <= 1e-14

    def test_warp_function(self):
        fn = {"type": "warp", "warp": "poly:3=-0.05", "boundary": [[0, 1.0, 0], [1, 0.3, 0], [2, 0, 0.2]]}
        rep = run_task(task("bounds", function=fn, bound="surface2d"))
        assert rep.passed
        assert rep.details["tol"] == 1e-4
        assert rep.geometry["kind"] == "warp:poly:3=-0.05"

    def test_warp_curvature_hypothesis_enforced(self):
        fn = {"type": "warp", "warp": "sphere", "boundary": [[0, 1.0, 0]]}
        with pytest.raises(DomainError):
            run_task(task("bounds", K=1.5, function=fn, bound="surface2d"))

    def test_incompatible_bound(self):
        with pytest.raises(DomainError):
            run_task(task("bounds", K=1.0, n=3, bound="manifold"))
        with pytest.raises(DomainError):
            run_task(task("bounds", K=1.0, n=3, bound="euclid"))
        with pytest.raises(DomainError):
            run_task(task("bounds", n=3, bound="surface2d", function={"type": "constant"}, K=1.0))

    def test_mixture_document(self):
        doc = {"n": 2, "R": 1.0, "terms": [{"lambda": 1, "pole": [1, 0]}, {"lambda": 2, "pole": [0, -1]}]}
        rep = run_task(task("bounds", function={"type": "mixture", "mixture": doc}))
        assert rep.passed
        with pytest.raises(DomainError):
            run_task(task("bounds", R=2.0, function={"type": "mixture", "mixture": doc}))

    def test_unknown_function(self):
        with pytest.raises(DomainError):
            run_task(task("bounds", function={"type": "spline"}))


class TestEquality:
    def test_single_kernel(self):
        rep = run_task(task("equality", n=3, function={"type": "kernel", "direction": [1, 1, 0]}))
        d = rep.details
        assert rep.passed
        assert d["segment_max_gap"] <= 1e-10
        assert d["off_segment_min_margin"] >= 1e-3
        assert d["fit_deviation"] <= 1e-12
        assert np.allclose(d["pole_direction"], np.array([1, 1, 0]) / np.sqrt(2))

    def test_two_pole_mixture(self):
        fn = {"type": "mixture", "mixture": {"n": 3, "R": 1.0, "terms": [
            {"lambda": 1, "pole": [1, 0, 0]}, {"lambda": 1, "pole": [-1, 0, 0]}]}}
        rep = run_task(task("equality", n=3, function=fn))
        assert not rep.passed
        assert not rep.details["equality_on_segment"]
        assert rep.details["fit_deviation"] > 0.01

    def test_sphere_kernel_plane(self):
        rep = run_task(task("equality", K=1.0, n=2, function={"type": "kernel"}))
        assert rep.passed and rep.details["segment_max_gap"] <= 1e-10

    def test_planar_kernel_is_tight_everywhere(self):
        # ln P is a Busemann function of the hyperbolic disk; its gradient
        # attains 2R/(R^2 - |x|^2) at every point, not only on the segment
        fn = build_function(task("bounds", function={"type": "kernel"}), None)
        rng = np.random.default_rng(0)
        r = rng.uniform(0, 0.99, 500)
        t = rng.uniform(0, 2 * np.pi, 500)
        d = np.stack([np.cos(t), np.sin(t)], axis=1)
        assert np.allclose(fn.grad_rd(r, d), bounds.bound_euclid(2, 1.0, r), rtol=1e-12)

    def test_needs_kernel_family(self):
        with pytest.raises(DomainError):
            run_task(task("equality", function={"type": "constant"}))


class TestMonotonicity:
    def test_constant(self):
        rep = run_task(task("monotonicity", function={"type": "constant"}))
        assert rep.passed
        sM = [c["observed_max"] for c in rep.curves]
        sm = [c["observed_min"] for c in rep.curves]
        assert np.all(np.diff(sM) < 0) and np.all(np.diff(sm) > 0)
        assert len(rep.curves) == 50

    def test_flat_kernel(self):
        assert run_task(task("monotonicity", function={"type": "kernel"})).passed

    def test_hyperbolic_mixture(self):
        assert run_task(task("monotonicity", K=-1.0, R=1.5)).passed

    def test_conformal_solution_is_rejected(self):
        with pytest.raises(DomainError):
            run_task(task("monotonicity", K=-1.0, n=3))


class TestHarnack:
    def test_flat_mixtures(self):
        for n, seed in ((2, 1), (3, 2), (4, 3)):
            rep = run_task(task("harnack", n=n, seed=seed, count=10_000))
            assert rep.passed

    def test_centre_is_tight(self):
        rep = run_task(task("harnack", count=10))
        # the first sample is the centre itself, where both envelopes are equalities
        assert rep.max_violation == 0.0

    def test_curvature(self):
        assert run_task(task("harnack", K=1.0, R=1.0)).passed
        assert run_task(task("harnack", K=-1.0, R=2.0)).passed


class TestBochner:
    def test_affine_equality_case(self):
        rep = run_task(task("bochner", n=3, function={"type": "affine", "offset": 2.0, "slope": [1, 0, 0]}, count=500))
        assert rep.passed
        assert rep.details["max_abs_relative_gap"] <= 1e-6

    def test_affine_hand_computation(self):
        # Q = (2 + x1)^-2, so Lap Q = 6 u^-4 and grad Q = -2 u^-3 e_1
        x1 = 0.3
        u = 2 + x1
        Q = u**-2
        dQ = -2 * u**-3
        d2Q = 6 * u**-4
        n = 3
        lhs = Q * d2Q - n / (2 * (n - 1)) * dQ**2
        rhs = 2 / (n - 1) * Q**3 - 2 * (n - 2) / (n - 1) * Q * dQ * (1 / u)
        assert lhs == pytest.approx(rhs, rel=1e-14)

    def test_kernel(self):
        rep = run_task(task("bochner", n=3, function={"type": "kernel"}, count=1000))
        assert rep.passed and rep.max_violation <= 1e-5

    def test_constant_all_terms_vanish(self):
        rep = run_task(task("bochner", n=3, function={"type": "affine", "offset": 1.0, "slope": [0, 0, 0]}, count=50))
        assert rep.max_violation == 0.0

    def test_curved_geometry_rejected(self):
        with pytest.raises(DomainError):
            run_task(task("bochner", K=1.0, n=3))


def test_barrier_task():
    rep = run_task(task("barrier"))
    assert rep.passed
    names = {c["name"] for c in rep.details["components"]}
    assert names == {"barrier_residual_2d", "barrier_chain_slack", "optimal_nu_argmin", "optimal_nu_minimum"}


@pytest.mark.slow
def test_solver_cross_task():
    rep = run_task(task("solve-cross"))
    assert rep.passed, rep.details


class TestReduction:
    def test_tie_break(self):
        v = np.array([1.0, 3.0, 3.0, 2.0, 3.0])
        pts = np.array([[0, 0], [0.5, 0.1], [0.2, 0.9], [0, 0], [0.2, 0.3]])
        assert worst_index(v, pts) == 4

    def test_nan_counts_as_worst(self):
        assert worst_index(np.array([0.0, np.nan, 1.0]), np.zeros((3, 2))) == 1

    def test_parallel_equals_serial(self):
        serial = run_task(task("bounds", n=3, count=5000, seed=9))
        parallel = run_task(task("bounds", n=3, count=5000, seed=9, workers=4))
        assert serial.max_violation == parallel.max_violation
        assert serial.worst_point == parallel.worst_point

    def test_directions(self):
        for n, count in ((2, 720), (3, 2048), (4, 2048)):
            d = sphere_directions(n)
            assert d.shape == (count, n)
            assert np.allclose(np.linalg.norm(d, axis=1), 1.0)


class TestReports:
    def test_determinism(self):
        a = report_json(run_task(task("bounds", n=3, seed=11)), include_wall_time=False)
        b = report_json(run_task(task("bounds", n=3, seed=11)), include_wall_time=False)
        assert a == b
        c = report_json(run_task(task("bounds", n=3, seed=12)), include_wall_time=False)
        assert a != c

    def test_schema(self, tmp_path):
        rep = run_task(task("harnack", count=100))
        path = tmp_path / "r.json"
        emit_report(rep, "json", path)
        data = json.loads(path.read_text())
        assert set(data) == {"task", "geometry", "sampling", "result", "wall_ms"}
        assert set(data["geometry"]) == {"kind", "K", "n", "R"}
        assert set(data["sampling"]) == {"seed", "count"}
        assert {"pass", "max_violation", "worst_point", "curves"} <= set(data["result"])
        assert set(data["result"]["curves"][0]) >= {"r", "bound", "observed_max", "observed_min"}

    def test_round_trip(self, tmp_path):
        rep = run_task(task("bounds", count=100))
        path = tmp_path / "r.json"
        emit_report(rep, "json", path)
        back = VerificationReport.from_dict(json.loads(path.read_text()))
        assert back.to_dict() == json.loads(report_json(rep))

    def test_empty_curves(self, tmp_path):
        rep = run_task(task("barrier"))
        path = tmp_path / "b.json"
        emit_report(rep, "json", path)
        assert json.loads(path.read_text())["result"]["curves"] == []

    def test_csv_rows(self, tmp_path):
        rep = run_task(task("bounds", count=100, radii=13))
        path = tmp_path / "c.csv"
        emit_report(rep, "csv", path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["r", "bound", "observed_max", "observed_min"]
        assert len(rows) == 13 + 1

    def test_io_error_has_path(self, tmp_path):
        rep = run_task(task("barrier"))
        bad = tmp_path / "missing" / "r.json"
        with pytest.raises(OSError, match="missing"):
            emit_report(rep, "json", bad)

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report(run_task(task("barrier")), "xml", tmp_path / "r.xml")
