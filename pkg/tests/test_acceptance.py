"""Exit criteria, one test each; a PASS/FAIL line per criterion is printed at the end of the run."""

import math
import time

import numpy as np
import pytest

from graphbiharmonic.cli import main
from graphbiharmonic.constants import (
    compute_constants,
    dual_norm_f,
    embedding_constant,
    epsilon_gap,
    first_eigenpair,
    lambda1,
)
from graphbiharmonic.functional import ProblemParams, a_priori_slack, critical_point_identity_gap, energy, gradient
from graphbiharmonic.graph import boundary_of
from graphbiharmonic.operators import assemble_form, gradient_form_at, integral, laplacian_at, norm_H
from graphbiharmonic.report import run_sweep
from graphbiharmonic.solvers import SolverConfig, two_solutions

from conftest import DATA, path_graph, random_instance, star_graph
from oracles import a_priori_radius, grid_newton_critical_points, scalar_roots

TOL = 1e-8


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


@pytest.mark.acceptance("AC1 operator correctness on P3, P5, 3-star (rel 1e-14, < 1 s)")
def test_ac1_operators():
    t0 = time.perf_counter()
    g3 = path_graph(3)
    d3 = boundary_of(g3, ["b"])
    one = np.array([1.0])
    cases = [
        (laplacian_at(g3, d3, one, "b"), -2.0),
        (laplacian_at(g3, d3, one, "a"), 1.0),
        (gradient_form_at(g3, d3, one, one, "b"), 1.0),
        (gradient_form_at(g3, d3, one, one, "a"), 0.5),
    ]
    gs = star_graph(3)
    ds = boundary_of(gs, ["x"])
    cases.append((laplacian_at(gs, ds, one, "x"), -3.0))
    g5 = path_graph(5)
    d5 = boundary_of(g5, ["b", "c", "d"])
    cases.append((integral(g5, [1, 1, 1], d5.interior), 3.0))
    g5w = path_graph(5, mu={"b": 2.0})
    cases.append((integral(g5w, [1, 1, 1], ["b", "c", "d"]), 4.0))
    u = np.array([0.3, -1.2, 2.0])
    # hand: Delta u(c) = u_b + u_d - 2 u_c
    cases.append((laplacian_at(g5, d5, u, "c"), 0.3 + 2.0 + 2.4))
    for got, want in cases:
        assert _rel(got, want) <= 1e-14
    assert gradient_form_at(g3, d3, one, np.zeros(1), "b") == 0
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.acceptance("AC2 form integrity on 50 random graphs (sym 1e-12, PD, quadratic form rel 1e-12)")
def test_ac2_form_integrity():
    rng = np.random.default_rng(2002)
    for _ in range(50):
        g, d, form = random_instance(rng)
        B = form.B
        assert np.max(np.abs(B - B.T)) <= 1e-12 * np.max(np.abs(B))
        assert np.linalg.eigvalsh(B).min() > 0
        for u in rng.standard_normal((100, d.n)):
            pointwise = sum(g.mu[x] * laplacian_at(g, d, u, x) ** 2 for x in d.effective)
            assert _rel(u @ B @ u, pointwise) <= 1e-12


@pytest.mark.acceptance("AC3 spectral: lambda1 = 6 (P3), 12 (3-star); no Rayleigh quotient below lambda1(1-1e-9)")
def test_ac3_spectral():
    g3 = path_graph(3)
    assert _rel(lambda1(assemble_form(g3, boundary_of(g3, ["b"]))), 6.0) <= 1e-12
    gs = star_graph(3)
    assert _rel(lambda1(assemble_form(gs, boundary_of(gs, ["x"]))), 12.0) <= 1e-12
    rng = np.random.default_rng(3003)
    for _ in range(10):
        _, d, form = random_instance(rng)
        lam1 = lambda1(form)
        U = rng.standard_normal((10_000, d.n))
        q = np.einsum("ij,jk,ik->i", U, form.B, U) / ((U * U) @ form.M_int)
        assert q.min() >= lam1 * (1 - 1e-9)


@pytest.mark.acceptance("AC4 gradient vs central differences (rel 1e-6 at step 1e-5, improving with refinement)")
def test_ac4_gradient_check():
    rng = np.random.default_rng(4004)
    for _ in range(10):
        _, d, form = random_instance(rng)
        pr = ProblemParams(0.5 * lambda1(form), float(rng.uniform(2.5, 5)), 0.2, rng.standard_normal(d.n))
        for _ in range(20):
            u, h = rng.standard_normal((2, d.n))
            an = gradient(form, pr, u) @ h
            errs, floors = [], []
            for delta in (1e-3, 1e-4, 1e-5):
                jp, jm = energy(form, pr, u + delta * h), energy(form, pr, u - delta * h)
                fd = (jp - jm) / (2 * delta)
                scale = max(abs(an), 1e-12)
                errs.append(abs(fd - an) / scale)
                # rounding in the two energy evaluations, relative to the directional derivative
                floors.append(64 * np.finfo(float).eps * max(abs(jp), abs(jm), 1.0) / (delta * scale))
            assert errs[2] <= 1e-6
            # truncation error shrinks until it meets the rounding floor
            for k in (1, 2):
                assert errs[k] <= max(errs[k - 1], floors[k])


@pytest.mark.acceptance("AC5 constants: C2 = 1/sqrt(lambda1) (1e-8), ||1||_H' = sqrt(1/6) on P3, eps1 > 0 and g >= 0 below it")
def test_ac5_constants():
    g3 = path_graph(3)
    f3 = assemble_form(g3, boundary_of(g3, ["b"]))
    assert _rel(dual_norm_f(f3, [1.0]), math.sqrt(1 / 6)) <= 1e-14
    rng = np.random.default_rng(5005)
    forms = [f3] + [random_instance(rng)[2] for _ in range(8)]
    for form in forms:
        lo, hi = embedding_constant(form, 2)
        target = 1 / math.sqrt(lambda1(form))
        assert _rel(lo, target) <= 1e-8 and _rel(hi, target) <= 1e-8
        p = float(rng.uniform(2.2, 5))
        f = rng.standard_normal(form.n)
        c = compute_constants(form, 0.5 * lambda1(form), p, f)
        assert c.eps1_hat > 0
        for eps in rng.uniform(0, c.eps1_hat, 100):
            if eps > 0:
                assert epsilon_gap(eps, c.tau, c.C_upper, c.f_dual_norm, p) >= 0


@pytest.mark.acceptance("AC6 two certified solutions on P3 (lam=1, p=4, eps=0.01) matching scalar roots to 1e-6, < 5 s")
def test_ac6_two_solutions_on_p3():
    t0 = time.perf_counter()
    g3 = path_graph(3)
    form = assemble_form(g3, boundary_of(g3, ["b"]))
    pr = ProblemParams.on(form, 1.0, 4.0, 0.01, [1.0])
    u0, uc, c = two_solutions(form, pr, SolverConfig(tol=TOL))
    elapsed = time.perf_counter() - t0
    roots = scalar_roots(6.0, 1.0, 4.0, 0.01, 1.0)
    assert abs(u0.u[0] - roots[1]) <= 1e-6
    assert abs(uc.u[0] - roots[2]) <= 1e-6
    assert u0.residual <= TOL and uc.residual <= TOL
    assert u0.energy < 0 < c.delta_eps(0.01) <= uc.energy
    assert u0.norm_H < math.sqrt(0.01)
    assert elapsed < 5.0


@pytest.mark.acceptance("AC7 oracle equivalence on 10 random n<=3 instances (1e-6 in H-norm), identity and a priori bound")
def test_ac7_oracle_equivalence():
    rng = np.random.default_rng(7007)
    for k in range(10):
        n_total = int(rng.integers(3, 8))
        _, d, form = random_instance(rng, n_total=n_total, n_interior=int(rng.integers(1, min(3, n_total - 1) + 1)))
        f = rng.uniform(-1.0, 1.5, d.n)
        if not np.any(np.abs(f) > 0.1):
            f[0] = 1.0
        p = float(rng.uniform(2.5, 5.0))
        lam = float(rng.uniform(0.2, 0.7)) * lambda1(form)
        c = compute_constants(form, lam, p, f, seed=k)
        eps = 0.5 * c.eps1_hat
        pr = ProblemParams.on(form, lam, p, eps, f)
        u0, uc, _ = two_solutions(form, pr, SolverConfig(tol=TOL, seed=k), constants=c)

        for cp in (u0, uc):
            assert cp.residual <= TOL
            assert critical_point_identity_gap(form, pr, cp.u) <= TOL * (1 + abs(cp.energy))
            scale = 1 + abs(cp.energy) + c.tau * cp.norm_H**2
            assert a_priori_slack(form, pr, cp.u, c.tau, c.f_dual_norm) >= -TOL * scale

        radius = a_priori_radius(c.tau, p, uc.info["initial_path_max"], eps, c.f_dual_norm)
        C_inf = math.sqrt(form.inverse_diagonal.max())
        R = 1.05 * C_inf * radius
        found = grid_newton_critical_points(form.B, form.M_int, lam, p, eps, f, R)
        for cp in (u0, uc):
            dist = min(norm_H(form, v - cp.u) for v in found)
            assert dist <= 1e-6, f"instance {k}: {cp.kind} not among {len(found)} oracle points"


@pytest.mark.acceptance("AC8 sweep on P5 (lam=lambda1/2, p=4, f=1): 20/20 log-spaced rows certified, 1.5*eps1 row no crash, < 60 s")
def test_ac8_regime_sweep():
    t0 = time.perf_counter()
    g5 = path_graph(5)
    form = assemble_form(g5, boundary_of(g5, ["b", "c", "d"]))
    f = np.ones(3)
    lam = 0.5 * lambda1(form)
    c = compute_constants(form, lam, 4.0, f)
    pr = ProblemParams.on(form, lam, 4.0, 0.0, f)
    grid = list(np.geomspace(1e-6, c.eps1_hat, 20)) + [1.5 * c.eps1_hat]
    rows, summary = run_sweep(form, pr, grid, SolverConfig(tol=TOL), c)
    assert len(rows) == 21
    assert all(r["certified"] and r["in_regime"] for r in rows[:20])
    assert not rows[20]["in_regime"]
    assert summary["largest_certified_eps"] >= c.eps1_hat * (1 - 1e-12)
    assert time.perf_counter() - t0 < 60.0


@pytest.mark.acceptance("AC9 determinism: identical configs and seeds give byte-identical reports")
def test_ac9_determinism(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        code = main(
            ["solve", "--graph", str(DATA / "p5.json"), "--lambda", "0.5*lambda1", "--p", "3.5",
             "--eps", "1e-4", "--f", "vertex:c:2", "--seed", "11", "--out", str(out)]
        )
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
