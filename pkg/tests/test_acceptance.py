"""End-to-end acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (with the measured margin) that the
terminal summary prints after the run.
"""

import csv
import math
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from gaitlab import (GaitParams, LinearizationConfig, PhysicalParams, SimConfig, TerrainProfile,
                     build_state_space, simulate_gait, steady_descriptors)
from gaitlab import biped6dof as bd
from gaitlab.cli import cmd_bench, cmd_sweep
from gaitlab.clred import (ReducedState, S_REDUCED, V_REDUCTION, post_impact_vector,
                           propagate_controlled, propagate_fall, reduce, steady_walk, walkability)
from gaitlab.controller import compute_coeffs
from gaitlab.scenario import ScenarioConfig, SweepSpec

from test_biped6dof import com_height, impact_oracle, locked_posture
from test_clred import ode_rhs

RESULTS = {}


@contextmanager
def criterion(n, title):
    notes = []
    t0 = time.perf_counter()
    try:
        yield notes
    except BaseException as exc:
        RESULTS[n] = f"criterion {n:2d} FAIL  {title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        raise
    elapsed = time.perf_counter() - t0
    detail = "; ".join(notes + [f"{elapsed:.2f} s"])
    RESULTS[n] = f"criterion {n:2d} PASS  {title} ({detail})"


@pytest.fixture
def p():
    return PhysicalParams()


def test_c01_model_consistency(p):
    with criterion(1, "model consistency") as notes:
        rng = np.random.default_rng(1)
        t0 = time.perf_counter()
        h = 1e-6
        worst_skew = worst_grad = 0.0
        for _ in range(100):
            q = rng.uniform(-1, 1, 6)
            qd = rng.uniform(-2, 2, 6)
            M = bd.mass_matrix(p, q)
            assert np.array_equal(M, M.T) and np.linalg.eigvalsh(M).min() > 0
            Mdot = (bd.mass_matrix(p, q + h * qd) - bd.mass_matrix(p, q - h * qd)) / (2 * h)
            N = Mdot - 2 * bd.velocity_matrix(p, q, qd)
            worst_skew = max(worst_skew, np.abs(N + N.T).max())
            grad = np.array([p.m * p.g * (com_height(p, q + h * e) - com_height(p, q - h * e)) / (2 * h)
                             for e in np.eye(6)])
            worst_grad = max(worst_grad, np.abs(bd.gravity_vector(p, q) - grad).max())
        elapsed = time.perf_counter() - t0
        notes += [f"skew {worst_skew:.1e}", f"gradient {worst_grad:.1e}"]
        assert worst_skew <= 1e-6 and worst_grad <= 1e-6 and elapsed < 5


def test_c02_impact_oracle(p):
    with criterion(2, "impact oracle") as notes:
        t0 = time.perf_counter()
        worst = 0.0
        qd = np.array([0, 0, 1.0, 1.0, 1.0, 1.0])
        for alpha in np.linspace(0.0, math.pi / 4, 20):
            for beta in np.linspace(0.0, 1.0, 20):
                gait, q, _ = locked_posture(alpha, beta, p)
                n1, d1 = bd.xi_terms(p, gait)
                post = impact_oracle(p, q, qd)
                worst = max(worst, abs(n1 / d1 - post[4]))
                assert bd.kinetic_energy(p, q, post) <= bd.kinetic_energy(p, q, qd)
        elapsed = time.perf_counter() - t0
        notes.append(f"max |xi - oracle| {worst:.1e}")
        assert worst <= 1e-10 and elapsed < 5


def test_c03_quintic_identities():
    with criterion(3, "quintic identities") as notes:
        rng = np.random.default_rng(3)
        worst = 0.0
        P = np.polynomial.polynomial
        for _ in range(1000):
            alpha, xi = rng.uniform(0.05, 1.5), rng.uniform(0.3, 1.0)
            thd, T = rng.uniform(-3, 3), rng.uniform(0.2, 2.0)
            a = compute_coeffs(GaitParams(alpha=alpha, T_set=T), xi, thd).as_array()
            d1, d2 = P.polyder(a), P.polyder(a, 2)
            errs = [P.polyval(0, a) + alpha, P.polyval(0, d1) - (xi - 1) * thd, P.polyval(0, d2),
                    P.polyval(T, a) - alpha, T * P.polyval(T, d1), T**2 * P.polyval(T, d2)]
            scale = max(1.0, alpha, abs(thd))
            worst = max(worst, max(abs(e) for e in errs) / scale)
        notes.append(f"max scaled residual {worst:.1e}")
        assert worst <= 1e-12


def test_c04_reduction_equivalence(p):
    with criterion(4, "reduction equivalence") as notes:
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(100):
            gait = GaitParams(beta=rng.uniform(0.0, 1.2))
            Mbar, gbar = reduce(p, gait)
            rs = ReducedState(rng.uniform(-0.8, 0.8, 3), rng.uniform(-2, 2, 3))
            q, qd = rs.to_full(gait)
            u = rng.normal(size=3) * 5
            qdd, _ = bd.constrained_accel(p, q, qd, u)
            qdd_red = np.linalg.solve(Mbar, S_REDUCED @ u[1:] - gbar(rs.qbar[0]))
            worst = max(worst, np.abs(V_REDUCTION @ qdd_red - qdd).max())
        notes.append(f"max diff {worst:.1e}")
        assert worst <= 1e-9


def test_c05_closed_form_propagation(p):
    with criterion(5, "closed-form propagation") as notes:
        worst_c = worst_f = 0.0
        for beta, kappa, T in [(0.1, 0.0, 0.7), (0.5, -0.5, 0.7), (0.9, -0.3, 0.55),
                               (1.3, -0.6, 1.0), (0.7, -0.2, 0.45)]:
            gait = GaitParams(beta=beta, T_set=T)
            ls = build_state_space(p, gait, LinearizationConfig(kappa))
            thd = 0.8
            x0 = post_impact_vector(gait, ls.xi, bd.impact_theta2(p, gait), thd)
            sol = solve_ivp(ode_rhs(ls, gait, thd), (0, T), x0, method="DOP853", rtol=1e-13, atol=1e-13)
            xT = propagate_controlled(ls, x0, thd)
            worst_c = max(worst_c, np.abs(xT - sol.y[:, -1]).max())
            w2, b = ls.omega**2, ls.b1_scalar
            y0 = xT[[0, 3]]
            fall = solve_ivp(lambda t, y: [y[1], w2 * y[0] + b], (0, 0.5), y0, method="DOP853",
                             rtol=1e-13, atol=1e-14)
            worst_f = max(worst_f, np.abs(propagate_fall(ls, y0, 0.5) - fall.y[:, -1]).max())
        notes += [f"controlled {worst_c:.1e}", f"fall {worst_f:.1e}"]
        assert worst_c <= 1e-8 and worst_f <= 1e-8


def test_c06_steady_gait(p):
    with criterion(6, "steady gait reproduction") as notes:
        gait = GaitParams(beta=0.5)
        t0 = time.perf_counter()
        run = simulate_gait(p, gait, SimConfig(), 0.8, 30)
        t_nl = time.perf_counter() - t0
        assert run.completed and len(run.records) == 30
        tail = run.records[20:]
        spread = max(np.ptp([r.period for r in tail]), np.ptp([r.thetadot1_minus for r in tail]))
        nl = steady_descriptors(run.records, (20, 30))

        t0 = time.perf_counter()
        c05 = steady_walk(p, gait, LinearizationConfig(-0.5), 0.8)
        c00 = steady_walk(p, gait, LinearizationConfig(0.0), 0.8)
        t_cl = time.perf_counter() - t0
        rel = abs(c05.period - nl.period) / nl.period
        notes += [f"settled spread {spread:.1e}", f"T_nl {nl.period:.5f}", f"T_clred {c05.period:.5f}",
                  f"rel {rel:.2%}", f"nonlinear {t_nl:.1f} s", f"clred {t_cl * 1e3:.0f} ms"]
        assert spread < 1e-6
        assert rel <= 0.02
        assert c00.period < c05.period and c00.thetadot1_minus > c05.thetadot1_minus
        assert t_nl < 600 and t_cl < 1


def test_c07_sweep_trends(tmp_path):
    with criterion(7, "sweep trends") as notes:
        sweep = SweepSpec(beta_start=0.1, beta_stop=1.5, beta_step=0.1, kappas=(-0.5,),
                         nonlinear_step=0.1)
        cmd_sweep(ScenarioConfig(), tmp_path, sweep, workers=os.cpu_count() or 1)

        def table(name):
            with open(tmp_path / name, newline="") as fh:
                rows = list(csv.DictReader(fh))
            assert all(r["status"] == "ok" for r in rows)
            out = {}
            for r in rows:
                out.setdefault(r["model"], []).append(float(r["value"]))
            return {k: np.array(v) for k, v in out.items()}

        period, length = table("sweep_period.csv"), table("sweep_step_length.csv")
        assert len(period["nonlinear"]) == 15 and len(period["clred"]) == 15
        assert np.all(np.diff(period["nonlinear"]) < 0)
        assert np.all(np.diff(length["nonlinear"]) < 0)
        rel = np.abs(period["clred"] - period["nonlinear"]) / period["nonlinear"]
        notes.append(f"max rel T diff {rel.max():.2%}")
        assert rel.max() <= 0.03


def test_c08_step_descent_pattern(p):
    with criterion(8, "step-descent pattern") as notes:
        expected = {0.70: 10, 0.65: 10, 0.60: 10, 0.55: None, 0.50: None, 0.45: None, 0.40: 11}
        gait = GaitParams(beta=0.7)
        t0 = time.perf_counter()
        got = {}
        for T, fail_at in expected.items():
            res = walkability(p, gait, LinearizationConfig(-0.5), 0.8,
                              terrain=TerrainProfile({10: -0.02}), schedule={10: T}, n_steps=30)
            got[T] = res.failure_step
            if fail_at is not None:
                assert res.failure_kind == "control-incomplete"
        elapsed = time.perf_counter() - t0
        notes.append(" ".join(f"{T:.2f}:{'ok' if s is None else s}" for T, s in got.items()))
        assert got == expected and elapsed < 1


def test_c09_performance(tmp_path):
    with criterion(9, "performance") as notes:
        rep = cmd_bench(ScenarioConfig(), tmp_path)
        t_cl = rep["clred"]["wall_time_s"]
        notes += [f"nonlinear {rep['nonlinear']['wall_time_s']:.2f} s", f"clred {t_cl * 1e3:.2f} ms",
                  f"speedup {rep['speedup']:.0f}x"]
        assert rep["nonlinear"]["walkable"] and rep["clred"]["walkable"]
        assert rep["speedup"] >= 100 and t_cl < 0.05


def test_c10_robustness(p):
    with criterion(10, "robustness") as notes:
        gait = GaitParams(beta=0.1)
        cfg = SimConfig()
        run = simulate_gait(p, gait, cfg, 0.8, 10, keep_traces=True, t_max=5.0)
        assert run.completed and sum(r.period for r in run.records) >= 5.0
        drift, min_fz = 0.0, math.inf
        min_clear = math.inf
        for tr in run.traces:
            q, qd = tr.q, tr.qdot
            drift = max(drift, np.abs(q[:, :2] - q[0, :2]).max(), np.abs(q[:, 2] - q[:, 3] - gait.beta).max(),
                        np.abs(qd[:, :2]).max(), np.abs(qd[:, 2] - qd[:, 3]).max())
            min_fz = min(min_fz, tr.forces[:, 1].min())
            height = tr.zbar - q[0, 1]
            armed = np.argmax(height > cfg.arming_threshold)
            assert armed > 0
            min_clear = min(min_clear, height[armed:-1].min())
        notes += [f"drift {drift:.1e}", f"min Fz {min_fz:.2f} N", f"min clearance {min_clear:.1e} m"]
        assert drift <= 1e-6 and min_fz > 0 and min_clear > 0
