# %% [markdown]
# # Steady walking, two ways
#
# Walk the kneed biped with the nonlinear model (fixed-step RK4 with
# constraint projection), then ask the closed-form CLRed step map the same
# question.  Run with `python demos/01_steady_gait.py`.

# %%
import time

from gaitlab import (GaitParams, LinearizationConfig, PhysicalParams, SimConfig,
                     simulate_gait, steady_descriptors)
from gaitlab import biped6dof as bd
from gaitlab.clred import steady_walk, walkability

p = PhysicalParams()
gait = GaitParams(beta=0.5)
print(f"xi = {bd.xi_coefficient(p, gait):.6f}   impact theta2 = {bd.impact_theta2(p, gait):.6f} rad")

# %% Nonlinear model: 30 steps from thetadot1- = 0.8 rad/s
t0 = time.perf_counter()
run = simulate_gait(p, gait, SimConfig(), 0.8, 30)
t_nl = time.perf_counter() - t0
for rec in run.records[:3] + run.records[-2:]:
    print(f"step {rec.index:2d}  T = {rec.period:.6f} s  thetadot1- = {rec.thetadot1_minus:.6f}"
          f"  clearance = {rec.min_clearance * 1e3:.1f} mm  min Fz = {rec.min_Fz:.1f} N")
nl = steady_descriptors(run.records, (20, 30))

# %% CLRed: the same 30 steps, then the 1000-step steady state for two expansion points
t0 = time.perf_counter()
res = walkability(p, gait, LinearizationConfig(-0.5), 0.8, n_steps=30)
t_cl = time.perf_counter() - t0
print(f"\nCLRed walkable: {res.walkable}  ({t_cl * 1e3:.1f} ms vs {t_nl:.1f} s nonlinear)")

print(f"\n{'model':>14}  {'T_inf':>9}  {'thetadot1-':>10}  {'length':>8}")
print(f"{'nonlinear':>14}  {nl.period:9.5f}  {nl.thetadot1_minus:10.5f}  {nl.step_length:8.5f}")
for kappa in (0.0, -0.5):
    s = steady_walk(p, gait, LinearizationConfig(kappa), 0.8)
    print(f"{'CLRed k=' + str(kappa):>14}  {s.period:9.5f}  {s.thetadot1_minus:10.5f}  {s.step_length:8.5f}")
