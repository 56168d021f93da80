# %% [markdown]
# # Gait descriptors against knee angle
#
# A coarse version of the full beta x kappa sweep.  The CLI does the fine
# 0.001 rad grid (`gaitlab sweep`); here a 0.1 rad grid is enough to see the
# trends: a bent knee shortens both the step period and the step length.

# %%
import numpy as np

from gaitlab import GaitParams, LinearizationConfig, PhysicalParams
from gaitlab.clred import steady_walk
from gaitlab.errors import GaitFailure

p = PhysicalParams()
betas = np.round(np.arange(0.1, 1.55, 0.1), 3)

# %%
for kappa in (0.0, -0.3, -0.5):
    print(f"\nkappa = {kappa}")
    print(f"{'beta':>6} {'T_inf':>9} {'thetadot1-':>10} {'length':>8} {'speed':>7}")
    thd = 0.8
    for beta in betas:
        try:
            s = steady_walk(p, GaitParams(beta=float(beta)), LinearizationConfig(kappa), thd)
        except GaitFailure as exc:
            print(f"{beta:6.2f}  {exc.kind}")
            thd = 0.8
            continue
        thd = s.thetadot1_minus  # continuation: start the next point from this fixed point
        print(f"{beta:6.2f} {s.period:9.5f} {s.thetadot1_minus:10.5f} {s.step_length:8.5f} {s.speed:7.4f}")
