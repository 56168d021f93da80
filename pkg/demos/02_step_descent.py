# %% [markdown]
# # Walking down a 2 cm step
#
# The ground drops 2 cm at impact 10.  A shorter settling time for that one
# step (T'_set) lets the swing leg finish before the foot reaches the lower
# ground; too short and the next step fails instead.  Every verdict here
# comes from the closed-form step map, no integration.

# %%
from gaitlab import GaitParams, LinearizationConfig, PhysicalParams, TerrainProfile
from gaitlab.clred import walkability

p = PhysicalParams()
gait = GaitParams(beta=0.7)
lin = LinearizationConfig(kappa=-0.5)
terrain = TerrainProfile.single_step(10, -0.02)

# %%
for T_prime in (0.70, 0.65, 0.60, 0.55, 0.50, 0.45, 0.40):
    res = walkability(p, gait, lin, 0.8, terrain=terrain, schedule={10: T_prime}, n_steps=30)
    if res.walkable:
        periods = ", ".join(f"{r.period:.3f}" for r in res.records[9:13])
        print(f"T'_set = {T_prime:.2f}: walkable   T_9..T_12 = {periods}")
    else:
        print(f"T'_set = {T_prime:.2f}: fails at step {res.failure_step} ({res.failure_kind})")
