# %% [markdown]
# Page programming: the V_PASS window.
#
# In a single-port array V_PASS has to be high enough to boost inhibited
# strings (avoiding program disturb) yet low enough not to flip unselected
# cells on the selected string (pass disturb). A dual-port array passes
# through the pass gate, so the pass-disturb side disappears.

# %%
import numpy as np

from fenand import cell as C
from fenand import protocols as P

device = C.default_device()
scheme = P.InhibitScheme()

print(f"boosted channel at V_PASS = 2 V: {P.boosted_channel_potential(scheme, 2.0):.2f} V")

# %% Disturb versus V_PASS for both array types
for mode in ("single", "dual"):
    sweep = P.disturb_tradeoff_sweep(device, scheme, (1.0, 3.0), 11, mode)
    print(f"\n{mode}-port window below {sweep.threshold * 1e3:.0f} mV: {sweep.window}")
    for v, a, b in zip(sweep.v_pass, sweep.dvth_pass, sweep.dvth_prog):
        print(f"  V_PASS {v:.1f} V  pass {a:6.3f} V  program {b:6.3f} V")

# %% Threshold distribution across a small population, dual-port pass event
condition = P.StressCondition.pass_disturb(scheme, 4.0, "dual")
dist = P.vth_distribution(device, 200, P.Variability(0.03, 0.03), condition, seed=0)
print("\nquantile  pre [V]  post [V]")
for q in (0.1, 0.5, 0.9):
    k = int(q * len(dist.vth_pre))
    print(f"  {q:.1f}     {dist.vth_pre[k]:.4f}   {dist.vth_post[k]:.4f}")
print(f"largest quantile shift {np.max(np.abs(dist.vth_post - dist.vth_pre)) * 1e3:.3f} mV")
