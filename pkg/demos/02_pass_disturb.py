# %% [markdown]
# Pass disturb: how long an erased cell survives a pass bias.
#
# The switching kinetics are calibrated so the erased (HVT) cell flips within
# about 100 us at 2.3 V on its write gate and is untouched at 0.9 V. The same
# cell stressed through its pass gate keeps its state even at 15 V.

# %%
import numpy as np

from fenand import cell as C
from fenand import nand_string as S

device = C.default_device()
hvt = device.make_cell("HVT", seed=0)
print(f"memory window {device.memory_window:.3f} V, HVT VTH {hvt.vth_front:.3f} V")

# %% Time to half-window flip on the write gate
for v in (0.9, 1.9, 2.1, 2.3, 2.5):
    t = C.flip_time(hvt, v, 0.0, 10.0)
    print(f"V_PASS {v:.1f} V -> flip after {t:.3g} s")

# %% A dwell-time grid, write gate versus pass gate
dwell = [1e-6, 1e-4, 1e-2, 1.0]
print("dwell [s]      ", "  ".join(f"{t:8.0e}" for t in dwell))
for port, volts in (("front", (1.9, 2.3)), ("back", (5.0, 15.0))):
    for v in volts:
        shifts = [C.pass_stress(hvt, port, v, t)[1] for t in dwell]
        print(f"{port:5s} {v:5.1f} V    ", "  ".join(f"{dv:+8.3f}" for dv in shifts))

# %% The same experiment with the victim inside a three-cell string
string = S.make_string(device, ["LVT", "HVT", "LVT"], seed=0)
wl = S.pass_disturb_experiment(string, 1, [0.9, 2.3], dwell, "WL")
pg = S.pass_disturb_experiment(string, 1, [15.0], dwell, "PG")
print("string, WL 2.3 V:", np.round(wl.dvth[1], 3))
print("string, PG 15 V: ", np.round(pg.dvth[0], 3))
