# %% [markdown]
# Reading and writing inside a NAND string.
#
# First a three-cell string: the middle cell is read with V_PASS on its
# neighbours, and the sensed threshold should not care what they store.
# Then an eight-WL vertical dual-port string goes through erase, read,
# program and read, driven by a piecewise-linear waveform.

# %%
import numpy as np

from fenand import cell as C
from fenand import electrostatics as E
from fenand import nand_string as S

device = C.default_device()
sweep = np.linspace(-1.0, 3.0, 401)

# %% Neighbour independence at V_PASS = 2 V
for target in ("HVT", "LVT"):
    for top in ("HVT", "LVT"):
        for bottom in ("HVT", "LVT"):
            s = S.make_string(device, [top, target, bottom], seed=0)
            r = S.read_target(s, 1, sweep, 2.0)
            print(f"{top}/{target}/{bottom}: sensed VTH {r.vth_sensed:+.4f} V")

# %% Too little V_PASS on erased neighbours starves the string
for v_pass in (0.8, 1.2, 2.0):
    r = S.read_target(S.make_string(device, ["HVT", "LVT", "HVT"], seed=0), 1, sweep, v_pass)
    print(f"V_PASS {v_pass} V: under-pass={r.under_pass}  I(3 V) = {r.curve.i_d[-1]:.3g} A")

# %% Eight-WL vertical string: erase, read, program WL3, read
vertical = C.default_device(E.vertical_dual_port_stack())
string = S.make_string(vertical, ["LVT", "HVT"] * 4, seed=0)
waveform, windows = S.operation_waveform(8, 3)
trace, final = S.apply_waveform(string, waveform, max_step=1e-6)
low = S.window_current(trace, windows["read_erased"])
high = S.window_current(trace, windows["read_programmed"])
print(f"read after erase {low:.3g} A, after program {high:.3g} A, ratio {high / low:.0f}x")
print("final VTH per WL:", np.round([c.vth_front for c in final.cells], 3))

# The full trace is available as CSV for plotting:
print(trace.to_csv().splitlines()[0])
