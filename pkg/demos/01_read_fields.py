# %% [markdown]
# Where does read stress land in the ferroelectric?
#
# A single-port cell passes current by raising its own write gate, so every
# pass bias also lands across the ferroelectric. A dual-port cell raises the
# pass gate on the far side of the channel instead; once the channel turns on,
# its electrons absorb that field.

# %%
import numpy as np

from fenand import electrostatics as E
from fenand.cell import DEFAULT_CHANNEL, DEFAULT_PS
from fenand.units import MV_PER_CM

stack = E.fdsoi_stack()
span = (0.0, 4.0)

# %% Field in the ferroelectric versus pass bias, for each state and port
for port in ("WG", "PG"):
    for state in ("HVT", "LVT"):
        curve = E.efe_vs_vpass_curve(stack, state, port, span, 5, DEFAULT_CHANNEL, DEFAULT_PS)
        values = "  ".join(f"{e / MV_PER_CM:+.3f}" for e in curve[:, 1])
        print(f"{port} {state}: E_FE [MV/cm] at 0..4 V -> {values}")

# The HVT cell (P < 0) sees its anti-P field grow with V on the write gate,
# which is what eventually flips it. On the pass gate the same bias pushes
# the field the other way.

# %% Channel screening of a pass-gate bias, LVT cell
for v_pg in (0.0, 2.0, 4.0, 8.0, 12.0, 16.0):
    sol = E.solve_electrostatics(stack, 0.0, v_pg, DEFAULT_PS, DEFAULT_CHANNEL)
    f = E.screening_factor(stack, DEFAULT_PS, v_pg, DEFAULT_CHANNEL)
    print(f"V_PG = {v_pg:5.1f} V  psi = {sol.psi_channel:.3f} V  screening factor = {f:.3f}")

# %% The vertical dual-port geometry has a thinner pass-gate oxide
vertical = E.vertical_dual_port_stack()
print("vertical, 6 V on PG:",
      f"{E.screening_factor(vertical, DEFAULT_PS, 6.0, DEFAULT_CHANNEL):.3f}")
print("depolarization field of an LVT cell:",
      f"{E.depolarization_field(stack, DEFAULT_PS, DEFAULT_CHANNEL) / MV_PER_CM:+.3f} MV/cm")
