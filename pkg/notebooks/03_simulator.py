# %% [markdown]
# # Evaporator model
# Each tube is split into segments; air and refrigerant exchange heat by
# effectiveness-NTU, and the two rows are coupled through the air stream.

# %%
import numpy as np

from hexcircuit import CircuitryVector, HexInstance, HexLayout, decode, orient, simulate
from hexcircuit.simulator import with_air_temperature
from hexcircuit.thermo import sat_props

inst = HexInstance(HexLayout(4))
design = orient(decode(CircuitryVector.from_text("t=8;bits=1000000000010101000000100001")))[0]
res = simulate(design, inst)
print(f"Q = {res.Q:.1f} W   dP = {res.delta_p:.2f} kPa")
print("air/refrigerant duty mismatch:", abs(res.air_duty - res.refrigerant_duty))

# %% [markdown]
# Duty against inlet air temperature.  At the saturation temperature no heat
# is exchanged.

# %%
t_sat = sat_props(inst.refrigerant_pressure).T_sat
for T in np.linspace(t_sat, t_sat + 30, 7):
    q = simulate(design, with_air_temperature(inst, T)).Q
    print(f"T_air = {T:6.2f} C   Q = {q:8.1f} W")

# %% [markdown]
# Spread of duty and pressure drop over every directed design at t = 8.

# %%
from hexcircuit import enumerate_vectors

Q, dP = [], []
for x in enumerate_vectors(inst.layout):
    for d in orient(decode(x)):
        r = simulate(d, inst)
        Q.append(r.Q)
        dP.append(r.delta_p)
Q, dP = np.array(Q), np.array(dP)
print(f"{Q.size} designs, Q in [{Q.min():.0f}, {Q.max():.0f}] W, dP in [{dP.min():.2f}, {dP.max():.1f}] kPa")
