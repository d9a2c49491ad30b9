# %% [markdown]
# # Exhaustive enumeration
# The backtracker lists every feasible vector; orient expands each one into
# its directed combinations.  A closed-form recurrence gives the same counts
# without listing anything.

# %%
import time

import numpy as np

from hexcircuit import HexLayout, count_feasible, count_oracle, enumerate_vectors
from hexcircuit.enumeration import count_deviation

for m in range(1, 7):
    t0 = time.perf_counter()
    sol, comb = count_feasible(HexLayout(m))
    dt = time.perf_counter() - t0
    print(f"t={2 * m:2d}  solutions={sol:6d}  combinations={comb:7d}  recurrence={count_oracle(m)}  {dt:.2f}s")
    note = count_deviation(2 * m, sol, comb)
    if note:
        print("   ", note)

# %% [markdown]
# Circuit count distribution at t = 10.

# %%
from hexcircuit import decode

counts = np.bincount([decode(x).c for x in enumerate_vectors(HexLayout(5))])
for c, n in enumerate(counts):
    if n:
        print(c, "circuits:", n)
