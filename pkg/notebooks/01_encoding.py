# %% [markdown]
# # Circuitry vectors
# A coil with t tubes is described by one bit per unordered tube pair.
# Bits are laid out row-major over the upper triangle, so tube pair (i, j)
# sits at pair_index(i, j, t).

# %%
from hexcircuit import CircuitryVector, HexLayout, decode, encode, orient, pair_index, validate

layout = HexLayout(4)  # 4 tubes per row, t = 8
print(layout.t, "tubes,", layout.n, "bits")
print("pair (1,2) ->", pair_index(1, 2, layout), " pair (7,8) ->", pair_index(7, 8, layout))

# %% [markdown]
# Two circuits of four tubes each.  Decoding returns the circuits in a
# canonical order; orient lists every inlet/outlet choice.

# %%
x = CircuitryVector.from_text("t=8;bits=1000000000010101000000100001")
print(validate(x))
design = decode(x)
print(design.circuits)
for d in orient(design):
    print("  ", d)
assert encode(design) == x

# %% [markdown]
# Infeasible vectors report the first failed check.

# %%
empty = CircuitryVector(layout, (0,) * layout.n)
print(validate(empty))
