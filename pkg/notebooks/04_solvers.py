# %% [markdown]
# # Searching for good circuitries
# Three derivative-free solvers share one budget model: a cap on simulator
# calls (cache misses) and on wall time.

# %%
from hexcircuit import Budget, HexInstance, HexLayout, PenaltyConfig, Problem
from hexcircuit import solve_direct, solve_evolutionary, solve_localsearch

inst = HexInstance(HexLayout(4))
for objective, q_lim in [("q", 3900.0), ("ratio", 3600.0)]:
    for solver in (solve_direct, solve_evolutionary, solve_localsearch):
        rep = solver(Problem(inst, objective, PenaltyConfig(q_lim=q_lim)), Budget(seed=0, max_simulator_calls=400))
        print(f"{rep.solver:6s} {objective:5s} value={rep.best_value:12.4f} calls={rep.calls:4d} "
              f"stop={rep.stop_reason} {rep.best_vector}")

# %% [markdown]
# The ratio objective subtracts a quadratic penalty when the duty falls
# below the floor, so a design under the floor reads as unsolved.

# %%
rep = solve_direct(Problem(inst, "ratio", PenaltyConfig(q_lim=3900.0)), Budget(max_simulator_calls=200))
print("Q =", round(rep.best_Q, 1), "solved:", rep.solved, "table value:", rep.table_value)
