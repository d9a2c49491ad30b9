# %% [markdown]
# # Solver comparison tables
# The harness runs each solver on each instance and writes one CSV per
# objective, closing with a geometric mean row per solver.

# %%
import tempfile
from pathlib import Path

from hexcircuit.harness import ComparisonRow, ExperimentPlan, read_table, run_solver_comparison
from hexcircuit.solvers import Budget

out = Path(tempfile.mkdtemp())
plan = ExperimentPlan(instances=(4, 6), objectives=("q",), budget=Budget(max_simulator_calls=300),
                      out_dir=out, seeds=(0,))
run_solver_comparison(plan)
print((out / "compare_q.csv").read_text())

# %%
for row in read_table(out / "compare_q.csv", ComparisonRow):
    print(row.instance, row.solver, row.value)
